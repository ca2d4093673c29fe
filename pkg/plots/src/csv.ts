/**
 * Readers for the simulation outputs: observable tables as CSV with a
 * JSON sidecar, plus the runner's fit report.
 */

import { readFileSync, existsSync } from 'fs';

export interface SeriesTable {
  axis: string;
  x: number[];
  mean: number[];
  stderr: number[];
  n: number[];
  metadata: Record<string, unknown>;
}

export const SERIES_COLUMNS = ['x', 'mean', 'stderr', 'n'] as const;

export class SchemaError extends Error {}

export function parseSeriesCsv(text: string, origin = '<csv>'): Omit<SeriesTable, 'axis' | 'metadata'> {
  const lines = text.split(/\r?\n/).filter((l) => l.trim().length > 0);
  if (lines.length === 0) throw new SchemaError(`${origin}: empty file`);
  const header = lines[0].split(',').map((h) => h.trim());
  for (const want of SERIES_COLUMNS) {
    if (!header.includes(want)) {
      throw new SchemaError(`${origin}: missing column '${want}' (header: ${header.join(',')})`);
    }
  }
  for (const got of header) {
    if (!(SERIES_COLUMNS as readonly string[]).includes(got)) {
      throw new SchemaError(`${origin}: unexpected column '${got}'`);
    }
  }
  const idx = Object.fromEntries(header.map((h, i) => [h, i]));
  const x: number[] = [];
  const mean: number[] = [];
  const stderr: number[] = [];
  const n: number[] = [];
  for (let li = 1; li < lines.length; li++) {
    const parts = lines[li].split(',');
    if (parts.length !== header.length) {
      throw new SchemaError(`${origin}: line ${li + 1} has ${parts.length} fields, expected ${header.length}`);
    }
    const num = (col: string): number => {
      const v = Number(parts[idx[col]]);
      if (!Number.isFinite(v)) {
        throw new SchemaError(`${origin}: line ${li + 1}, column '${col}' is not numeric`);
      }
      return v;
    };
    x.push(num('x'));
    mean.push(num('mean'));
    stderr.push(num('stderr'));
    n.push(num('n'));
  }
  return { x, mean, stderr, n };
}

export function readSeries(csvPath: string): SeriesTable {
  const body = parseSeriesCsv(readFileSync(csvPath, 'utf8'), csvPath);
  const sidecar = csvPath.replace(/\.csv$/, '.json');
  let metadata: Record<string, unknown> = {};
  let axis = 'time';
  if (existsSync(sidecar)) {
    metadata = JSON.parse(readFileSync(sidecar, 'utf8'));
    if (typeof metadata.axis === 'string') {
      axis = metadata.axis;
      delete metadata.axis;
    }
  }
  return { axis, metadata, ...body };
}

export interface FitEntry {
  label: string;
  value: number;
  stderr?: number;
  window?: [number, number] | null;
  kind?: string;
}

export interface FitReport {
  kind: string;
  points: { label: string; params: Record<string, unknown>; fits: FitEntry[] }[];
  collapse?: { best_z: number; z_stderr: number };
}

export function readReport(path: string): FitReport {
  const raw = JSON.parse(readFileSync(path, 'utf8')) as FitReport;
  if (!Array.isArray(raw.points)) {
    throw new SchemaError(`${path}: fit report has no points array`);
  }
  return raw;
}

/** First fit entry with the given label anywhere in the report. */
export function findFit(report: FitReport, label: string): FitEntry | undefined {
  for (const pt of report.points) {
    for (const f of pt.fits) if (f.label === label) return f;
  }
  return undefined;
}

export function systemSize(table: SeriesTable): number {
  const cfg = table.metadata.config as Record<string, unknown> | undefined;
  const L = cfg?.L;
  if (typeof L !== 'number') {
    throw new SchemaError('table metadata carries no config.L (needed for collapse)');
  }
  return L;
}
