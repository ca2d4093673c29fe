#!/usr/bin/env node
/**
 * render --spec <figure-spec.json> --out <dir>
 *
 * The spec names a figure kind, the input CSV tables, the fit report and
 * optional slope-guide labels; the renderer writes one SVG plus a caption
 * text file per spec.
 */

import { mkdirSync, readFileSync, writeFileSync } from 'fs';
import { basename, join } from 'path';

import { readReport, readSeries, SchemaError } from './csv.js';
import { FIGURE_KINDS, FigureSpec, renderFigure } from './figure.js';

function usage(): never {
  console.error('usage: z2automaton-plots render --spec <file.json> --out <dir>');
  process.exit(1);
}

export function loadSpec(path: string): FigureSpec {
  const raw = JSON.parse(readFileSync(path, 'utf8')) as FigureSpec;
  if (!FIGURE_KINDS.includes(raw.kind)) {
    throw new SchemaError(`${path}: kind must be one of ${FIGURE_KINDS.join(', ')}`);
  }
  if (!Array.isArray(raw.inputs) || raw.inputs.length === 0) {
    throw new SchemaError(`${path}: inputs must be a non-empty list of CSV paths`);
  }
  if (typeof raw.report !== 'string') {
    throw new SchemaError(`${path}: report must point at the fit report JSON`);
  }
  return raw;
}

export function renderSpecFile(specPath: string, outDir: string): { svgPath: string; captionPath: string } {
  const spec = loadSpec(specPath);
  const tables = spec.inputs.map((p) => readSeries(p));
  const report = readReport(spec.report);
  const { svg, caption } = renderFigure(spec, tables, report);
  mkdirSync(outDir, { recursive: true });
  const stem = spec.out ?? basename(specPath).replace(/\.json$/, '');
  const svgPath = join(outDir, `${stem}.svg`);
  const captionPath = join(outDir, `${stem}.txt`);
  writeFileSync(svgPath, svg);
  writeFileSync(captionPath, caption + '\n');
  return { svgPath, captionPath };
}

function main(argv: string[]): number {
  if (argv[0] !== 'render') usage();
  let spec = '';
  let out = '.';
  for (let i = 1; i < argv.length; i++) {
    if (argv[i] === '--spec') spec = argv[++i] ?? '';
    else if (argv[i] === '--out') out = argv[++i] ?? '';
    else usage();
  }
  if (!spec) usage();
  try {
    const { svgPath, captionPath } = renderSpecFile(spec, out);
    console.log(`wrote ${svgPath} and ${captionPath}`);
    return 0;
  } catch (e) {
    if (e instanceof SchemaError) {
      console.error(`schema error: ${e.message}`);
      return 2;
    }
    console.error(`error: ${e instanceof Error ? e.message : String(e)}`);
    return 3;
  }
}

if (import.meta.url === `file://${process.argv[1]}`) {
  process.exit(main(process.argv.slice(2)));
}
