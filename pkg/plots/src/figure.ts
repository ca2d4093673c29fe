/**
 * The four figure kinds regenerated from run outputs.
 *
 * Figures are pure views: every number they display (slope guides, the
 * collapse exponent) comes from the fit report, never from refitting.
 */

import { FitEntry, FitReport, SchemaError, SeriesTable, findFit, systemSize } from './csv.js';
import { Scale, extent, linearScale, logScale } from './scale.js';
import { SERIES_COLORS, SvgDoc } from './svg.js';

export const FIGURE_KINDS = [
  'steady_state_scaling',
  'growth_loglinear',
  'survival_loglog',
  'collapse',
] as const;
export type FigureKind = (typeof FIGURE_KINDS)[number];

export interface FigureSpec {
  kind: FigureKind;
  inputs: string[];
  report: string;
  title?: string;
  /** report labels whose fitted values are drawn as dashed slope guides */
  guides?: string[];
  out?: string;
}

export interface RenderedFigure {
  svg: string;
  caption: string;
}

const W = 560;
const H = 400;
const M = { left: 62, right: 16, top: 30, bottom: 46 };

interface Curve {
  table: SeriesTable;
  label: string;
}

function seriesLabel(t: SeriesTable, i: number): string {
  const conf = t.metadata.config as Record<string, unknown> | undefined;
  const p = conf?.p;
  const L = conf?.L;
  const bits: string[] = [];
  if (typeof L === 'number') bits.push(`L=${L}`);
  if (typeof p === 'number') bits.push(`p=${p}`);
  return bits.length ? bits.join(', ') : `series ${i + 1}`;
}

function frame(doc: SvgDoc, xs: Scale, ys: Scale, xlab: string, ylab: string): void {
  const x0 = M.left;
  const x1 = W - M.right;
  const y0 = H - M.bottom;
  const y1 = M.top;
  doc.line(x0, y0, x1, y0);
  doc.line(x0, y0, x0, y1);
  for (const t of xs.ticks()) {
    const px = xs.map(t);
    doc.line(px, y0, px, y0 + 4);
    doc.text(px, y0 + 16, formatTick(t), { 'text-anchor': 'middle' });
  }
  for (const t of ys.ticks()) {
    const py = ys.map(t);
    doc.line(x0 - 4, py, x0, py);
    doc.text(x0 - 7, py + 3, formatTick(t), { 'text-anchor': 'end' });
  }
  doc.text((x0 + x1) / 2, H - 10, xlab, { 'text-anchor': 'middle', 'font-size': 12 });
  doc.text(14, (y0 + y1) / 2, ylab, {
    'text-anchor': 'middle',
    'font-size': 12,
    transform: `rotate(-90 14 ${(y0 + y1) / 2})`,
  });
}

function formatTick(v: number): string {
  if (v !== 0 && (Math.abs(v) >= 1e4 || Math.abs(v) < 1e-2)) return v.toExponential(0);
  return Number(v.toPrecision(4)).toString();
}

function drawCurves(doc: SvgDoc, curves: Curve[], xs: Scale, ys: Scale,
                    xof: (t: SeriesTable, x: number) => number,
                    filter: (x: number, y: number) => boolean): void {
  curves.forEach((c, ci) => {
    const color = SERIES_COLORS[ci % SERIES_COLORS.length];
    const pts: [number, number][] = [];
    for (let i = 0; i < c.table.x.length; i++) {
      const xv = xof(c.table, c.table.x[i]);
      const yv = c.table.mean[i];
      if (!filter(xv, yv)) continue;
      pts.push([xs.map(xv), ys.map(yv)]);
      const e = c.table.stderr[i];
      if (e > 0 && filter(xv, yv - e) && filter(xv, yv + e)) {
        doc.line(xs.map(xv), ys.map(yv - e), xs.map(xv), ys.map(yv + e), {
          stroke: color,
          'stroke-width': 0.7,
        });
      }
    }
    doc.path(pts, { stroke: color });
    if (pts.length > 0) {
      doc.text(W - M.right - 4, M.top + 14 * (ci + 1), c.label, {
        'text-anchor': 'end',
        fill: color,
      });
    }
  });
}

function guideEntries(report: FitReport, spec: FigureSpec): FitEntry[] {
  const labels = spec.guides ?? [];
  const out: FitEntry[] = [];
  for (const label of labels) {
    const fit = findFit(report, label);
    if (!fit) throw new SchemaError(`report has no fit labelled '${label}'`);
    out.push(fit);
  }
  return out;
}

/** y = a*ln(x) guide through a reference point, drawn dashed. */
function drawLogSlopeGuide(doc: SvgDoc, fit: FitEntry, xs: Scale, ys: Scale,
                           xRef: number, yRef: number): void {
  const [d0, d1] = xs.domain;
  const pts: [number, number][] = [];
  for (let k = 0; k <= 40; k++) {
    const x = d0 * Math.pow(d1 / d0, k / 40);
    const y = yRef + fit.value * Math.log(x / xRef);
    pts.push([xs.map(x), ys.map(y)]);
  }
  doc.path(pts, { stroke: '#444', 'stroke-dasharray': '5 4', 'stroke-width': 1 });
  doc.text(xs.map(d1) - 4, ys.map(yRef + fit.value * Math.log(d1 / xRef)) - 6,
    `${fit.label}=${fit.value.toFixed(4)}`, { 'text-anchor': 'end', fill: '#444' });
}

/** y ~ x^a guide through a reference point on log-log axes. */
function drawPowerGuide(doc: SvgDoc, fit: FitEntry, xs: Scale, ys: Scale,
                        xRef: number, yRef: number): void {
  const [d0, d1] = xs.domain;
  const pts: [number, number][] = [];
  for (let k = 0; k <= 40; k++) {
    const x = d0 * Math.pow(d1 / d0, k / 40);
    const y = yRef * Math.pow(x / xRef, fit.value);
    if (y <= ys.domain[0] || y > ys.domain[1] * 1.5) continue;
    pts.push([xs.map(x), ys.map(y)]);
  }
  doc.path(pts, { stroke: '#444', 'stroke-dasharray': '5 4', 'stroke-width': 1 });
  doc.text(W - M.right - 4, M.top + 14, `${fit.label}=${fit.value.toFixed(4)}`, {
    'text-anchor': 'end',
    fill: '#444',
  });
}

export function renderFigure(spec: FigureSpec, tables: SeriesTable[], report: FitReport): RenderedFigure {
  if (tables.length === 0) throw new SchemaError('figure needs at least one input table');
  const curves: Curve[] = tables.map((t, i) => ({ table: t, label: seriesLabel(t, i) }));
  const doc = new SvgDoc(W, H);
  const guides = guideEntries(report, spec);
  const captionBits: string[] = [];
  const xr: [number, number] = [M.left, W - M.right];
  const yr: [number, number] = [H - M.bottom, M.top];

  if (spec.kind === 'steady_state_scaling' || spec.kind === 'growth_loglinear') {
    // mean against log x; slope guides are log prefactors from the report
    const allX = tables.flatMap((t) => t.x);
    const allY = tables.flatMap((t) => t.mean);
    const xs = logScale(extent(allX, true), xr);
    const ys = linearScale(padded(extent(allY)), yr);
    const xlab = spec.kind === 'steady_state_scaling' ? 'chord length' : 't';
    frame(doc, xs, ys, xlab, 'mean');
    drawCurves(doc, curves, xs, ys, (_t, x) => x, (x, _y) => x > 0);
    const t0 = tables[0];
    const mid = Math.floor(t0.x.length / 2);
    for (const g of guides) {
      drawLogSlopeGuide(doc, g, xs, ys, t0.x[mid], t0.mean[mid]);
      captionBits.push(`${g.label} = ${g.value.toFixed(4)}`);
    }
  } else if (spec.kind === 'survival_loglog') {
    const allX = tables.flatMap((t) => t.x);
    const allY = tables.flatMap((t) => t.mean);
    const xs = logScale(extent(allX, true), xr);
    const ys = logScale(extent(allY, true), yr);
    frame(doc, xs, ys, 't', 'fraction');
    drawCurves(doc, curves, xs, ys, (_t, x) => x, (x, y) => x > 0 && y > 0);
    const t0 = tables[0];
    const ref = Math.max(1, Math.floor(t0.x.length / 4));
    for (const g of guides) {
      drawPowerGuide(doc, g, xs, ys, t0.x[ref], t0.mean[ref]);
      captionBits.push(`${g.label} = ${g.value.toFixed(4)}`);
    }
  } else if (spec.kind === 'collapse') {
    const collapse = report.collapse;
    if (!collapse) throw new SchemaError('collapse figure needs report.collapse');
    const z = collapse.best_z;
    const rescaled = tables.map((t) => t.x.map((x) => x / Math.pow(systemSize(t), z)));
    const xs = logScale(extent(rescaled.flat(), true), xr);
    const ys = logScale(extent(tables.flatMap((t) => t.mean), true), yr);
    frame(doc, xs, ys, `t / L^z  (z=${z.toFixed(3)})`, 'mean');
    drawCurves(doc, curves, xs, ys, (t, x) => x / Math.pow(systemSize(t), z), (x, y) => x > 0 && y > 0);
    captionBits.push(`best_z = ${z.toFixed(4)} +- ${collapse.z_stderr.toFixed(4)}`);
  } else {
    throw new SchemaError(`unknown figure kind '${(spec as FigureSpec).kind}'`);
  }

  if (spec.title) doc.text(W / 2, 18, spec.title, { 'text-anchor': 'middle', 'font-size': 13 });
  const caption = [
    spec.title ?? spec.kind,
    `${tables.length} series from ${spec.inputs.length} table(s).`,
    captionBits.length ? `Annotated values from the fit report: ${captionBits.join('; ')}.` : 'No slope annotations requested.',
  ].join(' ');
  return { svg: doc.render(), caption };
}

function padded([lo, hi]: [number, number]): [number, number] {
  const pad = (hi - lo) * 0.06 || 0.5;
  return [lo - pad, hi + pad];
}
