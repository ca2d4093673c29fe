import { describe, expect, it } from 'vitest';

import { FitReport, SeriesTable } from '../src/csv.js';
import { renderFigure } from '../src/figure.js';
import { extent, linearTicks, logScale, linearScale, logTicks } from '../src/scale.js';

function table(x: number[], mean: number[], L = 32, axis = 'time'): SeriesTable {
  return {
    axis,
    x,
    mean,
    stderr: mean.map(() => 0.01),
    n: mean.map(() => 100),
    metadata: { config: { L, p: 0.7 } },
  };
}

const REPORT: FitReport = {
  kind: 'purification',
  points: [
    {
      label: 'pt',
      params: { p: 0.7 },
      fits: [
        { label: 'lambda1', value: 0.2914, stderr: 0.01 },
        { label: 'q_exponent', value: -0.1875, stderr: 0.005 },
      ],
    },
  ],
  collapse: { best_z: 2.01, z_stderr: 0.05 },
};

function geom(n: number, a: number, b: number): number[] {
  return Array.from({ length: n }, (_, i) => a * Math.pow(b / a, i / (n - 1)));
}

describe('scales', () => {
  it('linear scale maps endpoints', () => {
    const s = linearScale([0, 10], [100, 200]);
    expect(s.map(0)).toBe(100);
    expect(s.map(10)).toBe(200);
  });

  it('log scale rejects nonpositive domains', () => {
    expect(() => logScale([0, 10], [0, 1])).toThrowError(/positive/);
  });

  it('tick helpers produce ordered in-range values', () => {
    const lt = linearTicks(0, 1.1);
    expect(lt[0]).toBeGreaterThanOrEqual(0);
    expect(lt[lt.length - 1]).toBeLessThanOrEqual(1.100001);
    const gt = logTicks(1, 1000);
    expect(gt).toEqual([1, 10, 100, 1000]);
  });

  it('extent can ignore nonpositive values', () => {
    expect(extent([0, -1, 2, 8], true)).toEqual([2, 8]);
  });
});

describe('renderFigure', () => {
  it('growth figure annotates the report slope, not a refit', () => {
    const x = geom(30, 1, 500);
    const tab = table(x, x.map((v) => 0.999 * Math.log(v) + 0.2));
    const { svg, caption } = renderFigure(
      { kind: 'growth_loglinear', inputs: ['t.csv'], report: 'r.json', guides: ['lambda1'] },
      [tab], REPORT);
    // the drawn value is exactly the report's 0.2914 even though the data
    // slope is ~1: plots never fit
    expect(svg).toContain('lambda1=0.2914');
    expect(caption).toContain('lambda1 = 0.2914');
    expect(svg).not.toContain('0.999');
  });

  it('survival figure draws a power-law guide', () => {
    const x = geom(25, 1, 300);
    const tab = table(x, x.map((v) => Math.pow(v, -0.2)));
    const { svg } = renderFigure(
      { kind: 'survival_loglog', inputs: ['q.csv'], report: 'r.json', guides: ['q_exponent'] },
      [tab], REPORT);
    expect(svg).toContain('q_exponent=-0.1875');
  });

  it('collapse rescales by the report exponent', () => {
    const curves = [32, 48, 64].map((L) =>
      table(geom(25, 1, 2 * L * L), geom(25, 1, 2 * L * L).map((t) => Math.exp(-t / (L * L)) + 1e-5), L));
    const { svg, caption } = renderFigure(
      { kind: 'collapse', inputs: ['a', 'b', 'c'], report: 'r.json' },
      curves, REPORT);
    expect(svg).toContain('z=2.010');
    expect(caption).toContain('best_z = 2.0100');
  });

  it('missing guide label is a schema error', () => {
    const tab = table(geom(10, 1, 50), geom(10, 1, 50).map((v) => 1 / v));
    expect(() => renderFigure(
      { kind: 'survival_loglog', inputs: ['x'], report: 'r', guides: ['nope'] },
      [tab], REPORT)).toThrowError(/no fit labelled 'nope'/);
  });

  it('collapse without report.collapse is a schema error', () => {
    const tab = table(geom(10, 1, 50), geom(10, 1, 50).map((v) => 1 / v));
    const r: FitReport = { kind: 'purification', points: [] };
    expect(() => renderFigure(
      { kind: 'collapse', inputs: ['x'], report: 'r' }, [tab, tab, tab], r))
      .toThrowError(/report.collapse/);
  });

  it('steady-state figure renders with error bars and legend', () => {
    const x = [2, 4, 8, 16, 24, 32];
    const tab = table(x, x.map((v) => 0.6 * Math.log(v)), 128, 'chord_length');
    const { svg } = renderFigure(
      { kind: 'steady_state_scaling', inputs: ['s.csv'], report: 'r.json', guides: [] },
      [tab], REPORT);
    expect(svg).toContain('<svg');
    expect(svg).toContain('L=128');
  });
});
