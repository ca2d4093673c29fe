import { mkdtempSync, writeFileSync } from 'fs';
import { tmpdir } from 'os';
import { join } from 'path';
import { describe, expect, it } from 'vitest';

import { SchemaError, findFit, parseSeriesCsv, readReport, readSeries, systemSize } from '../src/csv.js';

const GOOD = 'x,mean,stderr,n\n1.0,0.5,0.01,100\n2.0,0.4,0.01,100\n';

describe('parseSeriesCsv', () => {
  it('parses the documented schema', () => {
    const t = parseSeriesCsv(GOOD);
    expect(t.x).toEqual([1, 2]);
    expect(t.mean).toEqual([0.5, 0.4]);
    expect(t.n).toEqual([100, 100]);
  });

  it('names a missing column', () => {
    expect(() => parseSeriesCsv('x,mean,n\n1,2,3\n')).toThrowError(/missing column 'stderr'/);
  });

  it('rejects unknown columns', () => {
    expect(() => parseSeriesCsv('x,mean,stderr,n,zap\n1,2,3,4,5\n')).toThrowError(/unexpected column 'zap'/);
  });

  it('flags non-numeric cells with line info', () => {
    expect(() => parseSeriesCsv('x,mean,stderr,n\n1,oops,0,1\n')).toThrowError(/line 2.*'mean'/);
  });

  it('flags ragged rows', () => {
    expect(() => parseSeriesCsv('x,mean,stderr,n\n1,2,3\n')).toThrowError(/3 fields/);
  });
});

describe('readSeries + sidecar', () => {
  it('round-trips axis and metadata', () => {
    const dir = mkdtempSync(join(tmpdir(), 'plots-'));
    writeFileSync(join(dir, 't.csv'), GOOD);
    writeFileSync(join(dir, 't.json'), JSON.stringify({ axis: 'chord_length', config: { L: 64 } }));
    const t = readSeries(join(dir, 't.csv'));
    expect(t.axis).toBe('chord_length');
    expect(systemSize(t)).toBe(64);
  });

  it('systemSize demands config.L', () => {
    const t = { axis: 'time', x: [1], mean: [1], stderr: [0], n: [1], metadata: {} };
    expect(() => systemSize(t)).toThrowError(SchemaError);
  });
});

describe('readReport', () => {
  it('loads fits and finds labels', () => {
    const dir = mkdtempSync(join(tmpdir(), 'plots-'));
    const report = {
      kind: 'two_species',
      points: [
        { label: 'a', params: { p: 0.5 }, fits: [{ label: 'lambda1', value: 0.2483, stderr: 0.003 }] },
      ],
    };
    const path = join(dir, 'fit_report.json');
    writeFileSync(path, JSON.stringify(report));
    const got = readReport(path);
    expect(findFit(got, 'lambda1')?.value).toBeCloseTo(0.2483, 10);
    expect(findFit(got, 'nope')).toBeUndefined();
  });
});
