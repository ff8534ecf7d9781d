import fs from 'node:fs';
import os from 'node:os';
import path from 'node:path';
import { describe, expect, it } from 'vitest';
import { encodePool, writePool } from '../src/poolfile.js';

function structuralParse(buffer: Buffer) {
  expect(buffer.subarray(0, 4).toString('ascii')).toBe('GLBO');
  const version = buffer.readUInt16LE(4);
  const n = Number(buffer.readBigUInt64LE(6));
  const d = Number(buffer.readBigUInt64LE(14));
  const flags = buffer.readUInt8(22);
  let offset = 23;
  const matrix: number[][] = [];
  for (let i = 0; i < n; i++) {
    const row: number[] = [];
    for (let j = 0; j < d; j++) {
      row.push(buffer.readFloatLE(offset));
      offset += 4;
    }
    matrix.push(row);
  }
  let labels: number[] | null = null;
  if (flags & 1) {
    labels = [];
    for (let i = 0; i < n; i++) {
      labels.push(buffer.readDoubleLE(offset));
      offset += 8;
    }
  }
  const trailer = JSON.parse(buffer.subarray(offset).toString('utf-8'));
  return { version, n, d, flags, matrix, labels, trailer };
}

describe('encodePool', () => {
  it('produces the documented layout', () => {
    const parsed = structuralParse(encodePool({
      ids: ['a', 'b'],
      embeddings: [[1.5, -2.0], [0.25, 8.0]],
      labels: [3.25, -1.5],
      meta: { source: 'test' },
    }));
    expect(parsed.version).toBe(1);
    expect(parsed.n).toBe(2);
    expect(parsed.d).toBe(2);
    expect(parsed.flags).toBe(1);
    expect(parsed.matrix).toEqual([[1.5, -2.0], [0.25, 8.0]]);
    expect(parsed.labels).toEqual([3.25, -1.5]);
    expect(parsed.trailer.ids).toEqual(['a', 'b']);
    expect(parsed.trailer.meta.source).toBe('test');
  });

  it('omits the label block when labels are absent', () => {
    const parsed = structuralParse(encodePool({
      ids: ['a'], embeddings: [[0.5]], labels: null, meta: {},
    }));
    expect(parsed.flags).toBe(0);
    expect(parsed.labels).toBeNull();
  });

  it('rejects ragged rows naming the row', () => {
    expect(() => encodePool({
      ids: ['a', 'b'], embeddings: [[1, 2], [1]], labels: null, meta: {},
    })).toThrow(/row 1/);
  });

  it('rejects non-finite values naming the id', () => {
    expect(() => encodePool({
      ids: ['bad'], embeddings: [[Number.NaN]], labels: null, meta: {},
    })).toThrow(/bad/);
  });

  it('labels survive as float64 exactly', () => {
    const value = 0.1 + 0.2; // not float32-representable
    const parsed = structuralParse(encodePool({
      ids: ['a'], embeddings: [[0]], labels: [value], meta: {},
    }));
    expect(parsed.labels![0]).toBe(value);
  });
});

describe('writePool', () => {
  it('writes atomically, leaving no temp files', () => {
    const dir = fs.mkdtempSync(path.join(os.tmpdir(), 'poolwrite-'));
    const out = path.join(dir, 'pool.bin');
    writePool({ ids: ['a'], embeddings: [[1]], labels: null, meta: {} }, out);
    expect(fs.existsSync(out)).toBe(true);
    const leftovers = fs.readdirSync(dir).filter((f) => f.includes('.tmp'));
    expect(leftovers).toEqual([]);
  });
});
