/**
 * Candidate pool binary writer, matching the optimizer's loader:
 * magic "GLBO", version u16=1, n u64, d u64, flag u8 (bit0 = labels),
 * n*d float32 LE row-major embeddings, optional n float64 LE labels,
 * then a UTF-8 JSON trailer {ids, meta}. Writes are atomic (temp file +
 * rename) so a crashed export never leaves a partial pool behind.
 */

import fs from 'node:fs';
import path from 'node:path';

const MAGIC = Buffer.from('GLBO', 'ascii');
const VERSION = 1;

export interface PoolData {
  ids: string[];
  embeddings: number[][];
  labels: number[] | null;
  meta: Record<string, string>;
}

export function encodePool(data: PoolData): Buffer {
  const n = data.embeddings.length;
  if (n === 0) throw new Error('pool must hold at least one row');
  const d = data.embeddings[0].length;
  if (data.ids.length !== n) {
    throw new Error(`${data.ids.length} ids for ${n} rows`);
  }
  for (const [i, row] of data.embeddings.entries()) {
    if (row.length !== d) {
      throw new Error(`row ${i} has dimension ${row.length}, expected ${d}`);
    }
    for (const value of row) {
      if (!Number.isFinite(value)) {
        throw new Error(`non-finite embedding value at id ${data.ids[i]}`);
      }
    }
  }
  if (data.labels !== null && data.labels.length !== n) {
    throw new Error(`${data.labels.length} labels for ${n} rows`);
  }

  const header = Buffer.alloc(4 + 2 + 8 + 8 + 1);
  MAGIC.copy(header, 0);
  header.writeUInt16LE(VERSION, 4);
  header.writeBigUInt64LE(BigInt(n), 6);
  header.writeBigUInt64LE(BigInt(d), 14);
  header.writeUInt8(data.labels !== null ? 1 : 0, 22);

  const matrix = Buffer.alloc(n * d * 4);
  for (let i = 0; i < n; i++) {
    for (let j = 0; j < d; j++) {
      matrix.writeFloatLE(Math.fround(data.embeddings[i][j]), (i * d + j) * 4);
    }
  }

  const parts = [header, matrix];
  if (data.labels !== null) {
    const labels = Buffer.alloc(n * 8);
    data.labels.forEach((value, i) => labels.writeDoubleLE(value, i * 8));
    parts.push(labels);
  }
  parts.push(Buffer.from(JSON.stringify({ ids: data.ids, meta: data.meta }), 'utf-8'));
  return Buffer.concat(parts);
}

export function writePool(data: PoolData, outPath: string): void {
  const encoded = encodePool(data);
  const dir = path.dirname(path.resolve(outPath));
  fs.mkdirSync(dir, { recursive: true });
  const temp = path.join(dir, `.${path.basename(outPath)}.tmp-${process.pid}`);
  fs.writeFileSync(temp, encoded);
  fs.renameSync(temp, outPath);
}
