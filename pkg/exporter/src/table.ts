/**
 * Input tables: CSV with a header row. Optionally carries an `id` column
 * (otherwise row numbers become ids) and a `y` column of objective labels,
 * copied through to the pool file.
 */

import fs from 'node:fs';
import Papa from 'papaparse';

export interface Table {
  columns: string[];
  rows: Record<string, string>[];
  ids: string[];
  labels: number[] | null;
}

export function readTable(path: string): Table {
  const text = fs.readFileSync(path, 'utf-8');
  const parsed = Papa.parse<Record<string, string>>(text.trim(), {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const first = parsed.errors[0];
    throw new Error(`${path}: row ${first.row}: ${first.message}`);
  }
  const columns = parsed.meta.fields ?? [];
  if (columns.length === 0) {
    throw new Error(`${path}: missing header row`);
  }
  const rows = parsed.data;
  if (rows.length === 0) {
    throw new Error(`${path}: no data rows`);
  }

  const ids = columns.includes('id')
    ? rows.map((row) => row.id)
    : rows.map((_row, i) => `row${String(i).padStart(5, '0')}`);
  if (new Set(ids).size !== ids.length) {
    throw new Error(`${path}: duplicate values in the id column`);
  }

  let labels: number[] | null = null;
  if (columns.includes('y')) {
    labels = rows.map((row, i) => {
      const value = Number(row.y);
      if (!Number.isFinite(value)) {
        throw new Error(`${path}: row ${i}: label ${JSON.stringify(row.y)} is not finite`);
      }
      return value;
    });
  }
  return { columns, rows, ids, labels };
}
