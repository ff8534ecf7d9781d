/**
 * Template rendering: named `{placeholder}` fields filled from table rows.
 *
 * Rendering is deterministic and total: every placeholder must resolve for
 * every row, and a missing column is an error naming the placeholder. A
 * template without placeholders passes rows through unchanged only in the
 * degenerate single-identifier case handled by `identityTemplate`.
 */

const PLACEHOLDER = /\{([A-Za-z_][A-Za-z0-9_]*)\}/g;

export function templateFields(template: string): string[] {
  const names = new Set<string>();
  for (const match of template.matchAll(PLACEHOLDER)) {
    names.add(match[1]);
  }
  return [...names];
}

export function renderRow(template: string, row: Record<string, string>): string {
  return template.replace(PLACEHOLDER, (_whole, name: string) => {
    const value = row[name];
    if (value === undefined) {
      throw new Error(`template placeholder {${name}} has no matching column`);
    }
    return value;
  });
}

export function renderAll(
  template: string,
  rows: Record<string, string>[],
): string[] {
  const missing = new Set<string>();
  for (const field of templateFields(template)) {
    if (rows.some((row) => row[field] === undefined)) missing.add(field);
  }
  if (missing.size > 0) {
    throw new Error(
      `template placeholders without matching columns: ${[...missing].sort().join(', ')}`,
    );
  }
  return rows.map((row) => renderRow(template, row));
}

/**
 * Single-identifier tasks (e.g. a molecular string) reduce the template to
 * one column passed through unchanged.
 */
export function identityTemplate(column: string): string {
  return `{${column}}`;
}
