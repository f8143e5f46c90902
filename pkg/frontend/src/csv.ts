/**
 * Strict CSV reading for contamlab result files.
 *
 * The files are machine-written: comma-separated, no quoting, one header
 * row, floats in full-precision decimal (possibly "nan"/"inf").  The
 * header must match the declared schema exactly; a missing or unexpected
 * column is a hard error naming the offending columns.
 */

export type ColumnKind = "int" | "float" | "str";

export interface Column {
  name: string;
  kind: ColumnKind;
}

export type Row = Record<string, number | string>;

export class CsvError extends Error {}

export const SCHEMAS: Record<string, Column[]> = {
  mean_oracle: [
    { name: "alpha", kind: "float" },
    { name: "t", kind: "int" },
    { name: "factor_uniform", kind: "float" },
    { name: "factor_hat", kind: "float" },
    { name: "bound_lo", kind: "float" },
    { name: "bound_hi", kind: "float" },
  ],
  mean_mc: [
    { name: "alpha", kind: "float" },
    { name: "scheme", kind: "str" },
    { name: "t", kind: "int" },
    { name: "trace_var", kind: "float" },
    { name: "stderr", kind: "float" },
    { name: "replicates", kind: "int" },
    { name: "seed", kind: "int" },
  ],
  walk: [
    { name: "alpha", kind: "float" },
    { name: "truncation", kind: "int" },
    { name: "replicates", kind: "int" },
    { name: "estimate", kind: "float" },
    { name: "ci_halfwidth", kind: "float" },
  ],
  pac: [
    { name: "learner", kind: "str" },
    { name: "alpha", kind: "float" },
    { name: "n", kind: "int" },
    { name: "t", kind: "int" },
    { name: "loss", kind: "float" },
    { name: "replicate", kind: "int" },
    { name: "seed", kind: "int" },
  ],
};

const INT_RE = /^-?\d+$/;

function parseFloatCell(cell: string, column: string, line: number): number {
  if (cell === "nan") return NaN;
  if (cell === "inf") return Infinity;
  if (cell === "-inf") return -Infinity;
  const value = Number(cell);
  if (cell === "" || Number.isNaN(value)) {
    throw new CsvError(`line ${line}: column ${column}: ${JSON.stringify(cell)} is not a float`);
  }
  return value;
}

function checkHeader(header: string[], schema: Column[]): void {
  const want = schema.map((c) => c.name);
  if (header.length === want.length && header.every((h, i) => h === want[i])) {
    return;
  }
  const missing = want.filter((name) => !header.includes(name));
  const unexpected = header.filter((name) => !want.includes(name));
  const parts = [`header mismatch: expected [${want.join(", ")}]`];
  if (missing.length) parts.push(`missing: ${missing.join(", ")}`);
  if (unexpected.length) parts.push(`unexpected: ${unexpected.join(", ")}`);
  throw new CsvError(parts.join("; "));
}

export function parseCsv(text: string, schema: Column[]): Row[] {
  const lines = text.split("\n");
  while (lines.length && lines[lines.length - 1] === "") lines.pop();
  if (!lines.length) throw new CsvError("empty file: no header row");

  checkHeader(lines[0].split(","), schema);

  const rows: Row[] = [];
  for (let i = 1; i < lines.length; i++) {
    const cells = lines[i].split(",");
    if (cells.length !== schema.length) {
      throw new CsvError(`line ${i + 1}: expected ${schema.length} cells, found ${cells.length}`);
    }
    const row: Row = {};
    for (let j = 0; j < schema.length; j++) {
      const { name, kind } = schema[j];
      const cell = cells[j];
      if (kind === "str") {
        row[name] = cell;
      } else if (kind === "int") {
        if (!INT_RE.test(cell)) {
          throw new CsvError(`line ${i + 1}: column ${name}: ${JSON.stringify(cell)} is not an int`);
        }
        row[name] = parseInt(cell, 10);
      } else {
        row[name] = parseFloatCell(cell, name, i + 1);
      }
    }
    rows.push(row);
  }
  return rows;
}
