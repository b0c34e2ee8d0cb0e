/**
 * Branch CSV schema: `s,lambda,sup_norm,l2_norm,gamma1,class,event`.
 * gamma1 and event may be empty; all other cells are finite numbers or the
 * Nehari class label.  Parsing is strict: any deviation is a schema error.
 */

export const BRANCH_COLUMNS = [
  "s", "lambda", "sup_norm", "l2_norm", "gamma1", "class", "event",
] as const;

export const NEHARI_CLASSES = ["Nplus", "Nminus", "Nzero", "NotOnNehari"] as const;
export const EVENTS = ["start", "end", "fold", "lambda_zero_crossing"] as const;

export type NehariClass = (typeof NEHARI_CLASSES)[number];
export type BranchEvent = (typeof EVENTS)[number];

export interface BranchRow {
  s: number;
  lambda: number;
  supNorm: number;
  l2Norm: number;
  gamma1: number | null;
  cls: NehariClass;
  event: BranchEvent | null;
}

export class SchemaError extends Error {}

function parseNumber(cell: string, column: string, line: number): number {
  const value = Number(cell);
  if (cell.trim() === "" || !Number.isFinite(value)) {
    throw new SchemaError(
      `line ${line}: column '${column}' is not a finite number: '${cell}'`,
    );
  }
  return value;
}

export function parseBranchCsv(text: string): BranchRow[] {
  const lines = text.split(/\r?\n/).filter((ln) => ln.length > 0);
  if (lines.length === 0) {
    throw new SchemaError("empty branch CSV");
  }
  if (lines[0] !== BRANCH_COLUMNS.join(",")) {
    throw new SchemaError(
      `bad header: expected '${BRANCH_COLUMNS.join(",")}', got '${lines[0]}'`,
    );
  }
  if (lines.length === 1) {
    throw new SchemaError("branch CSV has no data rows");
  }
  const rows: BranchRow[] = [];
  for (let i = 1; i < lines.length; i++) {
    const cells = lines[i].split(",");
    if (cells.length !== BRANCH_COLUMNS.length) {
      throw new SchemaError(
        `line ${i + 1}: expected ${BRANCH_COLUMNS.length} cells, got ${cells.length}`,
      );
    }
    const cls = cells[5] as NehariClass;
    if (!NEHARI_CLASSES.includes(cls)) {
      throw new SchemaError(`line ${i + 1}: unknown class '${cells[5]}'`);
    }
    let event: BranchEvent | null = null;
    if (cells[6] !== "") {
      if (!EVENTS.includes(cells[6] as BranchEvent)) {
        throw new SchemaError(`line ${i + 1}: unknown event '${cells[6]}'`);
      }
      event = cells[6] as BranchEvent;
    }
    rows.push({
      s: parseNumber(cells[0], "s", i + 1),
      lambda: parseNumber(cells[1], "lambda", i + 1),
      supNorm: parseNumber(cells[2], "sup_norm", i + 1),
      l2Norm: parseNumber(cells[3], "l2_norm", i + 1),
      gamma1: cells[4] === "" ? null : parseNumber(cells[4], "gamma1", i + 1),
      cls,
      event,
    });
  }
  return rows;
}

/** Shortest round-trip formatting: String(x) re-parses to the same double. */
function fmt(x: number): string {
  return String(x);
}

export function serializeBranchCsv(rows: BranchRow[]): string {
  const out = [BRANCH_COLUMNS.join(",")];
  for (const row of rows) {
    out.push([
      fmt(row.s),
      fmt(row.lambda),
      fmt(row.supNorm),
      fmt(row.l2Norm),
      row.gamma1 === null ? "" : fmt(row.gamma1),
      row.cls,
      row.event ?? "",
    ].join(","));
  }
  return out.join("\n") + "\n";
}

export interface BranchSidecar {
  epsilon?: number;
  lambda_eps?: number;
}

export function parseSidecar(text: string): BranchSidecar {
  const doc = JSON.parse(text);
  if (typeof doc !== "object" || doc === null) {
    throw new SchemaError("sidecar JSON is not an object");
  }
  const out: BranchSidecar = {};
  if (typeof doc.epsilon === "number") out.epsilon = doc.epsilon;
  if (typeof doc.lambda_eps === "number") out.lambda_eps = doc.lambda_eps;
  return out;
}
