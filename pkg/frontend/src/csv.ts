import { readFileSync } from "node:fs";
import { SchemaMismatch } from "./errors.js";

export const TRACE_HEADER = ["t", "loss", "dist_to_opt", "support_recall", "step_norm"];

export interface TraceRow {
  t: number;
  loss: number;
  dist_to_opt: number | null;
  support_recall: number | null;
  step_norm: number;
}

/** Parse a solver trace CSV; optional columns may be blank. */
export function readTraceCsv(path: string): TraceRow[] {
  const text = readFileSync(path, "utf8");
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines.length === 0) {
    throw new SchemaMismatch(`${path}: empty file, expected header ${TRACE_HEADER.join(",")}`);
  }
  const header = lines[0].split(",");
  for (let i = 0; i < TRACE_HEADER.length; i++) {
    if (header[i] !== TRACE_HEADER[i]) {
      throw new SchemaMismatch(
        `${path}: column ${i} is ${JSON.stringify(header[i] ?? "")}, expected "${TRACE_HEADER[i]}"`,
      );
    }
  }
  if (header.length !== TRACE_HEADER.length) {
    throw new SchemaMismatch(
      `${path}: unexpected extra column ${JSON.stringify(header[TRACE_HEADER.length])}`,
    );
  }

  const rows: TraceRow[] = [];
  for (let ln = 1; ln < lines.length; ln++) {
    const parts = lines[ln].split(",");
    if (parts.length !== TRACE_HEADER.length) {
      throw new SchemaMismatch(`${path}: row ${ln} has ${parts.length} fields`);
    }
    rows.push({
      t: requireNumber(parts[0], path, ln, "t"),
      loss: requireNumber(parts[1], path, ln, "loss"),
      dist_to_opt: optionalNumber(parts[2], path, ln, "dist_to_opt"),
      support_recall: optionalNumber(parts[3], path, ln, "support_recall"),
      step_norm: requireNumber(parts[4], path, ln, "step_norm"),
    });
  }
  return rows;
}

function requireNumber(raw: string, path: string, line: number, column: string): number {
  const value = Number(raw);
  if (raw === "" || Number.isNaN(value)) {
    throw new SchemaMismatch(`${path}: row ${line} column "${column}" is not a number: ${raw}`);
  }
  return value;
}

function optionalNumber(raw: string, path: string, line: number, column: string): number | null {
  if (raw === "") return null;
  return requireNumber(raw, path, line, column);
}
