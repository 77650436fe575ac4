import { readFileSync } from "node:fs";
import { ShapeMismatch } from "./errors.js";

/**
 * Read a signal vector in the matrix text format: first line "rows cols"
 * with cols = 1, then one value per line.
 */
export function readVector(path: string): Float64Array {
  const lines = readFileSync(path, "utf8")
    .split(/\r?\n/)
    .filter((line) => line.trim().length > 0);
  if (lines.length === 0) {
    throw new ShapeMismatch(`${path}: empty vector file`);
  }
  const header = lines[0].trim().split(/\s+/);
  if (header.length !== 2) {
    throw new ShapeMismatch(`${path}: malformed header "${lines[0]}"`);
  }
  const rows = Number(header[0]);
  const cols = Number(header[1]);
  if (cols !== 1) {
    throw new ShapeMismatch(`${path}: expected a single column, got ${cols}`);
  }
  if (lines.length - 1 !== rows) {
    throw new ShapeMismatch(`${path}: header says ${rows} rows, found ${lines.length - 1}`);
  }
  const out = new Float64Array(rows);
  for (let i = 0; i < rows; i++) {
    const value = Number(lines[i + 1].trim());
    if (Number.isNaN(value)) {
      throw new ShapeMismatch(`${path}: row ${i} is not a number`);
    }
    out[i] = value;
  }
  return out;
}
