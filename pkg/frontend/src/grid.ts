import { writeFileSync } from "node:fs";
import { ShapeMismatch } from "./errors.js";
import { encodePng } from "./png.js";
import { readVector } from "./vec.js";

export interface GridSpec {
  vecPaths: string[];
  rows: number; // image height in pixels
  cols: number; // image width in pixels
  outPath: string;
  scale?: number; // nearest-neighbor upscale factor
  gap?: number; // separator width between panels, in output pixels
}

/** Clamp a signal value to the displayable 8-bit range. */
export function clampByte(value: number): number {
  return Math.round(Math.min(Math.max(value, 0), 255));
}

/**
 * Render signal vectors as side-by-side grayscale panels.  Values are
 * clamped to [0, 255]; each vector must have length rows*cols.
 */
export function plotImageGrid(spec: GridSpec): void {
  if (spec.vecPaths.length === 0) {
    throw new ShapeMismatch("need at least one signal vector");
  }
  if (spec.rows < 1 || spec.cols < 1) {
    throw new ShapeMismatch(`invalid panel shape ${spec.rows}x${spec.cols}`);
  }
  const scale = spec.scale ?? 8;
  const gap = spec.gap ?? scale;
  const panels = spec.vecPaths.map((path) => {
    const v = readVector(path);
    if (v.length !== spec.rows * spec.cols) {
      throw new ShapeMismatch(
        `${path}: vector length ${v.length} != ${spec.rows}x${spec.cols}`,
      );
    }
    return v;
  });

  const panelW = spec.cols * scale;
  const panelH = spec.rows * scale;
  const width = panels.length * panelW + (panels.length - 1) * gap;
  const height = panelH;
  const rgb = new Uint8Array(width * height * 3);
  rgb.fill(128); // separator gray

  panels.forEach((panel, p) => {
    const xOff = p * (panelW + gap);
    for (let r = 0; r < spec.rows; r++) {
      for (let c = 0; c < spec.cols; c++) {
        const value = clampByte(panel[r * spec.cols + c]);
        for (let dy = 0; dy < scale; dy++) {
          for (let dx = 0; dx < scale; dx++) {
            const i = 3 * ((r * scale + dy) * width + xOff + c * scale + dx);
            rgb[i] = value;
            rgb[i + 1] = value;
            rgb[i + 2] = value;
          }
        }
      }
    }
  });

  writeFileSync(spec.outPath, encodePng(width, height, rgb));
}
