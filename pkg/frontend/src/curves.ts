import { writeFileSync } from "node:fs";
import { readTraceCsv, TraceRow } from "./csv.js";
import { SchemaMismatch } from "./errors.js";
import { encodePng } from "./png.js";
import { BLACK, GLYPH_HEIGHT, GRID, PALETTE, Raster, textWidth } from "./raster.js";

export type YField = "loss" | "dist_to_opt";

export interface CurveInput {
  path: string;
  label: string;
}

export interface CurvesSpec {
  inputs: CurveInput[];
  yField: YField;
  logScale?: boolean; // loss defaults to log; the flag forces it for dist too
  outPath: string;
  width?: number;
  height?: number;
}

interface Series {
  label: string;
  t: number[];
  y: (number | null)[];
}

const MARGIN = { left: 78, right: 16, top: 16, bottom: 44 };

function loadSeries(inputs: CurveInput[], yField: YField): Series[] {
  if (inputs.length === 0) {
    throw new SchemaMismatch("need at least one input CSV");
  }
  const series = inputs.map((input) => {
    const rows = readTraceCsv(input.path);
    if (rows.length === 0) {
      throw new SchemaMismatch(`${input.path}: no data rows`);
    }
    return {
      label: input.label,
      t: rows.map((r: TraceRow) => r.t),
      y: rows.map((r: TraceRow) => r[yField]),
    };
  });
  const grid = series[0].t.join(",");
  for (const s of series.slice(1)) {
    if (s.t.join(",") !== grid) {
      throw new SchemaMismatch(`inputs do not share the iteration grid (label ${s.label})`);
    }
  }
  for (const s of series) {
    if (s.y.every((v) => v === null)) {
      throw new SchemaMismatch(`column "${yField}" is empty for label ${s.label}`);
    }
  }
  return series;
}

function niceLinearTicks(lo: number, hi: number, target = 6): number[] {
  if (hi <= lo) return [lo];
  const span = hi - lo;
  const step0 = Math.pow(10, Math.floor(Math.log10(span / target)));
  let step = step0;
  for (const mult of [1, 2, 5, 10]) {
    step = step0 * mult;
    if (span / step <= target) break;
  }
  const ticks: number[] = [];
  for (let v = Math.ceil(lo / step) * step; v <= hi + 1e-12 * span; v += step) {
    ticks.push(v);
  }
  return ticks;
}

function decadeTicks(loExp: number, hiExp: number, target = 8): number[] {
  const span = hiExp - loExp;
  const step = Math.max(1, Math.ceil(span / target));
  const ticks: number[] = [];
  for (let e = Math.ceil(loExp); e <= hiExp; e += step) {
    ticks.push(e);
  }
  return ticks;
}

function formatTick(value: number): string {
  if (value === 0) return "0";
  const abs = Math.abs(value);
  if (abs >= 1e4 || abs < 1e-3) {
    return value.toExponential(0).replace("e+", "e").replace("e-", "e-");
  }
  const text = value.toPrecision(4);
  return text.includes(".") ? text.replace(/\.?0+$/, "") : text;
}

/** Render one curve per input CSV into a PNG with axes and a legend. */
export function plotCurves(spec: CurvesSpec): void {
  const width = spec.width ?? 800;
  const height = spec.height ?? 500;
  const series = loadSeries(spec.inputs, spec.yField);
  const log = spec.logScale || spec.yField === "loss";

  const plotW = width - MARGIN.left - MARGIN.right;
  const plotH = height - MARGIN.top - MARGIN.bottom;
  const img = new Raster(width, height);

  const tMin = series[0].t[0];
  const tMax = series[0].t[series[0].t.length - 1];
  const xOf = (t: number) =>
    MARGIN.left + (tMax === tMin ? 0.5 : (t - tMin) / (tMax - tMin)) * plotW;

  const values = series.flatMap((s) => s.y.filter((v): v is number => v !== null));
  let yOf: (v: number) => number | null;
  let yTicks: { pos: number; label: string }[];

  if (log) {
    const positives = values.filter((v) => v > 0);
    if (positives.length === 0) {
      throw new SchemaMismatch(`no positive values to plot on a log scale`);
    }
    const hiExp = Math.log10(Math.max(...positives));
    let loExp = Math.log10(Math.min(...positives));
    if (hiExp - loExp < 1e-9) loExp = hiExp - 1;
    yOf = (v: number) => {
      if (v <= 0) return MARGIN.top + plotH; // clamp to the floor of the axis
      const frac = (Math.log10(v) - loExp) / (hiExp - loExp);
      return MARGIN.top + (1 - Math.min(Math.max(frac, 0), 1)) * plotH;
    };
    yTicks = decadeTicks(loExp, hiExp).map((e) => ({
      pos: yOf(Math.pow(10, e)) as number,
      label: `1e${e}`,
    }));
  } else {
    let lo = Math.min(...values, 0);
    let hi = Math.max(...values);
    if (hi - lo < 1e-300) hi = lo + 1;
    yOf = (v: number) => MARGIN.top + (1 - (v - lo) / (hi - lo)) * plotH;
    yTicks = niceLinearTicks(lo, hi).map((v) => ({
      pos: yOf(v) as number,
      label: formatTick(v),
    }));
  }

  // grid and ticks
  for (const tick of yTicks) {
    const y = Math.round(tick.pos);
    img.line(MARGIN.left, y, width - MARGIN.right, y, GRID);
    img.text(MARGIN.left - 8 - textWidth(tick.label), y - 3, tick.label, BLACK);
  }
  for (const t of niceLinearTicks(tMin, tMax)) {
    const x = Math.round(xOf(t));
    img.line(x, MARGIN.top, x, MARGIN.top + plotH, GRID);
    const label = formatTick(t);
    img.text(x - Math.floor(textWidth(label) / 2), MARGIN.top + plotH + 8, label, BLACK);
  }

  // axes
  img.line(MARGIN.left, MARGIN.top, MARGIN.left, MARGIN.top + plotH, BLACK);
  img.line(MARGIN.left, MARGIN.top + plotH, width - MARGIN.right, MARGIN.top + plotH, BLACK);
  img.text(
    Math.round(MARGIN.left + plotW / 2 - textWidth("t") / 2),
    height - GLYPH_HEIGHT - 6,
    "t",
    BLACK,
  );
  img.text(4, MARGIN.top, spec.yField, BLACK);

  // curves, input order fixes both color and legend order
  series.forEach((s, idx) => {
    const color = PALETTE[idx % PALETTE.length];
    let prev: { x: number; y: number } | null = null;
    for (let i = 0; i < s.t.length; i++) {
      const v = s.y[i];
      if (v === null) {
        prev = null;
        continue;
      }
      const point = { x: xOf(s.t[i]), y: yOf(v) as number };
      if (prev) img.line(prev.x, prev.y, point.x, point.y, color);
      prev = point;
    }
  });

  // legend box, top-right
  const legendW = Math.max(...series.map((s) => textWidth(s.label))) + 26;
  const legendH = series.length * 12 + 6;
  const lx = width - MARGIN.right - legendW - 4;
  const ly = MARGIN.top + 4;
  img.fillRect(lx, ly, legendW, legendH, [250, 250, 250]);
  img.line(lx, ly, lx + legendW, ly, BLACK);
  img.line(lx, ly + legendH, lx + legendW, ly + legendH, BLACK);
  img.line(lx, ly, lx, ly + legendH, BLACK);
  img.line(lx + legendW, ly, lx + legendW, ly + legendH, BLACK);
  series.forEach((s, idx) => {
    const color = PALETTE[idx % PALETTE.length];
    const rowY = ly + 5 + idx * 12;
    img.fillRect(lx + 4, rowY + 2, 14, 3, color);
    img.text(lx + 22, rowY, s.label, BLACK);
  });

  writeFileSync(spec.outPath, encodePng(width, height, img.data));
}
