export { readTraceCsv, TRACE_HEADER, TraceRow } from "./csv.js";
export { plotCurves, CurvesSpec, CurveInput, YField } from "./curves.js";
export { SchemaMismatch, ShapeMismatch } from "./errors.js";
export { plotImageGrid, GridSpec, clampByte } from "./grid.js";
export { encodePng, crc32 } from "./png.js";
export { readVector } from "./vec.js";
