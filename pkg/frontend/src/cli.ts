#!/usr/bin/env node
import yargs from "yargs";
import { hideBin } from "yargs/helpers";
import { plotCurves, YField } from "./curves.js";
import { SchemaMismatch, ShapeMismatch } from "./errors.js";
import { plotImageGrid } from "./grid.js";

function parseCsvArg(raw: string): { path: string; label: string } {
  const idx = raw.lastIndexOf(":");
  if (idx <= 0) {
    // bare path: derive the label from the file name
    const base = raw.split("/").pop() ?? raw;
    return { path: raw, label: base.replace(/\.csv$/, "") };
  }
  return { path: raw.slice(0, idx), label: raw.slice(idx + 1) };
}

function parseShape(raw: string): { rows: number; cols: number } {
  const match = /^(\d+)x(\d+)$/.exec(raw);
  if (!match) {
    throw new ShapeMismatch(`--shape must look like 28x28, got "${raw}"`);
  }
  return { rows: Number(match[1]), cols: Number(match[2]) };
}

export async function main(argv: string[]): Promise<number> {
  try {
    await yargs(argv)
      .scriptName("plot")
      .command(
        "curves",
        "render convergence curves from trace CSVs",
        (y) =>
          y
            .option("csv", {
              type: "string",
              array: true,
              demandOption: true,
              describe: "trace CSV as FILE or FILE:LABEL (repeatable)",
            })
            .option("y", {
              type: "string",
              choices: ["loss", "dist"] as const,
              default: "loss",
              describe: "which column to plot",
            })
            .option("log", {
              type: "boolean",
              default: false,
              describe: "force a log y-scale (loss is log-scaled by default)",
            })
            .option("out", { type: "string", demandOption: true, describe: "output PNG" }),
        (args) => {
          const yField: YField = args.y === "dist" ? "dist_to_opt" : "loss";
          plotCurves({
            inputs: (args.csv as string[]).map(parseCsvArg),
            yField,
            logScale: args.log as boolean,
            outPath: args.out as string,
          });
          console.log(`wrote ${args.out}`);
        },
      )
      .command(
        "grid",
        "render signal vectors as side-by-side grayscale panels",
        (y) =>
          y
            .option("vec", {
              type: "string",
              array: true,
              demandOption: true,
              describe: "signal vector file (repeatable)",
            })
            .option("shape", {
              type: "string",
              demandOption: true,
              describe: "panel shape HxW, e.g. 28x28",
            })
            .option("scale", { type: "number", default: 8 })
            .option("out", { type: "string", demandOption: true, describe: "output PNG" }),
        (args) => {
          const { rows, cols } = parseShape(args.shape as string);
          plotImageGrid({
            vecPaths: args.vec as string[],
            rows,
            cols,
            scale: args.scale as number,
            outPath: args.out as string,
          });
          console.log(`wrote ${args.out}`);
        },
      )
      .demandCommand(1)
      .strict()
      .fail((msg, err) => {
        throw err ?? new Error(msg);
      })
      .parseAsync();
    return 0;
  } catch (err) {
    if (err instanceof SchemaMismatch || err instanceof ShapeMismatch) {
      console.error(`${err.name}: ${err.message}`);
      return 1;
    }
    console.error(String(err instanceof Error ? err.message : err));
    return 2;
  }
}

const isDirectRun =
  process.argv[1] !== undefined &&
  import.meta.url.endsWith(process.argv[1].split("/").pop() ?? "");
if (isDirectRun) {
  main(hideBin(process.argv)).then((code) => {
    process.exitCode = code;
  });
}
