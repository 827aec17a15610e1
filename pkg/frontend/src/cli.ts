/**
 * plotkit CLI.
 *
 *   render --csv sweep.csv --out figure.svg [--sigmas 0.1,0.01]
 *          [--unit nats|bits] [--series-dump series.json]
 *
 * series-dump writes the extracted data series as JSON; regression tests
 * compare that dump (backend-independent) rather than raster output.
 */

import { readFileSync, writeFileSync } from "node:fs";
import { parseSweepCsv } from "./csv.js";
import { FigureSpec, RateUnit, renderFigure } from "./figure.js";

interface CliArgs {
  csv: string;
  out: string;
  sigmas: number[] | null;
  unit: RateUnit;
  seriesDump: string | null;
}

function parseArgs(argv: string[]): CliArgs {
  const args: CliArgs = {
    csv: "",
    out: "figure.svg",
    sigmas: null,
    unit: "nats",
    seriesDump: null,
  };
  for (let i = 0; i < argv.length; i++) {
    const flag = argv[i];
    const next = () => {
      const value = argv[++i];
      if (value === undefined) throw new Error(`${flag} needs a value`);
      return value;
    };
    switch (flag) {
      case "--csv":
        args.csv = next();
        break;
      case "--out":
        args.out = next();
        break;
      case "--sigmas":
        args.sigmas = next().split(",").map(Number);
        break;
      case "--unit": {
        const unit = next();
        if (unit !== "nats" && unit !== "bits") {
          throw new Error(`--unit must be nats or bits, got '${unit}'`);
        }
        args.unit = unit;
        break;
      }
      case "--series-dump":
        args.seriesDump = next();
        break;
      default:
        throw new Error(`unknown flag '${flag}'`);
    }
  }
  if (!args.csv) throw new Error("--csv is required");
  return args;
}

export function main(argv: string[]): number {
  const [command, ...rest] = argv;
  if (command !== "render") {
    process.stderr.write("usage: plotkit render --csv <file> --out <svg>\n");
    return 1;
  }
  try {
    const args = parseArgs(rest);
    const rows = parseSweepCsv(readFileSync(args.csv, "utf8"));
    const sigmas = args.sigmas ??
      [...new Set(rows.map((r) => r.sigma))].sort((a, b) => b - a);
    const spec: FigureSpec = { sigmaPanels: sigmas, unit: args.unit };
    const { svg, panels } = renderFigure(rows, spec);
    writeFileSync(args.out, svg);
    if (args.seriesDump) {
      writeFileSync(args.seriesDump, JSON.stringify(panels, null, 2) + "\n");
    }
    process.stdout.write(
      `wrote ${args.out} (${panels.length} panel(s), ` +
        `${panels.reduce((acc, p) => acc + p.curves.length, 0)} curve(s))\n`,
    );
    return 0;
  } catch (err) {
    process.stderr.write(`plotkit: ${(err as Error).message}\n`);
    return 1;
  }
}

if (process.argv[1] && process.argv[1].endsWith("cli.js")) {
  process.exit(main(process.argv.slice(2)));
}
