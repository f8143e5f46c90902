#!/usr/bin/env node
/**
 * render --kind <kind> --in <csv> --out <svg> [--logx] [--logy]
 *
 * Reads one results CSV produced by the simulation CLI and writes a
 * standalone SVG figure. Output is deterministic: same input, same bytes.
 */

import { readFileSync, writeFileSync } from "node:fs";
import { parseArgs } from "node:util";

import { KINDS } from "./charts.js";
import { CsvError, parseCsv } from "./csv.js";

const USAGE =
  "usage: render --kind <variance-curves|scheme-crossover|pac-losses|walk-constant>" +
  " --in <csv> --out <svg> [--logx] [--logy]";

export function run(argv: string[]): number {
  let values;
  try {
    ({ values } = parseArgs({
      args: argv,
      options: {
        kind: { type: "string" },
        in: { type: "string" },
        out: { type: "string" },
        logx: { type: "boolean", default: false },
        logy: { type: "boolean", default: false },
        help: { type: "boolean", short: "h", default: false },
      },
      allowPositionals: false,
    }));
  } catch (err) {
    process.stderr.write(`error: ${(err as Error).message}\n${USAGE}\n`);
    return 2;
  }

  if (values.help) {
    process.stdout.write(`${USAGE}\n`);
    return 0;
  }
  for (const required of ["kind", "in", "out"] as const) {
    if (!values[required]) {
      process.stderr.write(`error: --${required} is required\n${USAGE}\n`);
      return 2;
    }
  }

  const spec = KINDS[values.kind as string];
  if (!spec) {
    const known = Object.keys(KINDS).join(", ");
    process.stderr.write(`error: unknown kind '${values.kind}' (one of: ${known})\n`);
    return 2;
  }

  let text: string;
  try {
    text = readFileSync(values.in as string, "utf8");
  } catch (err) {
    process.stderr.write(`error: cannot read ${values.in}: ${(err as Error).message}\n`);
    return 1;
  }

  let result;
  try {
    const rows = parseCsv(text, spec.schema);
    result = spec.build(rows, {
      logX: values.logx ? true : undefined,
      logY: values.logy ? true : undefined,
    });
  } catch (err) {
    if (err instanceof CsvError) {
      process.stderr.write(`error: ${values.in}: ${err.message}\n`);
      return 1;
    }
    throw err;
  }

  try {
    writeFileSync(values.out as string, result.svg, "utf8");
  } catch (err) {
    process.stderr.write(`error: cannot write ${values.out}: ${(err as Error).message}\n`);
    return 1;
  }
  return 0;
}

process.exitCode = run(process.argv.slice(2));
