/**
 * The four figure kinds, each a pure function from parsed CSV rows to an
 * SVG string plus the plotted line data (so tests can assert on numbers,
 * not pixels).
 */

import { Column, Row, SCHEMAS } from "./csv.js";
import { Band, Line, RefLine, renderFigure } from "./svg.js";

export interface PlottedLine {
  label: string;
  xs: number[];
  ys: number[];
}

export interface PlottedBand {
  label: string;
  xs: number[];
  los: number[];
  his: number[];
}

export interface ChartResult {
  svg: string;
  lines: PlottedLine[];
  bands: PlottedBand[];
  refValues: number[];
}

export interface AxisFlags {
  logX?: boolean;
  logY?: boolean;
}

const PALETTE = ["#4361ee", "#e63946", "#2d6a4f", "#f77f00", "#7209b7", "#0096c7"];

const color = (i: number) => PALETTE[i % PALETTE.length];

function groupBy<K>(rows: Row[], key: (r: Row) => K): Map<K, Row[]> {
  const groups = new Map<K, Row[]>();
  for (const row of rows) {
    const k = key(row);
    const bucket = groups.get(k);
    if (bucket) bucket.push(row);
    else groups.set(k, [row]);
  }
  return groups;
}

const num = (row: Row, col: string) => row[col] as number;

/** Variance factor of the uniform average vs round, one line per alpha,
 * with the two-sided bound shaded where the file provides it. */
export function varianceCurves(rows: Row[], flags: AxisFlags): ChartResult {
  const logX = flags.logX ?? true;
  const logY = flags.logY ?? true;
  const byAlpha = [...groupBy(rows, (r) => num(r, "alpha")).entries()].sort(
    (a, b) => a[0] - b[0],
  );

  const lines: Line[] = [];
  const bands: Band[] = [];
  const outBands: PlottedBand[] = [];
  byAlpha.forEach(([alpha, group], i) => {
    group.sort((a, b) => num(a, "t") - num(b, "t"));
    const xs = group.map((r) => num(r, "t"));
    lines.push({
      label: `alpha=${alpha}`,
      xs,
      ys: group.map((r) => num(r, "factor_uniform")),
      color: color(i),
    });
    const bounded = group.filter(
      (r) => Number.isFinite(num(r, "bound_lo")) && Number.isFinite(num(r, "bound_hi")),
    );
    if (bounded.length) {
      const band = {
        xs: bounded.map((r) => num(r, "t")),
        los: bounded.map((r) => num(r, "bound_lo")),
        his: bounded.map((r) => num(r, "bound_hi")),
      };
      bands.push({ ...band, color: color(i) });
      outBands.push({ label: `alpha=${alpha}`, ...band });
    }
  });

  const svg = renderFigure({
    title: "Variance of the uniform average under feedback contamination",
    xLabel: "round t",
    yLabel: "variance factor",
    logX,
    logY,
    lines,
    bands,
  });
  return {
    svg,
    lines: lines.map(({ label, xs, ys }) => ({ label, xs, ys })),
    bands: outBands,
    refValues: [],
  };
}

/** Uniform vs anchored variance factors across alpha at the largest round
 * in the file; the crossing point is the thing to look at. */
export function schemeCrossover(rows: Row[], flags: AxisFlags): ChartResult {
  const tStar = rows.length ? Math.max(...rows.map((r) => num(r, "t"))) : 0;
  const slice = rows
    .filter((r) => num(r, "t") === tStar)
    .sort((a, b) => num(a, "alpha") - num(b, "alpha"));
  const alphas = slice.map((r) => num(r, "alpha"));

  const lines: Line[] = [
    {
      label: "uniform",
      xs: alphas,
      ys: slice.map((r) => num(r, "factor_uniform")),
      color: color(0),
    },
    {
      label: "anchored",
      xs: alphas,
      ys: slice.map((r) => num(r, "factor_hat")),
      color: color(1),
    },
  ];
  if (!slice.length) lines.length = 0;

  const svg = renderFigure({
    title: `Weighting-scheme variance factors at t=${tStar}`,
    xLabel: "contamination weight alpha",
    yLabel: "variance factor",
    logX: flags.logX ?? false,
    logY: flags.logY ?? false,
    lines,
  });
  return {
    svg,
    lines: lines.map(({ label, xs, ys }) => ({ label, xs, ys })),
    bands: [],
    refValues: [],
  };
}

/** Mean loss per round for each learner in the file, with the stall floor
 * (2*alpha - 1)/(8n) drawn for every (alpha, n) pair present. */
export function pacLosses(rows: Row[], flags: AxisFlags): ChartResult {
  const lines: Line[] = [];
  [...groupBy(rows, (r) => r["learner"] as string).entries()]
    .sort((a, b) => (a[0] < b[0] ? -1 : 1))
    .forEach(([learner, group], i) => {
      const byT = [...groupBy(group, (r) => num(r, "t")).entries()].sort(
        (a, b) => a[0] - b[0],
      );
      lines.push({
        label: learner,
        xs: byT.map(([t]) => t),
        ys: byT.map(([, g]) => g.reduce((s, r) => s + num(r, "loss"), 0) / g.length),
        color: color(i),
      });
    });

  const refLines: RefLine[] = [];
  const combos = new Set(rows.map((r) => `${num(r, "alpha")}|${num(r, "n")}`));
  for (const combo of [...combos].sort()) {
    const [alpha, n] = combo.split("|").map(Number);
    const floor = Math.max(2 * alpha - 1, 0) / (8 * n);
    refLines.push({
      y: floor,
      label: `stall floor ${floor.toPrecision(3)}`,
      color: "#555",
    });
  }

  const svg = renderFigure({
    title: "Mean loss per round under recursive feedback",
    xLabel: "round t",
    yLabel: "mean loss",
    logX: flags.logX ?? false,
    logY: flags.logY ?? false,
    lines,
    refLines,
  });
  return {
    svg,
    lines: lines.map(({ label, xs, ys }) => ({ label, xs, ys })),
    bands: [],
    refValues: refLines.map((r) => r.y),
  };
}

/** Walk survival estimates vs alpha with 95% whiskers and the 2a-1 limit. */
export function walkConstant(rows: Row[], flags: AxisFlags): ChartResult {
  const sorted = rows.slice().sort((a, b) => num(a, "alpha") - num(b, "alpha"));
  const alphas = sorted.map((r) => num(r, "alpha"));

  const lines: Line[] = [];
  if (sorted.length) {
    lines.push({
      label: "survival estimate",
      xs: alphas,
      ys: sorted.map((r) => num(r, "estimate")),
      color: color(0),
    });
    lines.push({
      label: "limit 2a-1",
      xs: alphas,
      ys: alphas.map((a) => Math.max(2 * a - 1, 0)),
      color: "#555",
      dash: "6,3",
    });
  }

  const svg = renderFigure({
    title: "Stall-constant estimates from the drifted walk",
    xLabel: "contamination weight alpha",
    yLabel: "survival probability",
    logX: flags.logX ?? false,
    logY: flags.logY ?? false,
    lines,
    errorBars: sorted.length
      ? [
          {
            xs: alphas,
            ys: sorted.map((r) => num(r, "estimate")),
            halfwidths: sorted.map((r) => num(r, "ci_halfwidth")),
            color: color(0),
          },
        ]
      : [],
  });
  return {
    svg,
    lines: lines.map(({ label, xs, ys }) => ({ label, xs, ys })),
    bands: [],
    refValues: [],
  };
}

export interface KindSpec {
  schema: Column[];
  build: (rows: Row[], flags: AxisFlags) => ChartResult;
}

export const KINDS: Record<string, KindSpec> = {
  "variance-curves": { schema: SCHEMAS["mean_oracle"], build: varianceCurves },
  "scheme-crossover": { schema: SCHEMAS["mean_oracle"], build: schemeCrossover },
  "pac-losses": { schema: SCHEMAS["pac"], build: pacLosses },
  "walk-constant": { schema: SCHEMAS["walk"], build: walkConstant },
};
