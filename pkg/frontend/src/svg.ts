/**
 * Minimal hand-rolled SVG line-chart builder.
 *
 * Output is a pure function of the inputs: no timestamps, no ids, no
 * randomness, so identical inputs give byte-identical images.
 */

export interface Line {
  label: string;
  xs: number[];
  ys: number[];
  color: string;
  width?: number;
  dash?: string; // stroke-dasharray
}

export interface Band {
  xs: number[];
  los: number[];
  his: number[];
  color: string;
}

export interface RefLine {
  y: number;
  label: string;
  color: string;
}

export interface ErrorBars {
  xs: number[];
  ys: number[];
  halfwidths: number[];
  color: string;
}

export interface FigureOpts {
  title: string;
  xLabel: string;
  yLabel: string;
  logX?: boolean;
  logY?: boolean;
  lines: Line[];
  bands?: Band[];
  refLines?: RefLine[];
  errorBars?: ErrorBars[];
  width?: number;
  height?: number;
}

const MARGIN = { top: 44, right: 28, bottom: 52, left: 72 };

type Scale = (v: number) => number;

function finite(values: number[], log: boolean): number[] {
  return values.filter((v) => Number.isFinite(v) && (!log || v > 0));
}

/** Domain of all plottable values; padded fallback when there is nothing. */
function domain(values: number[], log: boolean): [number, number] {
  if (!values.length) return log ? [1, 10] : [0, 1];
  let lo = Math.min(...values);
  let hi = Math.max(...values);
  if (lo === hi) {
    if (log) return [lo / 2, hi * 2];
    const pad = lo === 0 ? 1 : Math.abs(lo) * 0.5;
    return [lo - pad, hi + pad];
  }
  if (!log) {
    const pad = (hi - lo) * 0.05;
    return [lo - pad, hi + pad];
  }
  return [lo, hi];
}

function makeScale(d: [number, number], r: [number, number], log: boolean): Scale {
  const [d0, d1] = log ? [Math.log(d[0]), Math.log(d[1])] : d;
  const span = d1 - d0 || 1;
  return (v) => {
    const t = ((log ? Math.log(v) : v) - d0) / span;
    return r[0] + t * (r[1] - r[0]);
  };
}

function linearTicks(lo: number, hi: number): number[] {
  const span = hi - lo;
  const rawStep = span / 5;
  const mag = Math.pow(10, Math.floor(Math.log10(rawStep)));
  const step = [1, 2, 5, 10].map((m) => m * mag).find((s) => span / s <= 6) ?? 10 * mag;
  const ticks: number[] = [];
  for (let v = Math.ceil(lo / step) * step; v <= hi + step * 1e-9; v += step) {
    ticks.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return ticks;
}

function logTicks(lo: number, hi: number): number[] {
  const ticks: number[] = [];
  for (let e = Math.ceil(Math.log10(lo) - 1e-9); ; e++) {
    const v = Math.pow(10, e);
    if (v > hi * (1 + 1e-9)) break;
    if (v >= lo * (1 - 1e-9)) ticks.push(v);
  }
  return ticks.length ? ticks : [lo, hi];
}

function fmtTick(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 0.001 && a < 100000) {
    return String(Number(v.toPrecision(4)));
  }
  return v.toExponential(0).replace("e+", "e");
}

const px = (v: number) => String(Math.round(v * 100) / 100);

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

/** Split a series into runs of points drawable on the current scales. */
function drawableRuns(xs: number[], ys: number[], logX: boolean, logY: boolean): Array<Array<[number, number]>> {
  const runs: Array<Array<[number, number]>> = [];
  let run: Array<[number, number]> = [];
  for (let i = 0; i < xs.length; i++) {
    const ok =
      Number.isFinite(xs[i]) && Number.isFinite(ys[i]) &&
      (!logX || xs[i] > 0) && (!logY || ys[i] > 0);
    if (ok) {
      run.push([xs[i], ys[i]]);
    } else if (run.length) {
      runs.push(run);
      run = [];
    }
  }
  if (run.length) runs.push(run);
  return runs;
}

export function renderFigure(opts: FigureOpts): string {
  const width = opts.width ?? 720;
  const height = opts.height ?? 480;
  const logX = opts.logX ?? false;
  const logY = opts.logY ?? false;
  const bands = opts.bands ?? [];
  const refLines = opts.refLines ?? [];
  const errorBars = opts.errorBars ?? [];

  const allX: number[] = [];
  const allY: number[] = [];
  for (const l of opts.lines) {
    allX.push(...finite(l.xs, logX));
    allY.push(...finite(l.ys, logY));
  }
  for (const b of bands) {
    allX.push(...finite(b.xs, logX));
    allY.push(...finite(b.los, logY), ...finite(b.his, logY));
  }
  for (const e of errorBars) {
    allX.push(...finite(e.xs, logX));
    allY.push(...finite(e.ys.map((y, i) => y - e.halfwidths[i]), logY));
    allY.push(...finite(e.ys.map((y, i) => y + e.halfwidths[i]), logY));
  }
  for (const r of refLines) allY.push(...finite([r.y], logY));

  const xd = domain(allX, logX);
  const yd = domain(allY, logY);
  const sx = makeScale(xd, [MARGIN.left, width - MARGIN.right], logX);
  const sy = makeScale(yd, [height - MARGIN.bottom, MARGIN.top], logY);

  const out: string[] = [];
  out.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
      `viewBox="0 0 ${width} ${height}" font-family="sans-serif" font-size="12">`,
  );
  out.push(`<rect width="${width}" height="${height}" fill="white"/>`);
  out.push(
    `<text x="${px(width / 2)}" y="22" text-anchor="middle" font-size="15">${esc(opts.title)}</text>`,
  );

  // axes frame
  const x0 = MARGIN.left;
  const x1 = width - MARGIN.right;
  const y0 = height - MARGIN.bottom;
  const y1 = MARGIN.top;
  out.push(`<rect x="${x0}" y="${y1}" width="${px(x1 - x0)}" height="${px(y0 - y1)}" fill="none" stroke="#333"/>`);

  const xTicks = logX ? logTicks(xd[0], xd[1]) : linearTicks(xd[0], xd[1]);
  for (const v of xTicks) {
    const x = sx(v);
    out.push(`<line x1="${px(x)}" y1="${y0}" x2="${px(x)}" y2="${y1}" stroke="#ddd"/>`);
    out.push(`<line x1="${px(x)}" y1="${y0}" x2="${px(x)}" y2="${px(y0 + 5)}" stroke="#333"/>`);
    out.push(`<text x="${px(x)}" y="${px(y0 + 18)}" text-anchor="middle">${fmtTick(v)}</text>`);
  }
  const yTicks = logY ? logTicks(yd[0], yd[1]) : linearTicks(yd[0], yd[1]);
  for (const v of yTicks) {
    const y = sy(v);
    out.push(`<line x1="${x0}" y1="${px(y)}" x2="${x1}" y2="${px(y)}" stroke="#ddd"/>`);
    out.push(`<line x1="${px(x0 - 5)}" y1="${px(y)}" x2="${x0}" y2="${px(y)}" stroke="#333"/>`);
    out.push(`<text x="${px(x0 - 8)}" y="${px(y + 4)}" text-anchor="end">${fmtTick(v)}</text>`);
  }
  out.push(
    `<text x="${px((x0 + x1) / 2)}" y="${px(height - 12)}" text-anchor="middle">${esc(opts.xLabel)}</text>`,
  );
  out.push(
    `<text x="18" y="${px((y0 + y1) / 2)}" text-anchor="middle" ` +
      `transform="rotate(-90 18 ${px((y0 + y1) / 2)})">${esc(opts.yLabel)}</text>`,
  );

  for (const b of bands) {
    for (const run of drawableRuns(b.xs, b.his, logX, logY)) {
      // close the region by walking the lower edge back; runs on his and los
      // share x positions because both come from the same rows
      const fwd = run.map(([x, y]) => `${px(sx(x))},${px(sy(y))}`);
      const lows = drawableRuns(b.xs, b.los, logX, logY).flat();
      const lowByX = new Map(lows.map(([x, y]) => [x, y]));
      const back = run
        .slice()
        .reverse()
        .filter(([x]) => lowByX.has(x))
        .map(([x]) => `${px(sx(x))},${px(sy(lowByX.get(x)!))}`);
      if (fwd.length && back.length) {
        out.push(`<polygon points="${fwd.join(" ")} ${back.join(" ")}" fill="${b.color}" fill-opacity="0.15"/>`);
      }
    }
  }

  for (const r of refLines) {
    if (!Number.isFinite(r.y) || (logY && r.y <= 0)) continue;
    const y = sy(r.y);
    out.push(`<line x1="${x0}" y1="${px(y)}" x2="${x1}" y2="${px(y)}" stroke="${r.color}" stroke-dasharray="6,3"/>`);
    out.push(`<text x="${px(x1 - 4)}" y="${px(y - 4)}" text-anchor="end" fill="${r.color}">${esc(r.label)}</text>`);
  }

  for (const e of errorBars) {
    for (let i = 0; i < e.xs.length; i++) {
      if (!Number.isFinite(e.xs[i]) || !Number.isFinite(e.ys[i])) continue;
      const x = sx(e.xs[i]);
      const yLo = sy(e.ys[i] - e.halfwidths[i]);
      const yHi = sy(e.ys[i] + e.halfwidths[i]);
      out.push(`<line x1="${px(x)}" y1="${px(yLo)}" x2="${px(x)}" y2="${px(yHi)}" stroke="${e.color}"/>`);
      out.push(`<line x1="${px(x - 3)}" y1="${px(yLo)}" x2="${px(x + 3)}" y2="${px(yLo)}" stroke="${e.color}"/>`);
      out.push(`<line x1="${px(x - 3)}" y1="${px(yHi)}" x2="${px(x + 3)}" y2="${px(yHi)}" stroke="${e.color}"/>`);
    }
  }

  for (const l of opts.lines) {
    for (const run of drawableRuns(l.xs, l.ys, logX, logY)) {
      const pts = run.map(([x, y]) => `${px(sx(x))},${px(sy(y))}`).join(" ");
      const dash = l.dash ? ` stroke-dasharray="${l.dash}"` : "";
      out.push(
        `<polyline points="${pts}" fill="none" stroke="${l.color}" stroke-width="${l.width ?? 1.5}"${dash}/>`,
      );
    }
  }

  // legend, top right inside the frame
  let ly = y1 + 16;
  for (const l of opts.lines) {
    const lx = x1 - 150;
    const dash = l.dash ? ` stroke-dasharray="${l.dash}"` : "";
    out.push(`<line x1="${px(lx)}" y1="${px(ly - 4)}" x2="${px(lx + 22)}" y2="${px(ly - 4)}" stroke="${l.color}" stroke-width="2"${dash}/>`);
    out.push(`<text x="${px(lx + 28)}" y="${px(ly)}">${esc(l.label)}</text>`);
    ly += 16;
  }

  out.push("</svg>");
  return out.join("\n") + "\n";
}
