import { CHART_WINDOW_S } from "./state";
import type { SeriesPoint } from "./state";

/** Split a series into drawable runs: a null value breaks the line, so
 * unavailable readings render as gaps rather than plunging to zero. */
export function buildSegments(points: SeriesPoint[]): { t: number; v: number }[][] {
  const segments: { t: number; v: number }[][] = [];
  let current: { t: number; v: number }[] = [];
  for (const p of points) {
    if (p.v === null) {
      if (current.length > 0) segments.push(current);
      current = [];
    } else {
      current.push({ t: p.t, v: p.v });
    }
  }
  if (current.length > 0) segments.push(current);
  return segments;
}

export function valueRange(
  points: SeriesPoint[],
  padFraction = 0.1,
): { lo: number; hi: number } | null {
  let lo = Infinity;
  let hi = -Infinity;
  for (const p of points) {
    if (p.v === null) continue;
    if (p.v < lo) lo = p.v;
    if (p.v > hi) hi = p.v;
  }
  if (lo === Infinity) return null;
  if (lo === hi) {
    // flat series still needs a band to draw inside
    const pad = Math.max(1, Math.abs(lo) * 0.05);
    return { lo: lo - pad, hi: hi + pad };
  }
  const pad = (hi - lo) * padFraction;
  return { lo: lo - pad, hi: hi + pad };
}

/** Thin every segment to at most `budget` points overall, always keeping
 * segment endpoints so gaps stay where they are. */
export function decimate(
  segments: { t: number; v: number }[][],
  budget: number,
): { t: number; v: number }[][] {
  const total = segments.reduce((n, s) => n + s.length, 0);
  if (total <= budget) return segments;
  const stride = Math.ceil(total / budget);
  return segments.map((seg) => {
    if (seg.length <= 2) return seg;
    const out = [seg[0]!];
    for (let i = stride; i < seg.length - 1; i += stride) out.push(seg[i]!);
    out.push(seg[seg.length - 1]!);
    return out;
  });
}

export interface ChartOptions {
  color: string;
  /** Fixed y-range; otherwise auto-scaled to the window's data. */
  range?: { lo: number; hi: number };
}

export function drawChart(
  canvas: HTMLCanvasElement,
  points: SeriesPoint[],
  opts: ChartOptions,
): void {
  const ctx = canvas.getContext("2d");
  if (ctx === null) return;
  const w = canvas.width;
  const h = canvas.height;
  ctx.clearRect(0, 0, w, h);

  const range = opts.range ?? valueRange(points);
  const last = points[points.length - 1];
  if (range === null || last === undefined) return;

  const tHi = last.t;
  const tLo = tHi - CHART_WINDOW_S;
  const xOf = (t: number) => ((t - tLo) / CHART_WINDOW_S) * w;
  const yOf = (v: number) =>
    h - ((v - range.lo) / (range.hi - range.lo)) * (h - 8) - 4;

  ctx.strokeStyle = opts.color;
  ctx.lineWidth = 1.5;
  for (const seg of decimate(buildSegments(points), 600)) {
    if (seg.length === 1) {
      const p = seg[0]!;
      ctx.beginPath();
      ctx.arc(xOf(p.t), yOf(p.v), 1.5, 0, Math.PI * 2);
      ctx.fillStyle = opts.color;
      ctx.fill();
      continue;
    }
    ctx.beginPath();
    ctx.moveTo(xOf(seg[0]!.t), yOf(seg[0]!.v));
    for (let i = 1; i < seg.length; i++) {
      ctx.lineTo(xOf(seg[i]!.t), yOf(seg[i]!.v));
    }
    ctx.stroke();
  }
}

/** Latest non-null value, for the numeric readout next to each chart. */
export function latestValue(points: SeriesPoint[]): number | null {
  for (let i = points.length - 1; i >= 0; i--) {
    const v = points[i]!.v;
    if (v !== null) return v;
  }
  return null;
}
