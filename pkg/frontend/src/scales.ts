/** Linear plot scales with padded data ranges and round tick positions. */

export interface Scale {
  toPixel(v: number): number;
  ticks: number[];
  min: number;
  max: number;
}

export function linearScale(
  values: number[], pixelMin: number, pixelMax: number, pad = 0.06,
): Scale {
  let lo = Math.min(...values);
  let hi = Math.max(...values);
  if (!(hi > lo)) {
    hi = lo + 1;
    lo = lo - 1;
  }
  const span = hi - lo;
  lo -= pad * span;
  hi += pad * span;
  const toPixel = (v: number) =>
    pixelMin + ((v - lo) / (hi - lo)) * (pixelMax - pixelMin);
  return { toPixel, ticks: niceTicks(lo, hi, 6), min: lo, max: hi };
}

export function niceTicks(lo: number, hi: number, count: number): number[] {
  const raw = (hi - lo) / Math.max(count, 1);
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  const norm = raw / mag;
  const step = (norm < 1.5 ? 1 : norm < 3.5 ? 2 : norm < 7.5 ? 5 : 10) * mag;
  const first = Math.ceil(lo / step) * step;
  const ticks: number[] = [];
  for (let t = first; t <= hi + 1e-12 * step; t += step) {
    ticks.push(Math.abs(t) < 1e-12 * step ? 0 : t);
  }
  return ticks;
}

export function fmtTick(v: number): string {
  if (v === 0) return "0";
  const abs = Math.abs(v);
  if (abs >= 1e4 || abs < 1e-3) return v.toExponential(1);
  return String(Math.round(v * 1e6) / 1e6);
}
