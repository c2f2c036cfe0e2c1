/** Cell coloring. Onset and non-onset get distinct hues; shading within
 * each class tracks the served probability so boundary sharpness stays
 * visible. The class itself always comes from the response label, never
 * from thresholding the probability client-side. */

function clamp01(v: number): number {
  return v < 0 ? 0 : v > 1 ? 1 : v;
}

function mix(a: [number, number, number], b: [number, number, number], t: number): string {
  const u = clamp01(t);
  const c = a.map((av, i) => Math.round(av + (b[i] - av) * u));
  return `rgb(${c[0]},${c[1]},${c[2]})`;
}

const NON_ONSET_LIGHT: [number, number, number] = [227, 240, 250];
const NON_ONSET_DEEP: [number, number, number] = [38, 104, 163];
const ONSET_LIGHT: [number, number, number] = [252, 228, 222];
const ONSET_DEEP: [number, number, number] = [176, 36, 24];

/** label 0: deeper blue the closer prob is to 0; label 1: deeper red
 * the closer prob is to 1. */
export function cellColor(label: number, prob: number): string {
  if (label === 1) return mix(ONSET_LIGHT, ONSET_DEEP, prob);
  return mix(NON_ONSET_LIGHT, NON_ONSET_DEEP, 1 - prob);
}

/** overlay shading by onset count: white when free, deepening red */
export function overlayColor(onsetCount: number, totalDiseases: number): string {
  if (onsetCount === 0) return "rgb(255,255,255)";
  return mix(ONSET_LIGHT, ONSET_DEEP, onsetCount / Math.max(1, totalDiseases));
}

export const QUERIED_MARK = "rgba(20,20,20,0.85)";
export const ORIGIN_MARK = "#111111";
export const PIN_MARK = "#0b7a3b";
export const TRAIL_LINE = "rgba(40,40,40,0.9)";
