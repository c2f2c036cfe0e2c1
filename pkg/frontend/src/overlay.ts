/** Multi-disease overlay view model, derived 1:1 from the superimpose
 * response: per-cell badges, the jointly free mask, and the warning
 * when no cell is free of every disease. */

import type { SuperimposePayload } from "./types.js";

export interface OverlayView {
  /** free[iy][ix]: no overlaid disease calls this cell onset */
  free: boolean[][];
  /** onset-disease names per cell, straight from the response */
  badges: string[][][];
  diseases: string[];
  jointlyFree: boolean;
  /** set exactly when no jointly free cell exists */
  warning: string | null;
  /** disease -> reason it was left out of this pair */
  skipped: Record<string, string>;
}

export function overlayView(p: SuperimposePayload, requested: string[]): OverlayView {
  const free = p.cells.map((row) => row.map((names) => names.length === 0));
  const included = requested.filter((d) => !(d in p.skipped));
  const jointlyFree = p.jointly_free;
  return {
    free,
    badges: p.cells,
    diseases: included,
    jointlyFree,
    warning: jointlyFree
      ? null
      : `no cell on (${p.var_x}, ${p.var_y}) is free of all of: ${included.join(", ")}`,
    skipped: p.skipped,
  };
}

/** count of free cells; the view marks the region, this sizes it */
export function freeCellCount(view: OverlayView): number {
  let n = 0;
  for (const row of view.free) for (const f of row) if (f) n++;
  return n;
}

export function badgeText(view: OverlayView, ix: number, iy: number): string {
  const names = view.badges[iy][ix];
  if (!names.length) return "jointly free";
  return `onset: ${names.join(", ")}`;
}
