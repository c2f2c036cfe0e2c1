/** Timeline scrubber view model. One diagram per visit year, with the
 * measured (x, y) trail overlaid; the cursor year's diagram is shown. */

import type { DiagramPayload, TimelinePayload } from "./types.js";

export interface ScrubberView {
  years: string[];
  /** index into years for the active cursor */
  index: number;
  /** single-year participants cannot scrub */
  disabled: boolean;
}

export function scrubberView(p: TimelinePayload, cursor: string | null): ScrubberView {
  let index = p.years.length - 1; // default: latest year
  if (cursor !== null) {
    const at = p.years.indexOf(cursor);
    if (at >= 0) index = at;
  }
  return { years: p.years, index, disabled: p.years.length < 2 };
}

export function diagramAt(p: TimelinePayload, view: ScrubberView): DiagramPayload {
  return p.diagrams[view.index];
}

/** the trail point measured in the cursor year must coincide with the
 * cursor diagram's own cell, so the marker and the trail agree */
export function cursorTrailPoint(p: TimelinePayload, view: ScrubberView) {
  const year = Number(p.years[view.index]);
  return p.trail.find((t) => t.year === year) ?? null;
}
