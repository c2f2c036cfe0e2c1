/** What-if pins: improvement targets snapped to diagram cells.
 *
 * A pin stores axis values, so it survives disease toggles and axis
 * re-fetches; each report is recomputed against the currently shown
 * diagram by pure lookup (deltas from the record's own cell, onset
 * status from the served label).
 */

import { nearestIndex, type Cell } from "./heatmap.js";
import type { Pin } from "./state.js";
import type { DiagramPayload } from "./types.js";

export interface PinReport {
  pin: Pin;
  cell: Cell;
  /** change needed from the record's current values, in axis units */
  dx: number;
  dy: number;
  probability: number;
  onset: boolean;
  /** a non-onset target is an achievable improvement goal */
  achievable: boolean;
}

export function pinFromCell(d: DiagramPayload, cell: Cell): Pin {
  return { x: d.axis_x[cell.ix], y: d.axis_y[cell.iy] };
}

export function pinReport(d: DiagramPayload, pin: Pin): PinReport {
  const ix = nearestIndex(d.axis_x, pin.x);
  const iy = nearestIndex(d.axis_y, pin.y);
  const onset = d.label[iy][ix] === 1;
  return {
    pin,
    cell: { ix, iy },
    dx: d.axis_x[ix] - d.axis_x[d.origin_x],
    dy: d.axis_y[iy] - d.axis_y[d.origin_y],
    probability: d.prob[iy][ix],
    onset,
    achievable: !onset,
  };
}

/** clicking a pinned cell unpins it, anywhere else adds a pin */
export function togglePin(pins: Pin[], d: DiagramPayload, cell: Cell): Pin[] {
  const hit = pins.findIndex(
    (p) => nearestIndex(d.axis_x, p.x) === cell.ix && nearestIndex(d.axis_y, p.y) === cell.iy,
  );
  if (hit >= 0) return pins.slice(0, hit).concat(pins.slice(hit + 1));
  return pins.concat([pinFromCell(d, cell)]);
}

export function formatDelta(name: string, delta: number): string {
  const sign = delta > 0 ? "+" : "";
  const a = Math.abs(delta);
  const digits = a === 0 ? 0 : a >= 100 ? 0 : a >= 1 ? 1 : 2;
  return `${name} ${sign}${delta.toFixed(digits)}`;
}

export function reportText(d: DiagramPayload, report: PinReport): string {
  const goal = report.achievable ? "achievable" : "still onset";
  return (
    `${formatDelta(d.var_x, report.dx)}, ${formatDelta(d.var_y, report.dy)}` +
    ` -> p=${report.probability.toFixed(4)} (${goal})`
  );
}
