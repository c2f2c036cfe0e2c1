/** Canvas heatmap for one diagram: grid geometry, hit testing, drawing.
 *
 * Geometry is pure and exported for tests; drawing is a thin pass over
 * it. Row iy of the payload indexes axis_y ascending, but the screen
 * y axis grows downward, so row iy renders at slot ny-1-iy.
 */

import { cellColor, ORIGIN_MARK, PIN_MARK, QUERIED_MARK, TRAIL_LINE } from "./colors.js";
import type { Pin } from "./state.js";
import type { DiagramPayload, TrailPoint } from "./types.js";

export interface Cell {
  ix: number;
  iy: number;
}

export interface Layout {
  nx: number;
  ny: number;
  left: number;
  top: number;
  cellW: number;
  cellH: number;
  plotW: number;
  plotH: number;
}

export const MARGIN = { left: 64, right: 16, top: 12, bottom: 40 };

export function layout(nx: number, ny: number, width: number, height: number): Layout {
  const plotW = Math.max(1, width - MARGIN.left - MARGIN.right);
  const plotH = Math.max(1, height - MARGIN.top - MARGIN.bottom);
  return {
    nx,
    ny,
    left: MARGIN.left,
    top: MARGIN.top,
    cellW: plotW / nx,
    cellH: plotH / ny,
    plotW,
    plotH,
  };
}

/** top-left pixel corner of a cell */
export function cellRect(l: Layout, ix: number, iy: number): { x: number; y: number; w: number; h: number } {
  return {
    x: l.left + ix * l.cellW,
    y: l.top + (l.ny - 1 - iy) * l.cellH,
    w: l.cellW,
    h: l.cellH,
  };
}

/** pixel position -> cell, or null outside the plot area */
export function cellAt(l: Layout, px: number, py: number): Cell | null {
  const fx = (px - l.left) / l.cellW;
  const fy = (py - l.top) / l.cellH;
  if (fx < 0 || fy < 0) return null;
  const ix = Math.floor(fx);
  const row = Math.floor(fy);
  if (ix >= l.nx || row >= l.ny) return null;
  return { ix, iy: l.ny - 1 - row };
}

/** center of the cell whose axis value is nearest to v (axes ascend) */
export function nearestIndex(axis: number[], v: number): number {
  let best = 0;
  let bestDist = Math.abs(axis[0] - v);
  for (let i = 1; i < axis.length; i++) {
    const d = Math.abs(axis[i] - v);
    if (d < bestDist) {
      best = i;
      bestDist = d;
    }
  }
  return best;
}

function cellCenter(l: Layout, ix: number, iy: number): { x: number; y: number } {
  const r = cellRect(l, ix, iy);
  return { x: r.x + r.w / 2, y: r.y + r.h / 2 };
}

/** continuous data->pixel mapping used for the measured-value trail;
 * cell centers sit exactly at their axis values */
export function dataToPixel(l: Layout, d: DiagramPayload, x: number, y: number): { x: number; y: number } | null {
  const px = interp(d.axis_x, x);
  const py = interp(d.axis_y, y);
  if (px === null || py === null) return null;
  return {
    x: l.left + (px + 0.5) * l.cellW,
    y: l.top + (l.ny - 1 - py + 0.5) * l.cellH,
  };
}

/** fractional index of v on an ascending axis; null outside its range */
function interp(axis: number[], v: number): number | null {
  if (v < axis[0] || v > axis[axis.length - 1]) return null;
  for (let i = 0; i < axis.length - 1; i++) {
    if (v <= axis[i + 1]) {
      const span = axis[i + 1] - axis[i];
      return span === 0 ? i : i + (v - axis[i]) / span;
    }
  }
  return axis.length - 1;
}

export interface DrawOptions {
  hover?: Cell | null;
  pins?: Pin[];
  trail?: TrailPoint[];
  /** year whose trail point should be emphasized */
  trailYear?: number | null;
}

function fmtTick(v: number): string {
  const a = Math.abs(v);
  if (a >= 100 || Number.isInteger(v)) return v.toFixed(0);
  if (a >= 1) return v.toFixed(1);
  return v.toPrecision(2);
}

export function draw(canvas: HTMLCanvasElement, d: DiagramPayload, opts: DrawOptions = {}): Layout {
  const ctx = canvas.getContext("2d");
  if (!ctx) throw new Error("2d canvas context unavailable");
  const l = layout(d.axis_x.length, d.axis_y.length, canvas.width, canvas.height);

  ctx.clearRect(0, 0, canvas.width, canvas.height);
  for (let iy = 0; iy < l.ny; iy++) {
    for (let ix = 0; ix < l.nx; ix++) {
      const r = cellRect(l, ix, iy);
      ctx.fillStyle = cellColor(d.label[iy][ix], d.prob[iy][ix]);
      // +0.5 overdraw hides antialiasing seams between cells
      ctx.fillRect(r.x, r.y, r.w + 0.5, r.h + 0.5);
    }
  }

  // active mode: dot the cells that were actually queried
  if (d.queried) {
    ctx.fillStyle = QUERIED_MARK;
    const rad = Math.max(1, Math.min(l.cellW, l.cellH) * 0.08);
    for (let iy = 0; iy < l.ny; iy++) {
      for (let ix = 0; ix < l.nx; ix++) {
        if (!d.queried[iy][ix]) continue;
        const c = cellCenter(l, ix, iy);
        ctx.beginPath();
        ctx.arc(c.x, c.y, rad, 0, Math.PI * 2);
        ctx.fill();
      }
    }
  }

  if (opts.trail && opts.trail.length) {
    ctx.strokeStyle = TRAIL_LINE;
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    let started = false;
    for (const pt of opts.trail) {
      const p = dataToPixel(l, d, pt.x, pt.y);
      if (!p) continue; // out-of-range years are simply not drawn
      if (started) ctx.lineTo(p.x, p.y);
      else ctx.moveTo(p.x, p.y);
      started = true;
    }
    ctx.stroke();
    for (const pt of opts.trail) {
      const p = dataToPixel(l, d, pt.x, pt.y);
      if (!p) continue;
      const current = opts.trailYear != null && pt.year === opts.trailYear;
      ctx.fillStyle = current ? ORIGIN_MARK : TRAIL_LINE;
      ctx.beginPath();
      ctx.arc(p.x, p.y, current ? 5 : 3, 0, Math.PI * 2);
      ctx.fill();
      ctx.fillText(String(pt.year), p.x + 6, p.y - 4);
    }
  }

  // the record's own cell
  {
    const r = cellRect(l, d.origin_x, d.origin_y);
    ctx.strokeStyle = ORIGIN_MARK;
    ctx.lineWidth = 2;
    ctx.strokeRect(r.x + 1, r.y + 1, r.w - 2, r.h - 2);
    const c = cellCenter(l, d.origin_x, d.origin_y);
    ctx.fillStyle = ORIGIN_MARK;
    ctx.beginPath();
    ctx.arc(c.x, c.y, 3.5, 0, Math.PI * 2);
    ctx.fill();
  }

  if (opts.pins) {
    ctx.strokeStyle = PIN_MARK;
    ctx.fillStyle = PIN_MARK;
    ctx.lineWidth = 2;
    for (const pin of opts.pins) {
      const ix = nearestIndex(d.axis_x, pin.x);
      const iy = nearestIndex(d.axis_y, pin.y);
      const c = cellCenter(l, ix, iy);
      ctx.beginPath();
      ctx.moveTo(c.x - 6, c.y);
      ctx.lineTo(c.x + 6, c.y);
      ctx.moveTo(c.x, c.y - 6);
      ctx.lineTo(c.x, c.y + 6);
      ctx.stroke();
      ctx.beginPath();
      ctx.arc(c.x, c.y, 6, 0, Math.PI * 2);
      ctx.stroke();
    }
  }

  if (opts.hover) {
    const r = cellRect(l, opts.hover.ix, opts.hover.iy);
    ctx.strokeStyle = "#444";
    ctx.lineWidth = 1;
    ctx.strokeRect(r.x + 0.5, r.y + 0.5, r.w - 1, r.h - 1);
  }

  drawAxes(ctx, l, d);
  return l;
}

function drawAxes(ctx: CanvasRenderingContext2D, l: Layout, d: DiagramPayload): void {
  ctx.fillStyle = "#333";
  ctx.font = "11px sans-serif";
  const stepX = Math.max(1, Math.ceil(l.nx / 8));
  for (let ix = 0; ix < l.nx; ix += stepX) {
    const c = cellCenter(l, ix, 0);
    ctx.textAlign = "center";
    ctx.fillText(fmtTick(d.axis_x[ix]), c.x, l.top + l.plotH + 14);
  }
  ctx.textAlign = "center";
  ctx.fillText(d.var_x, l.left + l.plotW / 2, l.top + l.plotH + 30);

  const stepY = Math.max(1, Math.ceil(l.ny / 8));
  ctx.textAlign = "right";
  for (let iy = 0; iy < l.ny; iy += stepY) {
    const c = cellCenter(l, 0, iy);
    ctx.fillText(fmtTick(d.axis_y[iy]), l.left - 8, c.y + 4);
  }
  ctx.save();
  ctx.translate(14, l.top + l.plotH / 2);
  ctx.rotate(-Math.PI / 2);
  ctx.textAlign = "center";
  ctx.fillText(d.var_y, 0, 0);
  ctx.restore();
}

/** hover readout text: the served probability for one cell */
export function hoverText(d: DiagramPayload, cell: Cell): string {
  const prob = d.prob[cell.iy][cell.ix];
  const label = d.label[cell.iy][cell.ix] === 1 ? "onset" : "non-onset";
  const queried =
    d.queried == null ? "" : d.queried[cell.iy][cell.ix] ? ", queried" : ", inferred";
  return (
    `${d.var_x}=${fmtTick(d.axis_x[cell.ix])}, ${d.var_y}=${fmtTick(d.axis_y[cell.iy])}` +
    ` -> p=${prob.toFixed(4)} (${label}${queried})`
  );
}
