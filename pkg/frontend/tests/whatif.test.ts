import { describe, expect, it } from "vitest";

import { pinFromCell, pinReport, reportText, togglePin } from "../src/whatif.js";
import { makeDiagram } from "./helpers.js";

describe("what-if pins", () => {
  const d = makeDiagram();

  it("reports deltas relative to the record's own cell", () => {
    const report = pinReport(d, { x: 18, y: 1 });
    // origin is (1, 1) = (14, 2)
    expect(report.dx).toBe(18 - 14);
    expect(report.dy).toBe(1 - 2);
    expect(report.cell).toEqual({ ix: 2, iy: 0 });
    expect(report.probability).toBe(0.3);
    expect(report.onset).toBe(false);
    expect(report.achievable).toBe(true);
  });

  it("pinning the record's own cell reports zero deltas", () => {
    const report = pinReport(d, pinFromCell(d, { ix: d.origin_x, iy: d.origin_y }));
    expect(report.dx).toBe(0);
    expect(report.dy).toBe(0);
  });

  it("marks onset cells as not achievable", () => {
    const report = pinReport(d, { x: 18, y: 3 });
    expect(report.onset).toBe(true);
    expect(report.achievable).toBe(false);
    expect(reportText(d, report)).toContain("still onset");
  });

  it("snaps stale axis values to the nearest cell of the new diagram", () => {
    // a pin placed on another disease's axes lands on the closest cell here
    const report = pinReport(d, { x: 15.9, y: 2.4 });
    expect(report.cell).toEqual({ ix: 1, iy: 1 });
    const far = pinReport(d, { x: 1000, y: -50 });
    expect(far.cell).toEqual({ ix: 2, iy: 0 });
  });

  it("toggle adds then removes the same cell", () => {
    let pins = togglePin([], d, { ix: 0, iy: 2 });
    expect(pins).toEqual([{ x: 10, y: 3 }]);
    pins = togglePin(pins, d, { ix: 2, iy: 0 });
    expect(pins).toHaveLength(2);
    pins = togglePin(pins, d, { ix: 0, iy: 2 });
    expect(pins).toEqual([{ x: 18, y: 1 }]);
  });

  it("toggle removes a pin that merely snaps to the clicked cell", () => {
    const pins = togglePin([{ x: 10.4, y: 2.9 }], d, { ix: 0, iy: 2 });
    expect(pins).toEqual([]);
  });

  it("report text shows signed deltas and the probability", () => {
    const text = reportText(d, pinReport(d, { x: 18, y: 3 }));
    expect(text).toBe("bm00 +4.0, bm01 +1.0 -> p=0.9000 (still onset)");
  });
});
