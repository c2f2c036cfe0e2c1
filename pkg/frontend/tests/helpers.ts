import type { DiagramPayload, SuperimposePayload, TimelinePayload } from "../src/types.js";

/** 3x3 diagram with an onset corner at high x / high y; origin mid-grid */
export function makeDiagram(overrides: Partial<DiagramPayload> = {}): DiagramPayload {
  return {
    record_id: "p0@2008",
    disease: "synthetic",
    var_x: "bm00",
    var_y: "bm01",
    axis_x: [10, 14, 18],
    axis_y: [1, 2, 3],
    origin_x: 1,
    origin_y: 1,
    prob: [
      [0.1, 0.2, 0.3],
      [0.2, 0.4, 0.6],
      [0.3, 0.6, 0.9],
    ],
    label: [
      [0, 0, 0],
      [0, 0, 1],
      [0, 1, 1],
    ],
    mode: "p-mICE",
    pattern: "Bivariate",
    ...overrides,
  };
}

export function makeSuperimpose(
  overrides: Partial<SuperimposePayload> = {},
): SuperimposePayload {
  return {
    record_id: "p0@2008",
    var_x: "bm00",
    var_y: "bm01",
    axis_x: [10, 14, 18],
    axis_y: [1, 2, 3],
    origin_x: 1,
    origin_y: 1,
    cells: [
      [[], [], ["a"]],
      [[], ["a"], ["a", "b"]],
      [["b"], ["a", "b"], ["a", "b"]],
    ],
    jointly_free: true,
    skipped: {},
    ...overrides,
  };
}

export function makeTimeline(overrides: Partial<TimelinePayload> = {}): TimelinePayload {
  const years = ["2008", "2009", "2010"];
  return {
    participant_id: "p0",
    disease: "synthetic",
    var_x: "bm00",
    var_y: "bm01",
    years,
    diagrams: years.map((y) => makeDiagram({ record_id: `p0@${y}` })),
    trail: [
      { year: 2008, x: 12, y: 1.5 },
      { year: 2009, x: 13, y: 2.0 },
      { year: 2010, x: 14, y: 2.5 },
    ],
    ...overrides,
  };
}
