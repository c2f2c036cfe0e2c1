/** Explorer state and its URL (hash fragment) round trip.
 *
 * Everything a reload needs lives in the hash; transient hover state
 * does not. decode(encode(s)) must reproduce s exactly so a shared
 * link restores the identical view.
 */

export type Mode = "full" | "active";

export interface Pin {
  /** axis values, not pixel or index coordinates */
  x: number;
  y: number;
}

export interface ExplorerState {
  record: string;
  /** first entry drives the single-diagram panels; all entries overlay */
  diseases: string[];
  varX: string;
  varY: string;
  mode: Mode;
  budget: number;
  pins: Pin[];
  /** timeline cursor; null = latest year */
  year: string | null;
}

export const DEFAULT_BUDGET = 50;

export function defaultState(record: string, disease: string, varX: string, varY: string): ExplorerState {
  return {
    record,
    diseases: [disease],
    varX,
    varY,
    mode: "active",
    budget: DEFAULT_BUDGET,
    pins: [],
    year: null,
  };
}

// pins serialize as "x:y" joined by "~"; axis values never contain either
function encodePins(pins: Pin[]): string {
  return pins.map((p) => `${p.x}:${p.y}`).join("~");
}

function decodePins(text: string): Pin[] {
  if (!text) return [];
  const pins: Pin[] = [];
  for (const part of text.split("~")) {
    const [xs, ys] = part.split(":");
    const x = Number(xs);
    const y = Number(ys);
    if (Number.isFinite(x) && Number.isFinite(y)) pins.push({ x, y });
  }
  return pins;
}

export function encodeState(state: ExplorerState): string {
  const params = new URLSearchParams();
  params.set("record", state.record);
  params.set("diseases", state.diseases.join(","));
  params.set("x", state.varX);
  params.set("y", state.varY);
  if (state.mode !== "active") params.set("mode", state.mode);
  if (state.budget !== DEFAULT_BUDGET) params.set("budget", String(state.budget));
  if (state.pins.length) params.set("pins", encodePins(state.pins));
  if (state.year !== null) params.set("year", state.year);
  return params.toString();
}

export function decodeState(hash: string): ExplorerState | null {
  const params = new URLSearchParams(hash.replace(/^#/, ""));
  const record = params.get("record");
  const diseases = (params.get("diseases") ?? "").split(",").filter((d) => d.length > 0);
  const varX = params.get("x");
  const varY = params.get("y");
  if (!record || !diseases.length || !varX || !varY) return null;
  const mode = params.get("mode") === "full" ? "full" : "active";
  const budget = Number(params.get("budget") ?? DEFAULT_BUDGET);
  return {
    record,
    diseases,
    varX,
    varY,
    mode,
    budget: Number.isInteger(budget) && budget >= 1 ? budget : DEFAULT_BUDGET,
    pins: decodePins(params.get("pins") ?? ""),
    year: params.get("year"),
  };
}

export function statesEqual(a: ExplorerState, b: ExplorerState): boolean {
  return encodeState(a) === encodeState(b);
}
