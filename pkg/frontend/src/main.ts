import { ApiError, Client, PanelFetcher, isAbort } from "./api.js";
import { overlayColor, ORIGIN_MARK } from "./colors.js";
import { cellAt, cellRect, draw, hoverText, layout, type Cell, type Layout } from "./heatmap.js";
import { badgeText, overlayView, type OverlayView } from "./overlay.js";
import {
  decodeState,
  defaultState,
  encodeState,
  statesEqual,
  type ExplorerState,
} from "./state.js";
import { cursorTrailPoint, diagramAt, scrubberView } from "./timeline.js";
import type { DiagramPayload, SuperimposePayload, TimelinePayload } from "./types.js";
import { pinReport, reportText, togglePin } from "./whatif.js";

const API_BASE =
  new URLSearchParams(window.location.search).get("api") ?? "http://127.0.0.1:8711";

const client = new Client(API_BASE);

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

const ui = {
  record: el<HTMLSelectElement>("record"),
  disease: el<HTMLSelectElement>("disease"),
  overlayDiseases: el<HTMLSelectElement>("overlay-diseases"),
  varX: el<HTMLSelectElement>("var-x"),
  varY: el<HTMLSelectElement>("var-y"),
  mode: el<HTMLInputElement>("mode-full"),
  budget: el<HTMLInputElement>("budget"),
  diagram: el<HTMLCanvasElement>("diagram"),
  diagramError: el<HTMLDivElement>("diagram-error"),
  hover: el<HTMLDivElement>("hover-readout"),
  baseline: el<HTMLDivElement>("baseline"),
  pattern: el<HTMLDivElement>("pattern"),
  pins: el<HTMLUListElement>("pins"),
  overlay: el<HTMLCanvasElement>("overlay"),
  overlayError: el<HTMLDivElement>("overlay-error"),
  overlayInfo: el<HTMLDivElement>("overlay-info"),
  overlayWarning: el<HTMLDivElement>("overlay-warning"),
  timeline: el<HTMLCanvasElement>("timeline"),
  timelineError: el<HTMLDivElement>("timeline-error"),
  scrub: el<HTMLInputElement>("scrub"),
  scrubLabel: el<HTMLSpanElement>("scrub-label"),
};

let state: ExplorerState | null = null;
let shown: DiagramPayload | null = null;
let shownOverlay: { payload: SuperimposePayload; view: OverlayView } | null = null;
let shownTimeline: TimelinePayload | null = null;
let hover: Cell | null = null;
let applyingHash = false;

const diagramPanel = new PanelFetcher();
const overlayPanel = new PanelFetcher();
const timelinePanel = new PanelFetcher();
const baselinePanel = new PanelFetcher();

function showError(node: HTMLDivElement, err: unknown): void {
  if (isAbort(err)) return; // superseded request, not an error
  const text =
    err instanceof ApiError ? `service error ${err.status}: ${err.message}` : String(err);
  node.textContent = text;
  node.hidden = false;
}

function clearError(node: HTMLDivElement): void {
  node.hidden = true;
  node.textContent = "";
}

function syncHash(): void {
  if (!state) return;
  const encoded = `#${encodeState(state)}`;
  if (window.location.hash !== encoded) {
    applyingHash = true;
    window.location.hash = encoded;
    applyingHash = false;
  }
}

function redrawDiagram(): void {
  if (!shown || !state) return;
  draw(ui.diagram, shown, { hover, pins: state.pins });
  ui.pattern.textContent = `${shown.mode}, ${shown.pattern}`;
  renderPins();
}

function renderPins(): void {
  ui.pins.replaceChildren();
  if (!shown || !state) return;
  for (const pin of state.pins) {
    const report = pinReport(shown, pin);
    const li = document.createElement("li");
    li.textContent = reportText(shown, report);
    li.className = report.achievable ? "achievable" : "blocked";
    ui.pins.appendChild(li);
  }
}

async function loadDiagram(): Promise<void> {
  if (!state) return;
  const s = state;
  try {
    const d = await diagramPanel.run((signal) =>
      client.hdpd(
        {
          record: s.record,
          disease: s.diseases[0],
          var_x: s.varX,
          var_y: s.varY,
          mode: "p-mICE",
          active: s.mode === "active",
          budget: s.budget,
        },
        signal,
      ),
    );
    clearError(ui.diagramError);
    shown = d;
    hover = null;
    redrawDiagram();
  } catch (err) {
    showError(ui.diagramError, err); // previous diagram stays on screen
  }
}

async function loadBaseline(): Promise<void> {
  if (!state) return;
  const s = state;
  try {
    const w = await baselinePanel.run((signal) =>
      client.whatif(s.record, s.diseases[0], {}, signal),
    );
    ui.baseline.textContent =
      `baseline p=${w.probability.toFixed(4)} ` +
      `(threshold ${w.threshold.toFixed(4)}, ${w.onset ? "onset" : "non-onset"})`;
  } catch (err) {
    if (!isAbort(err)) ui.baseline.textContent = "baseline unavailable";
  }
}

function drawOverlay(payload: SuperimposePayload, view: OverlayView): void {
  const canvas = ui.overlay;
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const l: Layout = layout(payload.axis_x.length, payload.axis_y.length, canvas.width, canvas.height);
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const total = view.diseases.length;
  for (let iy = 0; iy < l.ny; iy++) {
    for (let ix = 0; ix < l.nx; ix++) {
      const r = cellRect(l, ix, iy);
      ctx.fillStyle = overlayColor(view.badges[iy][ix].length, total);
      ctx.fillRect(r.x, r.y, r.w + 0.5, r.h + 0.5);
      if (view.free[iy][ix]) {
        ctx.strokeStyle = "#0b7a3b";
        ctx.lineWidth = 1;
        ctx.strokeRect(r.x + 1, r.y + 1, r.w - 2, r.h - 2);
      }
    }
  }
  const r = cellRect(l, payload.origin_x, payload.origin_y);
  ctx.strokeStyle = ORIGIN_MARK;
  ctx.lineWidth = 2;
  ctx.strokeRect(r.x + 1, r.y + 1, r.w - 2, r.h - 2);
}

function overlaySummary(view: OverlayView): string {
  const skipped = Object.entries(view.skipped)
    .map(([d, why]) => `${d} skipped (${why})`)
    .join("; ");
  return `${view.diseases.join(" + ") || "none"}` + (skipped ? ` | ${skipped}` : "");
}

async function loadOverlay(): Promise<void> {
  if (!state) return;
  const s = state;
  try {
    const payload = await overlayPanel.run((signal) =>
      client.superimpose(s.record, s.diseases, s.varX, s.varY, signal),
    );
    clearError(ui.overlayError);
    const view = overlayView(payload, s.diseases);
    shownOverlay = { payload, view };
    drawOverlay(payload, view);
    ui.overlayInfo.textContent = overlaySummary(view);
    ui.overlayWarning.textContent = view.warning ?? "";
    ui.overlayWarning.hidden = view.warning === null;
  } catch (err) {
    showError(ui.overlayError, err);
  }
}

function renderTimeline(): void {
  if (!shownTimeline || !state) return;
  const view = scrubberView(shownTimeline, state.year);
  ui.scrub.min = "0";
  ui.scrub.max = String(view.years.length - 1);
  ui.scrub.value = String(view.index);
  ui.scrub.disabled = view.disabled;
  ui.scrubLabel.textContent = view.years[view.index] ?? "";
  const d = diagramAt(shownTimeline, view);
  const current = cursorTrailPoint(shownTimeline, view);
  draw(ui.timeline, d, {
    trail: shownTimeline.trail,
    trailYear: current ? current.year : null,
  });
}

async function loadTimeline(): Promise<void> {
  if (!state) return;
  const s = state;
  try {
    shownTimeline = await timelinePanel.run((signal) =>
      client.timeline(s.record, s.diseases[0], s.varX, s.varY, signal),
    );
    clearError(ui.timelineError);
    renderTimeline();
  } catch (err) {
    showError(ui.timelineError, err);
  }
}

/** re-fetch what a state change touches; pins survive untouched */
function refresh(changed: { diagram?: boolean; overlay?: boolean; timeline?: boolean }): void {
  syncHash();
  if (changed.diagram) {
    void loadDiagram();
    void loadBaseline();
  }
  if (changed.overlay) void loadOverlay();
  if (changed.timeline) void loadTimeline();
}

async function populateVariables(): Promise<void> {
  if (!state) return;
  const features = await client.features(state.record, state.diseases[0]);
  const eligible = features.features
    .filter((f) => f.axis_eligible)
    .map((f) => f.name);
  for (const select of [ui.varX, ui.varY]) {
    const keep = select.value;
    select.replaceChildren(
      ...eligible.map((name) => new Option(name, name, false, name === keep)),
    );
    if (!eligible.includes(keep) && eligible.length) select.value = eligible[0];
  }
  if (ui.varX.value === ui.varY.value && eligible.length > 1) {
    ui.varY.value = eligible.find((n) => n !== ui.varX.value) ?? eligible[0];
  }
  state.varX = ui.varX.value;
  state.varY = ui.varY.value;
}

function readSelections(): void {
  if (!state) return;
  state.record = ui.record.value;
  const overlayPicks = Array.from(ui.overlayDiseases.selectedOptions).map((o) => o.value);
  state.diseases = [ui.disease.value, ...overlayPicks.filter((d) => d !== ui.disease.value)];
  state.varX = ui.varX.value;
  state.varY = ui.varY.value;
  state.mode = ui.mode.checked ? "full" : "active";
  state.budget = Math.max(1, Number(ui.budget.value) || 50);
}

function writeSelections(): void {
  if (!state) return;
  ui.record.value = state.record;
  ui.disease.value = state.diseases[0];
  for (const opt of Array.from(ui.overlayDiseases.options)) {
    opt.selected = state.diseases.slice(1).includes(opt.value);
  }
  ui.varX.value = state.varX;
  ui.varY.value = state.varY;
  ui.mode.checked = state.mode === "full";
  ui.budget.value = String(state.budget);
}

function onStateInput(kind: "record" | "disease" | "pair" | "mode"): void {
  void (async () => {
    if (!state) return;
    readSelections();
    if (kind === "record" || kind === "disease") await populateVariables();
    writeSelections();
    refresh({
      diagram: true,
      overlay: kind !== "mode",
      timeline: kind !== "mode",
    });
  })();
}

function wireEvents(): void {
  ui.record.addEventListener("change", () => onStateInput("record"));
  ui.disease.addEventListener("change", () => onStateInput("disease"));
  ui.overlayDiseases.addEventListener("change", () => onStateInput("disease"));
  ui.varX.addEventListener("change", () => onStateInput("pair"));
  ui.varY.addEventListener("change", () => onStateInput("pair"));
  ui.mode.addEventListener("change", () => onStateInput("mode"));
  ui.budget.addEventListener("change", () => onStateInput("mode"));

  ui.diagram.addEventListener("mousemove", (ev) => {
    if (!shown) return;
    const rect = ui.diagram.getBoundingClientRect();
    const l = layout(shown.axis_x.length, shown.axis_y.length, ui.diagram.width, ui.diagram.height);
    const cell = cellAt(l, ev.clientX - rect.left, ev.clientY - rect.top);
    if (cell?.ix !== hover?.ix || cell?.iy !== hover?.iy) {
      hover = cell;
      ui.hover.textContent = cell ? hoverText(shown, cell) : "";
      redrawDiagram();
    }
  });
  ui.diagram.addEventListener("mouseleave", () => {
    hover = null;
    ui.hover.textContent = "";
    redrawDiagram();
  });
  ui.diagram.addEventListener("click", (ev) => {
    if (!shown || !state) return;
    const rect = ui.diagram.getBoundingClientRect();
    const l = layout(shown.axis_x.length, shown.axis_y.length, ui.diagram.width, ui.diagram.height);
    const cell = cellAt(l, ev.clientX - rect.left, ev.clientY - rect.top);
    if (!cell) return;
    state.pins = togglePin(state.pins, shown, cell);
    syncHash();
    redrawDiagram();
  });

  ui.overlay.addEventListener("mousemove", (ev) => {
    if (!shownOverlay) return;
    const { payload, view } = shownOverlay;
    const rect = ui.overlay.getBoundingClientRect();
    const l = layout(payload.axis_x.length, payload.axis_y.length, ui.overlay.width, ui.overlay.height);
    const cell = cellAt(l, ev.clientX - rect.left, ev.clientY - rect.top);
    ui.overlayInfo.textContent = cell ? badgeText(view, cell.ix, cell.iy) : overlaySummary(view);
  });
  ui.overlay.addEventListener("mouseleave", () => {
    if (shownOverlay) ui.overlayInfo.textContent = overlaySummary(shownOverlay.view);
  });

  ui.scrub.addEventListener("input", () => {
    if (!shownTimeline || !state) return;
    state.year = shownTimeline.years[Number(ui.scrub.value)] ?? null;
    syncHash();
    renderTimeline(); // all years arrived in one response: no refetch
  });

  window.addEventListener("hashchange", () => {
    if (applyingHash) return;
    const decoded = decodeState(window.location.hash);
    if (!decoded || (state && statesEqual(decoded, state))) return;
    state = decoded;
    writeSelections();
    refresh({ diagram: true, overlay: true, timeline: true });
  });
}

async function boot(): Promise<void> {
  const [records, diseases] = await Promise.all([client.records(), client.diseases()]);
  ui.record.replaceChildren(...records.records.map((r) => new Option(r, r)));
  ui.disease.replaceChildren(...diseases.diseases.map((d) => new Option(d, d)));
  ui.overlayDiseases.replaceChildren(...diseases.diseases.map((d) => new Option(d, d)));

  const fromHash = decodeState(window.location.hash);
  if (fromHash) {
    state = fromHash;
  } else {
    state = defaultState(records.records[0], diseases.diseases[0], "", "");
    writeSelections();
    await populateVariables();
  }
  writeSelections();
  wireEvents();
  refresh({ diagram: true, overlay: true, timeline: true });
}

boot().catch((err) => {
  const panel = ui.diagramError;
  panel.textContent = `cannot reach the hdpd service at ${API_BASE}: ${err}`;
  panel.hidden = false;
});
