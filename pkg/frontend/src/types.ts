/** JSON shapes served by the hdpd HTTP API. Field names mirror the wire
 * format exactly; the UI never derives numbers the service did not send. */

export interface DiagramPayload {
  record_id: string;
  disease: string;
  var_x: string;
  var_y: string;
  axis_x: number[];
  axis_y: number[];
  origin_x: number;
  origin_y: number;
  /** prob[iy][ix]: rows index axis_y ascending, columns axis_x ascending */
  prob: number[][];
  label: number[][];
  mode: string;
  pattern: string;
  /** present only for active-search diagrams */
  queried?: boolean[][];
}

export interface FeatureEntry {
  name: string;
  kind: string;
  value: number | string | null;
  missing: boolean;
  unit?: string;
  in_model?: boolean;
  axis_eligible?: boolean;
}

export interface FeaturesPayload {
  record_id: string;
  features: FeatureEntry[];
}

export interface SuperimposePayload {
  record_id: string;
  var_x: string;
  var_y: string;
  axis_x: number[];
  axis_y: number[];
  origin_x: number;
  origin_y: number;
  /** cells[iy][ix]: names of the diseases whose model calls this cell onset */
  cells: string[][][];
  /** true when at least one cell is free of every overlaid disease */
  jointly_free: boolean;
  /** disease -> reason it could not join this axis pair */
  skipped: Record<string, string>;
}

export interface WhatIfPayload {
  record_id: string;
  disease: string;
  probability: number;
  onset: boolean;
  threshold: number;
}

export interface TrailPoint {
  year: number;
  x: number;
  y: number;
}

export interface TimelinePayload {
  participant_id: string;
  disease: string;
  var_x: string;
  var_y: string;
  years: string[];
  diagrams: DiagramPayload[];
  trail: TrailPoint[];
}

export interface RecordsPayload {
  records: string[];
}

export interface DiseasesPayload {
  diseases: string[];
}
