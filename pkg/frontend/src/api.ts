import type {
  DiagramPayload,
  DiseasesPayload,
  FeaturesPayload,
  RecordsPayload,
  SuperimposePayload,
  TimelinePayload,
  WhatIfPayload,
} from "./types.js";

/** Error body from the service is always {"detail": ...}. */
export class ApiError extends Error {
  constructor(readonly status: number, detail: string) {
    super(detail);
    this.name = "ApiError";
  }
}

async function asJson<T>(res: Response): Promise<T> {
  if (!res.ok) {
    let detail = res.statusText;
    try {
      const body = await res.json();
      if (body && body.detail !== undefined) detail = JSON.stringify(body.detail);
    } catch {
      // non-JSON error body: keep the status text
    }
    throw new ApiError(res.status, detail);
  }
  return res.json() as Promise<T>;
}

export interface HdpdParams {
  record: string;
  disease: string;
  var_x: string;
  var_y: string;
  mode?: string;
  active?: boolean;
  budget?: number;
}

export class Client {
  constructor(readonly base: string) {}

  private get<T>(path: string, signal?: AbortSignal): Promise<T> {
    return fetch(`${this.base}${path}`, { signal }).then((r) => asJson<T>(r));
  }

  private post<T>(path: string, payload: unknown, signal?: AbortSignal): Promise<T> {
    return fetch(`${this.base}${path}`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
      signal,
    }).then((r) => asJson<T>(r));
  }

  records(signal?: AbortSignal): Promise<RecordsPayload> {
    return this.get("/records", signal);
  }

  diseases(signal?: AbortSignal): Promise<DiseasesPayload> {
    return this.get("/diseases", signal);
  }

  features(record: string, disease?: string, signal?: AbortSignal): Promise<FeaturesPayload> {
    const q = disease ? `?disease=${encodeURIComponent(disease)}` : "";
    return this.get(`/records/${encodeURIComponent(record)}/features${q}`, signal);
  }

  hdpd(params: HdpdParams, signal?: AbortSignal): Promise<DiagramPayload> {
    return this.post("/hdpd", params, signal);
  }

  superimpose(
    record: string,
    diseases: string[],
    var_x: string,
    var_y: string,
    signal?: AbortSignal,
  ): Promise<SuperimposePayload> {
    return this.post("/hdpd/superimpose", { record, diseases, var_x, var_y }, signal);
  }

  whatif(
    record: string,
    disease: string,
    overrides: Record<string, number | string> = {},
    signal?: AbortSignal,
  ): Promise<WhatIfPayload> {
    return this.post("/whatif", { record, disease, overrides }, signal);
  }

  timeline(
    record: string,
    disease: string,
    var_x: string,
    var_y: string,
    signal?: AbortSignal,
  ): Promise<TimelinePayload> {
    const q = new URLSearchParams({ disease, var_x, var_y });
    return this.get(`/records/${encodeURIComponent(record)}/timeline?${q}`, signal);
  }
}

/** One in-flight request per panel: starting a new one aborts the old. */
export class PanelFetcher {
  private controller: AbortController | null = null;

  async run<T>(task: (signal: AbortSignal) => Promise<T>): Promise<T> {
    this.controller?.abort();
    const controller = new AbortController();
    this.controller = controller;
    try {
      return await task(controller.signal);
    } finally {
      if (this.controller === controller) this.controller = null;
    }
  }

  cancel(): void {
    this.controller?.abort();
    this.controller = null;
  }
}

export function isAbort(err: unknown): boolean {
  return err instanceof DOMException && err.name === "AbortError";
}
