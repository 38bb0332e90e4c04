// HTTP client for the audit service, plus the two request-flow utilities
// the console depends on: trailing debounce (rate-limit slider chatter)
// and newest-wins sequencing (a response for superseded parameters is
// never delivered).

import type {
  FairnessReport,
  FrontierResponse,
  LineError,
  ScenarioDetail,
} from "./types.js";

export interface WhatifBody {
  thresholds?: Record<string, number>;
  cost_ratio?: number;
  mixing?: { solve: boolean; tol?: number };
  tol?: number;
}

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number,
    readonly lineErrors: LineError[] = [],
  ) {
    super(message);
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchImpl(this.baseUrl + path, init);
    const text = await resp.text();
    let body: unknown = null;
    try {
      body = text ? JSON.parse(text) : null;
    } catch {
      body = null;
    }
    if (!resp.ok) {
      const doc = (body ?? {}) as { error?: string; errors?: LineError[] };
      throw new ApiError(
        doc.error ?? `${resp.status} ${resp.statusText}`,
        resp.status,
        doc.errors ?? [],
      );
    }
    return body as T;
  }

  health(): Promise<{ status: string; version: string; datasets: string[] }> {
    return this.request("/health");
  }

  scenarios(): Promise<{ scenarios: string[] }> {
    return this.request("/scenarios");
  }

  scenarioDetail(name: string): Promise<ScenarioDetail> {
    return this.request(`/scenarios/${encodeURIComponent(name)}`);
  }

  uploadCsv(text: string): Promise<{ dataset_id: string }> {
    return this.request("/datasets", {
      method: "POST",
      headers: { "content-type": "text/csv" },
      body: text,
    });
  }

  datasetFromScenario(name: string): Promise<{ dataset_id: string }> {
    return this.request(`/datasets/from_scenario/${encodeURIComponent(name)}`, {
      method: "POST",
    });
  }

  whatif(datasetId: string, body: WhatifBody): Promise<FairnessReport> {
    return this.request(`/datasets/${encodeURIComponent(datasetId)}/whatif`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  frontier(datasetId: string, group: string, grid: number): Promise<FrontierResponse> {
    const params = new URLSearchParams({ group, grid: String(grid) });
    return this.request(
      `/datasets/${encodeURIComponent(datasetId)}/frontier?${params}`,
    );
  }
}

export interface Debounced<A extends unknown[]> {
  (...args: A): void;
  cancel(): void;
  flush(): void;
}

// Trailing-edge debounce: the wrapped function runs once, `waitMs` after
// the last call, with the last call's arguments.
export function debounce<A extends unknown[]>(
  fn: (...args: A) => void,
  waitMs: number,
): Debounced<A> {
  let timer: ReturnType<typeof setTimeout> | undefined;
  let pending: A | undefined;
  const run = () => {
    timer = undefined;
    if (pending !== undefined) {
      const args = pending;
      pending = undefined;
      fn(...args);
    }
  };
  const wrapper = (...args: A) => {
    pending = args;
    if (timer !== undefined) clearTimeout(timer);
    timer = setTimeout(run, waitMs);
  };
  wrapper.cancel = () => {
    if (timer !== undefined) clearTimeout(timer);
    timer = undefined;
    pending = undefined;
  };
  wrapper.flush = () => {
    if (timer !== undefined) clearTimeout(timer);
    run();
  };
  return wrapper;
}

// Newest-wins sequencing: each request takes a ticket; a response is
// delivered only while its ticket is still the newest, so out-of-order
// resolutions can never paint stale parameters onto the screen.
export class LatestWins<TArgs, TResult> {
  private ticket = 0;

  constructor(private readonly send: (args: TArgs) => Promise<TResult>) {}

  async request(args: TArgs): Promise<TResult | undefined> {
    const mine = ++this.ticket;
    const result = await this.send(args);
    return mine === this.ticket ? result : undefined;
  }

  /** True while no newer request has been issued since `request` started. */
  get idle(): boolean {
    return this.ticket === 0;
  }
}
