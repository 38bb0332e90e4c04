// Orchestration between controls, the store, and the service — DOM-free
// so the request-flow contracts (debounce, newest-wins, URL state) are
// testable headless.  Every control change updates the parameter state
// immediately, then schedules one debounced what-if; responses for
// superseded parameter sets are discarded unseen.

import { ApiError, LatestWins, debounce, type Debounced, type WhatifBody } from "./api.js";
import type { ExplorerParams, Mode, Store } from "./state.js";
import type { FairnessReport, FrontierResponse } from "./types.js";

export const DEBOUNCE_MS = 150;
export const FRONTIER_GRID = 41;

/** The slice of the service client the controller needs (ApiClient fits). */
export interface ExplorerApi {
  whatif(datasetId: string, body: WhatifBody): Promise<FairnessReport>;
  uploadCsv(text: string): Promise<{ dataset_id: string }>;
  datasetFromScenario(name: string): Promise<{ dataset_id: string }>;
  frontier(datasetId: string, group: string, grid: number): Promise<FrontierResponse>;
}

export function whatifBody(params: ExplorerParams): WhatifBody {
  if (params.mode === "thresholds") {
    return { thresholds: { ...params.thresholds }, tol: params.tol };
  }
  if (params.mode === "cost_ratio") {
    return { cost_ratio: params.costRatio, tol: params.tol };
  }
  return { mixing: { solve: true, tol: params.mixingTol }, tol: params.tol };
}

export class ExplorerController {
  private readonly sender: LatestWins<
    { body: WhatifBody; params: ExplorerParams },
    { report: FairnessReport; params: ExplorerParams }
  >;
  private readonly scheduleRefresh: Debounced<[]>;
  private inflight: Promise<void> = Promise.resolve();

  constructor(
    private readonly api: ExplorerApi,
    readonly store: Store,
    debounceMs: number = DEBOUNCE_MS,
  ) {
    this.sender = new LatestWins(async ({ body, params }) => ({
      report: await this.api.whatif(this.store.state.datasetId ?? "", body),
      params,
    }));
    this.scheduleRefresh = debounce(() => {
      this.inflight = this.refresh();
    }, debounceMs);
  }

  /** Load a dataset and discover its groups via a neutral what-if. */
  async loadDataset(datasetId: string): Promise<void> {
    this.scheduleRefresh.cancel();
    this.store.update({
      datasetId,
      report: null,
      reportParams: null,
      baseline: null,
      frontierRows: null,
      frontierGroup: null,
      error: null,
      busy: true,
    });
    try {
      // cost_ratio 1 needs no group knowledge; its report carries the
      // group list and base rates used to seed the threshold sliders.
      const probe = await this.api.whatif(datasetId, { cost_ratio: 1.0 });
      const groups = Object.keys(probe.groups).sort();
      const params = this.store.state.params;
      const thresholds: Record<string, number> = {};
      for (const group of groups) {
        thresholds[group] = params.thresholds[group] ?? 0.5;
      }
      this.store.update({
        groups,
        params: { ...params, thresholds },
        busy: false,
      });
      await this.refresh();
    } catch (err) {
      this.store.update({ busy: false, error: describeError(err) });
    }
  }

  async uploadCsv(text: string): Promise<void> {
    try {
      const { dataset_id } = await this.api.uploadCsv(text);
      await this.loadDataset(dataset_id);
    } catch (err) {
      this.store.update({ error: describeError(err) });
    }
  }

  async loadScenario(name: string): Promise<void> {
    try {
      const { dataset_id } = await this.api.datasetFromScenario(name);
      await this.loadDataset(dataset_id);
    } catch (err) {
      this.store.update({ error: describeError(err) });
    }
  }

  setMode(mode: Mode): void {
    this.store.update({ params: { ...this.store.state.params, mode } });
    this.scheduleRefresh();
  }

  setThreshold(group: string, value: number): void {
    const params = this.store.state.params;
    this.store.update({
      params: {
        ...params,
        thresholds: { ...params.thresholds, [group]: value },
      },
    });
    this.scheduleRefresh();
  }

  setCostRatio(value: number): void {
    this.store.update({ params: { ...this.store.state.params, costRatio: value } });
    this.scheduleRefresh();
  }

  setMixingTol(value: number): void {
    this.store.update({ params: { ...this.store.state.params, mixingTol: value } });
    this.scheduleRefresh();
  }

  setTolerance(value: number): void {
    this.store.update({ params: { ...this.store.state.params, tol: value } });
    this.scheduleRefresh();
  }

  pinBaseline(): void {
    this.store.update({ baseline: this.store.state.report });
  }

  /** Issue the what-if for the *current* parameters (newest wins). */
  async refresh(): Promise<void> {
    const { datasetId, params } = this.store.state;
    if (!datasetId) return;
    const snapshot = structuredClone(params);
    this.store.update({ busy: true });
    try {
      const delivered = await this.sender.request({
        body: whatifBody(snapshot),
        params: snapshot,
      });
      if (delivered !== undefined) {
        this.store.update({
          report: delivered.report,
          reportParams: delivered.params,
          error: null,
          busy: false,
        });
      }
    } catch (err) {
      this.store.update({ busy: false, error: describeError(err) });
    }
  }

  /** Run any pending debounced refresh now and wait for it. */
  async settle(): Promise<void> {
    this.scheduleRefresh.flush();
    await this.inflight;
  }

  async showFrontier(group: string): Promise<void> {
    const { datasetId } = this.store.state;
    if (!datasetId) return;
    try {
      const frontier = await this.api.frontier(datasetId, group, FRONTIER_GRID);
      this.store.update({ frontierGroup: group, frontierRows: frontier.rows });
    } catch (err) {
      this.store.update({ error: describeError(err) });
    }
  }
}

export function describeError(err: unknown): string {
  if (err instanceof ApiError) {
    if (err.lineErrors.length) {
      const lines = err.lineErrors
        .slice(0, 5)
        .map((e) => `line ${e.line}: ${e.message}`)
        .join("; ");
      return `${err.message} (${lines})`;
    }
    return err.message;
  }
  return err instanceof Error ? err.message : String(err);
}
