// Explorer state: one plain object in a tiny observable store, fully
// reconstructible from (dataset id, parameter values) so a shared URL
// reproduces the exact view.

import type { FairnessReport, FrontierRow } from "./types.js";

export type Mode = "thresholds" | "cost_ratio" | "mixing";

export interface ExplorerParams {
  mode: Mode;
  thresholds: Record<string, number>;
  costRatio: number;
  mixingTol: number;
  tol: number;
}

export interface ExplorerState {
  datasetId: string | null;
  groups: string[];
  params: ExplorerParams;
  /** Last service response; every number on screen comes from here. */
  report: FairnessReport | null;
  /** The parameter snapshot the report answers. */
  reportParams: ExplorerParams | null;
  baseline: FairnessReport | null;
  frontierGroup: string | null;
  frontierRows: FrontierRow[] | null;
  error: string | null;
  busy: boolean;
}

export const DEFAULT_PARAMS: ExplorerParams = {
  mode: "thresholds",
  thresholds: {},
  costRatio: 1.0,
  mixingTol: 0.0,
  tol: 0.01,
};

export function initialState(): ExplorerState {
  return {
    datasetId: null,
    groups: [],
    params: structuredClone(DEFAULT_PARAMS),
    report: null,
    reportParams: null,
    baseline: null,
    frontierGroup: null,
    frontierRows: null,
    error: null,
    busy: false,
  };
}

export type Listener = (state: ExplorerState) => void;

export class Store {
  private listeners = new Set<Listener>();

  constructor(public state: ExplorerState = initialState()) {}

  update(partial: Partial<ExplorerState>): void {
    this.state = { ...this.state, ...partial };
    for (const listener of this.listeners) listener(this.state);
  }

  subscribe(listener: Listener): () => void {
    this.listeners.add(listener);
    return () => this.listeners.delete(listener);
  }
}

// URL codec.  Keys: ds (dataset id), mode, tol, cost, mtol, thr.<group>.
export function encodeParams(
  datasetId: string | null,
  params: ExplorerParams,
): string {
  const query = new URLSearchParams();
  if (datasetId) query.set("ds", datasetId);
  query.set("mode", params.mode);
  query.set("tol", String(params.tol));
  if (params.mode === "cost_ratio") query.set("cost", String(params.costRatio));
  if (params.mode === "mixing") query.set("mtol", String(params.mixingTol));
  if (params.mode === "thresholds") {
    for (const group of Object.keys(params.thresholds).sort()) {
      query.set(`thr.${group}`, String(params.thresholds[group]));
    }
  }
  return query.toString();
}

export function decodeParams(search: string): {
  datasetId: string | null;
  params: ExplorerParams;
} {
  const query = new URLSearchParams(search);
  const params = structuredClone(DEFAULT_PARAMS);
  const mode = query.get("mode");
  if (mode === "thresholds" || mode === "cost_ratio" || mode === "mixing") {
    params.mode = mode;
  }
  const num = (raw: string | null): number | undefined => {
    if (raw === null) return undefined;
    const value = Number(raw);
    return Number.isFinite(value) ? value : undefined;
  };
  params.tol = num(query.get("tol")) ?? params.tol;
  params.costRatio = num(query.get("cost")) ?? params.costRatio;
  params.mixingTol = num(query.get("mtol")) ?? params.mixingTol;
  for (const [key, raw] of query.entries()) {
    if (key.startsWith("thr.")) {
      const value = num(raw);
      if (value !== undefined) params.thresholds[key.slice(4)] = value;
    }
  }
  return { datasetId: query.get("ds"), params };
}
