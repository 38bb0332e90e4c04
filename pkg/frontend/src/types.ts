// Wire types mirroring the audit service's fairlens-report/1 documents.
// The UI never computes metrics from these; it only displays them.

export type CheckStatus = "satisfied" | "unsatisfied" | "indeterminate";

export interface GroupQuantities {
  n: number;
  base_rate_fail: number;
  base_rate_success: number;
  pred_fail_share: number;
  pred_success_share: number;
  overall_error: number;
  overall_accuracy: number;
  fnr: number | null;
  fpr: number | null;
  fail_pred_error: number | null;
  success_pred_error: number | null;
  fail_pred_accuracy: number | null;
  success_pred_accuracy: number | null;
  cost_ratio_fn_to_fp: number | null;
}

export interface CheckResult {
  name: string;
  status: CheckStatus;
  satisfied: boolean;
  tolerance: number;
  max_abs_disparity: number | null;
  per_group_values: Record<string, Record<string, number | null>>;
  components: Record<string, number | null>;
}

export interface FairnessReport {
  schema: string;
  tolerance: number;
  groups: Record<string, GroupQuantities>;
  checks: CheckResult[];
  metadata: Record<string, unknown>;
}

export interface FrontierRow {
  threshold: number;
  [quantity: string]: number | null;
}

export interface FrontierResponse {
  group: string;
  grid: number;
  rows: FrontierRow[];
}

export interface ScenarioDetail {
  name: string;
  notes: string;
  groups: Record<
    string,
    { cells: Record<string, number>; quantities: GroupQuantities }
  >;
}

export interface LineError {
  line: number;
  message: string;
}
