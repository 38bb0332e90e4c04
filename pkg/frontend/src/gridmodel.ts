// View models for the metrics grid and check badges.  Cell values are the
// service's JSON numbers rendered verbatim with String(); the UI performs
// no metric arithmetic.  The one computed column is the baseline delta,
// which subtracts two verbatim service numbers and is labelled as such.

import type { CheckResult, FairnessReport } from "./types.js";

export const GRID_COLUMNS: ReadonlyArray<{ key: string; label: string }> = [
  { key: "n", label: "N" },
  { key: "base_rate_fail", label: "Base rate (fail)" },
  { key: "fail_pred_accuracy", label: "Cond. use acc. (fail)" },
  { key: "success_pred_accuracy", label: "Cond. use acc. (succ.)" },
  { key: "fnr", label: "FNR" },
  { key: "fpr", label: "FPR" },
];

export const CHECK_LABELS: Record<string, string> = {
  overall_accuracy_equality: "Overall accuracy",
  statistical_parity: "Statistical parity",
  conditional_procedure_accuracy_equality: "Procedure accuracy",
  conditional_use_accuracy_equality: "Use accuracy",
  treatment_equality: "Treatment equality",
  total_fairness: "Total fairness",
};

/** Verbatim rendering of a service-reported number; undefined shows as a dash. */
export function displayValue(value: number | null | undefined): string {
  return value === null || value === undefined ? "—" : String(value);
}

export interface GridCell {
  key: string;
  value: string;
  /** Signed current-minus-baseline difference, "" without a baseline. */
  delta: string;
}

export interface GridRow {
  group: string;
  cells: GridCell[];
}

function quantity(report: FairnessReport, group: string, key: string): number | null {
  const value = (report.groups[group] as unknown as Record<string, number | null>)[key];
  return value ?? null;
}

export function deltaValue(
  current: number | null,
  baseline: number | null | undefined,
): string {
  if (baseline === null || baseline === undefined || current === null) return "";
  const diff = current - baseline;
  if (diff === 0) return "=";
  const sign = diff > 0 ? "+" : "−";
  return `${sign}${Math.abs(diff).toPrecision(3)}`;
}

export function buildGrid(
  report: FairnessReport,
  baseline: FairnessReport | null,
): GridRow[] {
  return Object.keys(report.groups)
    .sort()
    .map((group) => ({
      group,
      cells: GRID_COLUMNS.map(({ key }) => {
        const current = quantity(report, group, key);
        const base =
          baseline && baseline.groups[group]
            ? quantity(baseline, group, key)
            : undefined;
        return { key, value: displayValue(current), delta: deltaValue(current, base) };
      }),
    }));
}

export interface Badge {
  name: string;
  label: string;
  status: CheckResult["status"];
  satisfied: boolean;
  disparity: string;
}

export function buildBadges(report: FairnessReport): Badge[] {
  return report.checks.map((check) => ({
    name: check.name,
    label: CHECK_LABELS[check.name] ?? check.name,
    status: check.status,
    satisfied: check.satisfied,
    disparity: displayValue(check.max_abs_disparity),
  }));
}
