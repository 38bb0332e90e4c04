"""In-processing corrections: choose decision thresholds with fairness in mind.

Scores are read as failure probabilities, so the cost-minimizing decision
rule for a false-negative:false-positive cost ratio ``r`` is a score
threshold of ``1 / (1 + r)``.  :func:`tune_group_thresholds` instead picks
each group's threshold to match a reference group's conditional use
accuracy (PPV by default, the quantity equalized in the arraignment study
the toolkit reconstructs), sweeping that group's observed score cutpoints
exhaustively.  Retraining a model per group is out of scope; per-group
thresholds are the desk-scale equivalent of shifting each group's class
prior during training.

:func:`uncertainty_reassign` spends a flip budget on the records whose
scores sit closest to their group threshold — the predictions that are
nearly coin flips — greedily, only keeping flips that shrink a chosen
fairness check's disparity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

from . import checks as checks_mod
from .confusion import (
    THRESHOLD_ABOVE_MAX,
    ComputationError,
    ConfusionTable,
    GroupedOutcomes,
    TableQuantities,
    ValidationError,
    apply_thresholds,
    build_tables,
    derive_quantities,
    table_from_scores,
)

__all__ = [
    "ThresholdPolicy",
    "TuneResult",
    "threshold_for_cost_ratio",
    "policy_from_cost_ratio",
    "tune_group_thresholds",
    "uncertainty_reassign",
]

RATIONALE_COST_RATIO = "cost_ratio"
RATIONALE_TUNED = "tuned_to_reference"
RATIONALE_MANUAL = "manual"

_TARGET_QUANTITIES = {
    "ppv": ("fail_pred_accuracy",),
    "npv": ("success_pred_accuracy",),
    "both": ("fail_pred_accuracy", "success_pred_accuracy"),
}


@dataclass(frozen=True)
class ThresholdPolicy:
    """Per-group score cutoffs plus where they came from."""

    per_group_threshold: dict[str, float]
    rationale: str
    cost_ratio_fn_to_fp: Optional[float] = None
    reference_group: Optional[str] = None

    def __post_init__(self) -> None:
        for g, t in self.per_group_threshold.items():
            if not (0.0 <= t <= THRESHOLD_ABOVE_MAX):
                raise ValidationError(f"group {g!r}: threshold {t!r} outside [0, 1]")

    def as_dict(self) -> dict[str, object]:
        return {
            "per_group_threshold": dict(self.per_group_threshold),
            "rationale": self.rationale,
            "cost_ratio_fn_to_fp": self.cost_ratio_fn_to_fp,
            "reference_group": self.reference_group,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "ThresholdPolicy":
        try:
            return cls(
                per_group_threshold={str(g): float(t) for g, t in raw["per_group_threshold"].items()},
                rationale=str(raw.get("rationale", RATIONALE_MANUAL)),
                cost_ratio_fn_to_fp=raw.get("cost_ratio_fn_to_fp"),
                reference_group=raw.get("reference_group"),
            )
        except (KeyError, TypeError, AttributeError) as exc:
            raise ValidationError(f"malformed threshold policy: {exc}") from exc


def threshold_for_cost_ratio(r: float) -> float:
    """Score threshold minimizing expected cost when a false negative costs
    ``r`` times a false positive: classify fail when score >= 1/(1+r)."""
    if not (math.isfinite(r) and r > 0):
        if r == math.inf:
            return 0.0
        raise ValidationError(f"cost ratio must be > 0, got {r!r}")
    return 1.0 / (1.0 + r)


def policy_from_cost_ratio(groups: tuple[str, ...] | list[str], r: float) -> ThresholdPolicy:
    """The cost-ratio threshold applied uniformly to every group."""
    t = threshold_for_cost_ratio(r)
    return ThresholdPolicy(
        per_group_threshold={g: t for g in groups},
        rationale=RATIONALE_COST_RATIO,
        cost_ratio_fn_to_fp=r,
    )


@dataclass(frozen=True)
class TuneResult:
    """A tuned policy plus how close each group got to the reference."""

    policy: ThresholdPolicy
    reference_values: dict[str, float]
    achieved_gap: dict[str, float]
    indeterminate_groups: tuple[str, ...] = ()


def _target_values(q: TableQuantities, target: str) -> Optional[tuple[float, ...]]:
    values = tuple(getattr(q, name) for name in _TARGET_QUANTITIES[target])
    if any(v is None for v in values):
        return None
    return values  # type: ignore[return-value]


def _gap(values: tuple[float, ...], reference: tuple[float, ...]) -> float:
    return max(abs(v - r) for v, r in zip(values, reference))


def _sweep_target_values(records, target: str):
    """Yield (cutpoint, target values) over a group's candidate thresholds.

    One descending sort plus cumulative weight sums, so the full sweep of
    {0, every distinct score, above-max} costs O(n log n) instead of a
    table rebuild per cutpoint.  Ties score >= threshold as fail, matching
    table_from_scores.  Cutpoints where any target quantity is undefined
    are skipped.
    """
    by_score = sorted(records, key=lambda rec: rec.score, reverse=True)
    w1 = [0.0]  # cumulative actual-failure weight among the top-k scores
    w0 = [0.0]
    for rec in by_score:
        w1.append(w1[-1] + (rec.weight if rec.y == 1 else 0.0))
        w0.append(w0[-1] + (rec.weight if rec.y == 0 else 0.0))
    total1, total0 = w1[-1], w0[-1]

    def values_at(k: int) -> Optional[tuple[float, ...]]:
        tp, fp = w1[k], w0[k]
        fn, tn = total1 - tp, total0 - fp
        ppv = tp / (tp + fp) if tp + fp > 0 else None
        npv = tn / (fn + tn) if fn + tn > 0 else None
        picked = {"ppv": (ppv,), "npv": (npv,), "both": (ppv, npv)}[target]
        return None if any(v is None for v in picked) else picked

    # Ascending candidate cutpoints: threshold 0 takes everyone (k = n),
    # a distinct score d takes the k records scoring >= d, above-max none.
    n = len(by_score)
    candidates: list[tuple[float, int]] = [(0.0, n)]
    for i in range(n - 1, -1, -1):  # ascending scores; i+1 = count of >= s[i]
        if i == n - 1 or by_score[i].score != by_score[i + 1].score:
            candidates.append((by_score[i].score, i + 1))
    candidates.append((THRESHOLD_ABOVE_MAX, 0))
    for cut, k in candidates:
        values = values_at(k)
        if values is not None:
            yield cut, values


def tune_group_thresholds(
    data: GroupedOutcomes,
    reference: str,
    target: str = "ppv",
    tol: float = checks_mod.DEFAULT_TOLERANCE,
    *,
    reference_threshold: Optional[float] = None,
) -> TuneResult:
    """Pick per-group thresholds matching the reference group's conditional
    use accuracy as closely as the score distribution allows.

    The reference group keeps ``reference_threshold`` (default: the
    symmetric-cost threshold 0.5).  Every other group's threshold is the
    argmin of |target quantity - reference value| over that group's
    distinct scores plus both boundary cutpoints; for ``target="both"``
    the max of the PPV and NPV gaps is minimized.  Ties break toward the
    smaller threshold (more predicted failures).  A group with no cutpoint
    where the target is defined is flagged indeterminate and omitted from
    the policy; an undefined target for the *reference* is an error.
    ``tol`` is advisory: the achieved gaps are reported and the caller
    decides whether they are close enough.
    """
    if target not in _TARGET_QUANTITIES:
        raise ValidationError(f"unknown tuning target {target!r}; use ppv, npv or both")
    groups = data.groups()
    if reference not in groups:
        raise ValidationError(f"reference group {reference!r} not in data (groups: {groups})")
    if reference_threshold is None:
        reference_threshold = threshold_for_cost_ratio(1.0)
    ref_q = derive_quantities(table_from_scores(data, reference, reference_threshold))
    ref_values = _target_values(ref_q, target)
    if ref_values is None:
        raise ComputationError(
            f"reference group {reference!r} has an undefined {target} at threshold "
            f"{reference_threshold}; pick another reference threshold"
        )
    thresholds = {reference: reference_threshold}
    achieved = {reference: 0.0}
    indeterminate: list[str] = []
    by_group = data.by_group()
    for group in groups:
        if group == reference:
            continue
        missing = [rec.id for rec in by_group[group] if rec.score is None]
        if missing:
            raise ValidationError(f"group {group!r} has records without scores: {missing[:5]}")
        best: Optional[tuple[float, float]] = None  # (gap, threshold)
        for cut, values in _sweep_target_values(by_group[group], target):
            gap = _gap(values, ref_values)
            if best is None or gap < best[0] - 1e-15:
                best = (gap, cut)
        if best is None:
            indeterminate.append(group)
            continue
        achieved[group] = best[0]
        thresholds[group] = best[1]
    policy = ThresholdPolicy(
        per_group_threshold=thresholds,
        rationale=RATIONALE_TUNED,
        reference_group=reference,
    )
    return TuneResult(
        policy=policy,
        reference_values={name: v for name, v in zip(_TARGET_QUANTITIES[target], ref_values)},
        achieved_gap=achieved,
        indeterminate_groups=tuple(indeterminate),
    )


_CHECK_FUNCS = {
    "overall_accuracy_equality": checks_mod.overall_accuracy_equality,
    "statistical_parity": checks_mod.statistical_parity,
    "conditional_procedure_accuracy_equality": checks_mod.conditional_procedure_accuracy_equality,
    "conditional_use_accuracy_equality": checks_mod.conditional_use_accuracy_equality,
    "treatment_equality": checks_mod.treatment_equality,
    "total_fairness": checks_mod.total_fairness,
}


def _disparity(tables: dict[str, ConfusionTable], objective: str) -> Optional[float]:
    return _CHECK_FUNCS[objective](tables).max_abs_disparity


def uncertainty_reassign(
    data: GroupedOutcomes,
    policy: ThresholdPolicy,
    budget: float,
    objective: str,
) -> tuple[GroupedOutcomes, tuple[str, ...]]:
    """Flip the least-certain policy predictions while that reduces the
    objective check's disparity, up to a budget of records.

    Records are visited once, ordered by |score - group threshold|
    ascending (ties keep input order); a flip is kept only when the
    disparity strictly decreases, so the disparity is monotone along the
    flip log.  ``budget`` is a record count, or a fraction of the dataset
    when given as a float below 1.  Returns the reassigned predictions
    and the flipped record ids, in flip order.
    """
    if objective not in _CHECK_FUNCS:
        raise ValidationError(
            f"unknown objective {objective!r}; one of {sorted(_CHECK_FUNCS)}"
        )
    if budget < 0:
        raise ValidationError(f"budget must be >= 0, got {budget!r}")
    if isinstance(budget, float) and budget < 1.0:
        budget_count = int(budget * len(data.records) + 1e-9)
    else:
        budget_count = int(budget)
    predicted = apply_thresholds(data, policy.per_group_threshold)
    yhat = {rec.id: rec.yhat for rec in predicted.records}
    tables = {g: list(t.cells()) for g, t in build_tables(predicted).items()}
    current = _disparity({g: ConfusionTable(*c) for g, c in tables.items()}, objective)
    order = sorted(
        range(len(predicted.records)),
        key=lambda i: abs(
            predicted.records[i].score - policy.per_group_threshold[predicted.records[i].group]
        ),
    )
    flipped: list[str] = []
    cell_of = {(1, 1): 0, (1, 0): 1, (0, 1): 2, (0, 0): 3}
    for i in order:
        if len(flipped) >= budget_count:
            break
        rec = predicted.records[i]
        old, new = yhat[rec.id], 1 - yhat[rec.id]
        quad = tables[rec.group]
        quad[cell_of[(rec.y, old)]] -= rec.weight
        quad[cell_of[(rec.y, new)]] += rec.weight
        candidate = _disparity({g: ConfusionTable(*c) for g, c in tables.items()}, objective)
        if (
            current is not None
            and candidate is not None
            and candidate < current - 1e-15
        ):
            yhat[rec.id] = new
            current = candidate
            flipped.append(rec.id)
        else:
            quad[cell_of[(rec.y, new)]] -= rec.weight
            quad[cell_of[(rec.y, old)]] += rec.weight
    out = predicted.with_records(
        rec if rec.yhat == yhat[rec.id] else replace(rec, yhat=yhat[rec.id])
        for rec in predicted.records
    )
    return out, tuple(flipped)
