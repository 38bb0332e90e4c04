"""The six group-fairness checks over per-group confusion tables.

Each check compares one or two quantities across every pair of groups and
reports the largest absolute gap.  A check is *satisfied* when that gap is
within tolerance, *unsatisfied* when it exceeds it, and *indeterminate*
when any compared quantity is undefined in some group (for example the
false-negative-to-false-positive ratio when a group has no false
positives).  Indeterminate is a third state, deliberately distinct from
both satisfied and unsatisfied.

Naming note: the literature is inconsistent about error names conditioned
on predictions.  This module's ``conditional_use_accuracy_equality``
compares what is elsewhere called positive/negative predictive value
(PPV/NPV, precision for each predicted class); the failure-prediction side
alone is sometimes called predictive parity, and the success-class side of
``conditional_procedure_accuracy_equality`` alone is sometimes called
equality of opportunity.  Those one-sided variants are exposed as
components of the two-sided checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Optional, Union

from .confusion import (
    ConfusionTable,
    GroupedOutcomes,
    TableQuantities,
    ValidationError,
    build_tables,
    derive_quantities,
)

__all__ = [
    "DEFAULT_TOLERANCE",
    "CHECK_NAMES",
    "SATISFIED",
    "UNSATISFIED",
    "INDETERMINATE",
    "CheckResult",
    "FairnessReport",
    "overall_accuracy_equality",
    "statistical_parity",
    "conditional_procedure_accuracy_equality",
    "conditional_use_accuracy_equality",
    "treatment_equality",
    "total_fairness",
    "evaluate_all",
]

DEFAULT_TOLERANCE = 0.01

SATISFIED = "satisfied"
UNSATISFIED = "unsatisfied"
INDETERMINATE = "indeterminate"

CHECK_NAMES = (
    "overall_accuracy_equality",
    "statistical_parity",
    "conditional_procedure_accuracy_equality",
    "conditional_use_accuracy_equality",
    "treatment_equality",
    "total_fairness",
)


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one fairness check across all groups.

    ``per_group_values`` holds the compared quantities per group (one or
    two named values).  ``components`` holds the per-quantity max-pairwise
    gap, ``max_abs_disparity`` their maximum; both are ``None`` when the
    comparison is indeterminate.
    """

    name: str
    per_group_values: dict[str, dict[str, Optional[float]]]
    max_abs_disparity: Optional[float]
    tolerance: float
    status: str
    components: dict[str, Optional[float]] = field(default_factory=dict)

    @property
    def satisfied(self) -> bool:
        return self.status == SATISFIED

    def as_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "per_group_values": {g: dict(v) for g, v in self.per_group_values.items()},
            "max_abs_disparity": self.max_abs_disparity,
            "tolerance": self.tolerance,
            "status": self.status,
            "satisfied": self.satisfied,
            "components": dict(self.components),
        }


def _max_gap(values: list[Optional[float]]) -> Optional[float]:
    """Largest absolute pairwise difference; None when any value is undefined."""
    if any(v is None or not math.isfinite(v) for v in values):
        return None
    finite = [float(v) for v in values]  # type: ignore[arg-type]
    return max(finite) - min(finite)


def _compare(
    name: str,
    tables: Mapping[str, ConfusionTable],
    tol: float,
    extract: Mapping[str, Callable[[TableQuantities], Optional[float]]],
) -> CheckResult:
    if len(tables) < 2:
        raise ValidationError(f"{name}: need at least 2 groups, got {len(tables)}")
    quants = {g: derive_quantities(t) for g, t in tables.items()}
    per_group = {
        g: {label: fn(q) for label, fn in extract.items()} for g, q in quants.items()
    }
    components = {
        label: _max_gap([per_group[g][label] for g in per_group]) for label in extract
    }
    if any(gap is None for gap in components.values()):
        return CheckResult(name, per_group, None, tol, INDETERMINATE, components)
    disparity = max(gap for gap in components.values() if gap is not None)
    status = SATISFIED if disparity <= tol else UNSATISFIED
    return CheckResult(name, per_group, disparity, tol, status, components)


def overall_accuracy_equality(
    tables: Mapping[str, ConfusionTable], tol: float = DEFAULT_TOLERANCE
) -> CheckResult:
    """Equal overall classification accuracy, (tp + tn) / n, across groups."""
    return _compare(
        "overall_accuracy_equality",
        tables,
        tol,
        {"overall_accuracy": lambda q: q.overall_accuracy},
    )


def statistical_parity(
    tables: Mapping[str, ConfusionTable], tol: float = DEFAULT_TOLERANCE
) -> CheckResult:
    """Equal marginal distribution of predicted classes across groups.

    Only the predicted-fail share is compared; the predicted-success side
    is its exact complement, so its gaps are identical.
    """
    return _compare(
        "statistical_parity",
        tables,
        tol,
        {"pred_fail_share": lambda q: q.pred_fail_share},
    )


def conditional_procedure_accuracy_equality(
    tables: Mapping[str, ConfusionTable], tol: float = DEFAULT_TOLERANCE
) -> CheckResult:
    """Equal accuracy conditioning on the actual outcome (both classes).

    Compares tp/(tp+fn) and tn/(fp+tn) across groups, equivalent to
    requiring equal FNR and equal FPR.  The success-class component alone
    is the "equality of opportunity" variant.
    """
    return _compare(
        "conditional_procedure_accuracy_equality",
        tables,
        tol,
        {
            "failure_class_accuracy": lambda q: q.tpr,
            "success_class_accuracy": lambda q: q.tnr,
        },
    )


def conditional_use_accuracy_equality(
    tables: Mapping[str, ConfusionTable], tol: float = DEFAULT_TOLERANCE
) -> CheckResult:
    """Equal accuracy conditioning on the predicted outcome (both classes).

    Compares tp/(tp+fp) and tn/(fn+tn) across groups.  The
    failure-prediction component alone is the PPV-only ("predictive
    parity") variant.
    """
    return _compare(
        "conditional_use_accuracy_equality",
        tables,
        tol,
        {
            "failure_prediction_accuracy": lambda q: q.fail_pred_accuracy,
            "success_prediction_accuracy": lambda q: q.success_pred_accuracy,
        },
    )


def treatment_equality(
    tables: Mapping[str, ConfusionTable], tol: float = DEFAULT_TOLERANCE
) -> CheckResult:
    """Equal ratio of false negatives to false positives across groups.

    A group with false negatives but no false positives has an undefined
    (infinite) ratio, which makes the whole check indeterminate: an
    infinite lever cannot be compared numerically.  When *every* group is
    error-free (fn = fp = 0), treatment is trivially equal and the check
    is satisfied with zero disparity — the perfect-separation regime.
    """
    name = "treatment_equality"
    if len(tables) < 2:
        raise ValidationError(f"{name}: need at least 2 groups, got {len(tables)}")
    if all(t.fn == 0 and t.fp == 0 for t in tables.values()):
        per_group = {g: {"fn_fp_ratio": None} for g in tables}
        return CheckResult(name, per_group, 0.0, tol, SATISFIED, {"fn_fp_ratio": 0.0})
    return _compare(
        name,
        tables,
        tol,
        {"fn_fp_ratio": lambda q: q.cost_ratio_fn_to_fp},
    )


_COMPONENT_CHECKS = (
    overall_accuracy_equality,
    statistical_parity,
    conditional_procedure_accuracy_equality,
    conditional_use_accuracy_equality,
    treatment_equality,
)


def total_fairness(
    tables: Mapping[str, ConfusionTable], tol: float = DEFAULT_TOLERANCE
) -> CheckResult:
    """All five component checks at once.

    Satisfied only when every component check is satisfied; indeterminate
    when any component is indeterminate and none is outright unsatisfied.
    ``max_abs_disparity`` is the largest component disparity (note the
    treatment-equality component is a ratio gap, not a probability gap).
    """
    results = [check(tables, tol) for check in _COMPONENT_CHECKS]
    components = {r.name: r.max_abs_disparity for r in results}
    per_group: dict[str, dict[str, Optional[float]]] = {g: {} for g in tables}
    if any(r.status == UNSATISFIED for r in results):
        status = UNSATISFIED
    elif any(r.status == INDETERMINATE for r in results):
        status = INDETERMINATE
    else:
        status = SATISFIED
    determinate = [d for d in components.values() if d is not None]
    disparity = max(determinate) if determinate else None
    return CheckResult("total_fairness", per_group, disparity, tol, status, components)


@dataclass(frozen=True)
class FairnessReport:
    """Per-group quantities plus the six checks at one tolerance."""

    per_group_quantities: dict[str, TableQuantities]
    checks: tuple[CheckResult, ...]
    tolerance: float
    metadata: dict[str, Any] = field(default_factory=dict)

    def check(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def as_dict(self) -> dict[str, Any]:
        return {
            "schema": "fairlens-report/1",
            "tolerance": self.tolerance,
            "groups": {g: q.as_dict() for g, q in self.per_group_quantities.items()},
            "checks": [c.as_dict() for c in self.checks],
            "metadata": dict(self.metadata),
        }


def evaluate_all(
    data: Union[GroupedOutcomes, Mapping[str, ConfusionTable]],
    tol: float = DEFAULT_TOLERANCE,
    *,
    metadata: Optional[Mapping[str, Any]] = None,
) -> FairnessReport:
    """Run all six checks over a dataset (via its predictions) or tables."""
    if isinstance(data, GroupedOutcomes):
        tables: Mapping[str, ConfusionTable] = build_tables(data)
    else:
        tables = data
    checks = tuple(check(tables, tol) for check in _COMPONENT_CHECKS) + (
        total_fairness(tables, tol),
    )
    return FairnessReport(
        per_group_quantities={g: derive_quantities(t) for g, t in sorted(tables.items())},
        checks=checks,
        tolerance=tol,
        metadata=dict(metadata or {}),
    )
