"""Confusion tables for binary risk classification, per protected group.

Conventions used throughout the package:

* The outcome of interest ("failure", e.g. a re-arrest) is coded ``y = 1``
  and is the *positive* class.  A success is coded ``y = 0`` and is the
  negative class.
* A record is predicted to fail when its risk score is at or above the
  decision threshold (ties classify as "fail").
* Cell counts may be fractional: weighted records produce weighted cells,
  which downstream corrections rely on.  Use ``integer_only=True`` in
  :func:`build_tables` to reject fractional cells.
* A quantity whose denominator is zero is ``None`` ("undefined"), never a
  silent ``0.0`` or ``NaN``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Optional

__all__ = [
    "THRESHOLD_ABOVE_MAX",
    "ConfusionTable",
    "TableQuantities",
    "Record",
    "GroupedOutcomes",
    "ValidationError",
    "ComputationError",
    "build_tables",
    "table_from_scores",
    "tables_from_thresholds",
    "apply_thresholds",
    "derive_quantities",
]

# Threshold strictly above any valid score (scores live in [0, 1]); using it
# predicts success for every record.  Exposed so sweeps and grids can include
# the "predict nobody fails" boundary.  The value survives 6-significant-digit
# report rendering unchanged.
THRESHOLD_ABOVE_MAX = 1.00001


class ValidationError(ValueError):
    """Invalid input data (bad values, missing fields, malformed files)."""


class ComputationError(RuntimeError):
    """A requested quantity cannot be computed (e.g. an undefined target)."""


@dataclass(frozen=True)
class ConfusionTable:
    """One group's cross-tabulation of actual outcome by predicted outcome.

    Cells follow the usual 2x2 layout: ``tp`` actual failures predicted to
    fail, ``fn`` actual failures predicted to succeed, ``fp`` actual
    successes predicted to fail, ``tn`` actual successes predicted to
    succeed.  Cells are non-negative and may be fractional when records
    carry weights.
    """

    tp: float
    fn: float
    fp: float
    tn: float

    def __post_init__(self) -> None:
        for name in ("tp", "fn", "fp", "tn"):
            cell = getattr(self, name)
            if not math.isfinite(cell) or cell < 0:
                raise ValidationError(f"cell {name} must be finite and >= 0, got {cell!r}")

    @property
    def n(self) -> float:
        return self.tp + self.fn + self.fp + self.tn

    @property
    def actual_fail(self) -> float:
        return self.tp + self.fn

    @property
    def actual_success(self) -> float:
        return self.fp + self.tn

    @property
    def pred_fail(self) -> float:
        return self.tp + self.fp

    @property
    def pred_success(self) -> float:
        return self.fn + self.tn

    def scaled(self, k: float) -> "ConfusionTable":
        """Return the table with every cell multiplied by ``k > 0``."""
        if k <= 0:
            raise ValidationError(f"scale factor must be > 0, got {k!r}")
        return ConfusionTable(self.tp * k, self.fn * k, self.fp * k, self.tn * k)

    def cells(self) -> tuple[float, float, float, float]:
        return (self.tp, self.fn, self.fp, self.tn)


def _ratio(num: float, den: float) -> Optional[float]:
    return num / den if den > 0 else None


@dataclass(frozen=True)
class TableQuantities:
    """Every rate derivable from one confusion table.

    Complementary pairs are exact complements by construction:
    ``base_rate_success == 1 - base_rate_fail`` and
    ``pred_success_share == 1 - pred_fail_share`` hold bit-exactly.
    Quantities with a zero denominator are ``None``.  The cost ratio
    ``fn / fp`` is ``inf`` when ``fp == 0 < fn`` and ``None`` when both
    error cells are zero.
    """

    n: float
    base_rate_fail: float
    base_rate_success: float
    pred_fail_share: float
    pred_success_share: float
    overall_error: float
    fnr: Optional[float]
    fpr: Optional[float]
    fail_pred_error: Optional[float]
    success_pred_error: Optional[float]
    cost_ratio_fn_to_fp: Optional[float]

    @property
    def overall_accuracy(self) -> float:
        return 1.0 - self.overall_error

    @property
    def tpr(self) -> Optional[float]:
        """Conditional procedure accuracy on actual failures, 1 - FNR."""
        return None if self.fnr is None else 1.0 - self.fnr

    @property
    def tnr(self) -> Optional[float]:
        """Conditional procedure accuracy on actual successes, 1 - FPR."""
        return None if self.fpr is None else 1.0 - self.fpr

    @property
    def fail_pred_accuracy(self) -> Optional[float]:
        """Conditional use accuracy of failure predictions (PPV)."""
        return None if self.fail_pred_error is None else 1.0 - self.fail_pred_error

    @property
    def success_pred_accuracy(self) -> Optional[float]:
        """Conditional use accuracy of success predictions (NPV)."""
        return None if self.success_pred_error is None else 1.0 - self.success_pred_error

    def as_dict(self) -> dict[str, Optional[float]]:
        return {
            "n": self.n,
            "base_rate_fail": self.base_rate_fail,
            "base_rate_success": self.base_rate_success,
            "pred_fail_share": self.pred_fail_share,
            "pred_success_share": self.pred_success_share,
            "overall_error": self.overall_error,
            "overall_accuracy": self.overall_accuracy,
            "fnr": self.fnr,
            "fpr": self.fpr,
            "fail_pred_error": self.fail_pred_error,
            "success_pred_error": self.success_pred_error,
            "fail_pred_accuracy": self.fail_pred_accuracy,
            "success_pred_accuracy": self.success_pred_accuracy,
            "cost_ratio_fn_to_fp": self.cost_ratio_fn_to_fp,
        }


def derive_quantities(table: ConfusionTable) -> TableQuantities:
    """Compute all rates of a confusion table.

    Raises :class:`ValidationError` when the table is empty (``n == 0``).
    Individual quantities with zero denominators come back as ``None``
    rather than failing the whole derivation.
    """
    n = table.n
    if n <= 0:
        raise ValidationError("confusion table is empty (n = 0); no quantities defined")
    base_rate_fail = table.actual_fail / n
    pred_fail_share = table.pred_fail / n
    if table.fp > 0:
        cost_ratio: Optional[float] = table.fn / table.fp
    elif table.fn > 0:
        cost_ratio = math.inf
    else:
        cost_ratio = None
    return TableQuantities(
        n=n,
        base_rate_fail=base_rate_fail,
        base_rate_success=1.0 - base_rate_fail,
        pred_fail_share=pred_fail_share,
        pred_success_share=1.0 - pred_fail_share,
        overall_error=(table.fn + table.fp) / n,
        fnr=_ratio(table.fn, table.actual_fail),
        fpr=_ratio(table.fp, table.actual_success),
        fail_pred_error=_ratio(table.fp, table.pred_fail),
        success_pred_error=_ratio(table.fn, table.pred_success),
        cost_ratio_fn_to_fp=cost_ratio,
    )


@dataclass(frozen=True)
class Record:
    """One observation: outcome, group membership, and model output.

    ``y`` is the actual outcome (1 = failure), ``yhat`` an assigned class,
    ``score`` a risk score in [0, 1] interpreted as failure probability.
    At least one of ``score`` / ``yhat`` must be present.  Predictor
    vectors are positional; their names live on :class:`GroupedOutcomes`.
    """

    id: str
    group: str
    y: int
    score: Optional[float] = None
    yhat: Optional[int] = None
    weight: float = 1.0
    legitimate: tuple[float, ...] = ()
    protected: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if not self.id:
            raise ValidationError("record id must be non-empty")
        if not self.group:
            raise ValidationError(f"record {self.id!r}: group must be non-empty")
        if self.y not in (0, 1):
            raise ValidationError(f"record {self.id!r}: y must be 0 or 1, got {self.y!r}")
        if self.yhat is not None and self.yhat not in (0, 1):
            raise ValidationError(f"record {self.id!r}: yhat must be 0 or 1, got {self.yhat!r}")
        if self.score is not None and not (0.0 <= self.score <= 1.0):
            raise ValidationError(f"record {self.id!r}: score must be in [0, 1], got {self.score!r}")
        if self.score is None and self.yhat is None:
            raise ValidationError(f"record {self.id!r}: needs a score or a prediction")
        if not (math.isfinite(self.weight) and self.weight > 0):
            raise ValidationError(f"record {self.id!r}: weight must be > 0, got {self.weight!r}")


@dataclass(frozen=True)
class GroupedOutcomes:
    """An immutable dataset of records with named predictor columns."""

    records: tuple[Record, ...]
    legitimate_names: tuple[str, ...] = ()
    protected_names: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "records", tuple(self.records))
        object.__setattr__(self, "legitimate_names", tuple(self.legitimate_names))
        object.__setattr__(self, "protected_names", tuple(self.protected_names))
        seen: set[str] = set()
        for rec in self.records:
            if rec.id in seen:
                raise ValidationError(f"duplicate record id {rec.id!r}")
            seen.add(rec.id)
            if len(rec.legitimate) != len(self.legitimate_names):
                raise ValidationError(
                    f"record {rec.id!r}: expected {len(self.legitimate_names)} legitimate "
                    f"predictor values, got {len(rec.legitimate)}"
                )
            if len(rec.protected) != len(self.protected_names):
                raise ValidationError(
                    f"record {rec.id!r}: expected {len(self.protected_names)} protected "
                    f"predictor values, got {len(rec.protected)}"
                )

    def __len__(self) -> int:
        return len(self.records)

    def groups(self) -> tuple[str, ...]:
        return tuple(sorted({rec.group for rec in self.records}))

    def by_group(self) -> dict[str, tuple[Record, ...]]:
        out: dict[str, list[Record]] = {}
        for rec in self.records:
            out.setdefault(rec.group, []).append(rec)
        return {g: tuple(rs) for g, rs in sorted(out.items())}

    def with_records(self, records: Iterable[Record]) -> "GroupedOutcomes":
        return GroupedOutcomes(tuple(records), self.legitimate_names, self.protected_names)


def build_tables(
    data: GroupedOutcomes, *, integer_only: bool = False
) -> dict[str, ConfusionTable]:
    """Accumulate one weighted confusion table per group from predictions.

    Every record must carry ``yhat``.  With ``integer_only=True`` the
    resulting cells must be whole numbers (within 1e-9), which guards
    against accidentally mixing weighted data into a count-based audit.
    """
    if not data.records:
        raise ValidationError("no groups: dataset is empty")
    cells: dict[str, list[float]] = {}
    for rec in data.records:
        if rec.yhat is None:
            raise ValidationError(f"record {rec.id!r} has no prediction (yhat)")
        quad = cells.setdefault(rec.group, [0.0, 0.0, 0.0, 0.0])
        idx = {(1, 1): 0, (1, 0): 1, (0, 1): 2, (0, 0): 3}[(rec.y, rec.yhat)]
        quad[idx] += rec.weight
    tables = {g: ConfusionTable(*quad) for g, quad in sorted(cells.items())}
    if integer_only:
        for g, t in tables.items():
            for cell in t.cells():
                if abs(cell - round(cell)) > 1e-9:
                    raise ValidationError(f"group {g!r}: fractional cell {cell!r} in integer-only mode")
    return tables


def _classify(score: float, threshold: float) -> int:
    return 1 if score >= threshold else 0


def apply_thresholds(
    data: GroupedOutcomes, thresholds: Mapping[str, float] | float
) -> GroupedOutcomes:
    """Assign ``yhat = 1 iff score >= threshold`` using per-group thresholds.

    A single float applies to every group.  Every record needs a score.
    """
    if isinstance(thresholds, Mapping):
        missing = set(data.groups()) - set(thresholds)
        if missing:
            raise ValidationError(f"no threshold for groups: {sorted(missing)}")
        lookup = dict(thresholds)
    else:
        lookup = {g: float(thresholds) for g in data.groups()}
    out = []
    for rec in data.records:
        if rec.score is None:
            raise ValidationError(f"record {rec.id!r} has no score; cannot apply threshold")
        out.append(replace(rec, yhat=_classify(rec.score, lookup[rec.group])))
    return data.with_records(out)


def table_from_scores(
    data: GroupedOutcomes, group: str, threshold: float
) -> ConfusionTable:
    """Threshold one group's scores into a confusion table."""
    recs = [rec for rec in data.records if rec.group == group]
    if not recs:
        raise ValidationError(f"no records for group {group!r}")
    quad = [0.0, 0.0, 0.0, 0.0]
    for rec in recs:
        if rec.score is None:
            raise ValidationError(f"record {rec.id!r} has no score; cannot apply threshold")
        yhat = _classify(rec.score, threshold)
        idx = {(1, 1): 0, (1, 0): 1, (0, 1): 2, (0, 0): 3}[(rec.y, yhat)]
        quad[idx] += rec.weight
    return ConfusionTable(*quad)


def tables_from_thresholds(
    data: GroupedOutcomes, thresholds: Mapping[str, float] | float
) -> dict[str, ConfusionTable]:
    """Per-group tables after thresholding scores (see :func:`apply_thresholds`)."""
    return build_tables(apply_thresholds(data, thresholds))
