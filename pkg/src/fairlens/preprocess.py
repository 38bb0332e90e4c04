"""Pre-processing corrections: fix the data before any model sees it.

Four levers, all operating on :class:`~fairlens.confusion.GroupedOutcomes`:

* :func:`residualize` strips the linear dependence of every legitimate
  predictor on the protected predictors, keeping only residuals.
* :func:`sequential_residualize` does the same but conditions each
  predictor on the previously transformed ones as well, preserving more
  of the predictors' joint information (linear form).
* :func:`rebalance_weights` / :func:`relabel` equalize failure base rates
  across groups, by reweighting or by randomly flipping outcome labels.
* :func:`perturb_protected` randomly resamples group membership for a
  fraction of records.

Residualization removes *additive* linear dependence only.  Interaction
effects between legitimate and protected predictors survive unless the
caller expands them into explicit columns first (``interactions=`` adds
pairwise products of declared columns); no automatic discovery is
attempted.  Every stochastic operation takes an explicit seed and returns
a log of exactly what changed.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .confusion import GroupedOutcomes, Record, ValidationError
from .rng import generator

__all__ = [
    "ResidualizationModel",
    "RebalanceWeights",
    "FlipEntry",
    "PerturbEntry",
    "residualize",
    "sequential_residualize",
    "rebalance_weights",
    "relabel",
    "perturb_protected",
]

_RANK_TOL = 1e-9


@dataclass(frozen=True)
class ResidualizationModel:
    """Fitted projections of legitimate predictors onto protected ones.

    ``coefficients[name]`` holds the least-squares coefficients of that
    predictor's regression design: intercept, protected columns, then (in
    sequential mode) the previously transformed predictors in
    ``order`` up to but excluding ``name``.  ``apply`` re-plays the
    transformation on new data, which must carry the same predictor
    columns.
    """

    protected_names: tuple[str, ...]
    legitimate_names: tuple[str, ...]
    coefficients: dict[str, tuple[float, ...]]
    order: tuple[str, ...]
    sequential: bool

    def apply(self, data: GroupedOutcomes) -> GroupedOutcomes:
        if data.legitimate_names != self.legitimate_names:
            raise ValidationError(
                f"data has legitimate columns {data.legitimate_names}, "
                f"model was fitted on {self.legitimate_names}"
            )
        if data.protected_names != self.protected_names:
            raise ValidationError(
                f"data has protected columns {data.protected_names}, "
                f"model was fitted on {self.protected_names}"
            )
        L, S = _predictor_matrices(data)
        n = len(data.records)
        base = np.column_stack([np.ones(n), S])
        transformed = {}
        col_of = {name: i for i, name in enumerate(self.legitimate_names)}
        for k, name in enumerate(self.order):
            design = base
            if self.sequential and k > 0:
                prior = np.column_stack([transformed[p] for p in self.order[:k]])
                design = np.column_stack([base, prior])
            beta = np.asarray(self.coefficients[name])
            transformed[name] = L[:, col_of[name]] - design @ beta
        new_records = []
        for i, rec in enumerate(data.records):
            values = tuple(float(transformed[name][i]) for name in self.legitimate_names)
            new_records.append(replace(rec, legitimate=values))
        return data.with_records(new_records)


def _predictor_matrices(data: GroupedOutcomes) -> tuple[np.ndarray, np.ndarray]:
    if not data.legitimate_names:
        raise ValidationError("no legitimate predictor columns to residualize")
    if not data.protected_names:
        raise ValidationError("no protected predictor columns to residualize against")
    if not data.records:
        raise ValidationError("dataset is empty")
    L = np.array([rec.legitimate for rec in data.records], dtype=float)
    S = np.array([rec.protected for rec in data.records], dtype=float)
    bad = [
        rec.id
        for rec, lrow, srow in zip(data.records, L, S)
        if not (np.all(np.isfinite(lrow)) and np.all(np.isfinite(srow)))
    ]
    if bad:
        raise ValidationError(f"records with missing/non-finite predictor values: {bad}")
    return L, S


def _check_full_rank(design: np.ndarray, names: Sequence[str]) -> None:
    """Raise naming the offending columns when the design is rank deficient."""
    rank = np.linalg.matrix_rank(design, tol=_RANK_TOL * max(design.shape))
    if rank == design.shape[1]:
        return
    collinear = []
    current = design[:, :1]  # intercept column
    for j, name in enumerate(names):
        candidate = np.column_stack([current, design[:, j + 1]])
        if np.linalg.matrix_rank(candidate, tol=_RANK_TOL * max(design.shape)) > current.shape[1]:
            current = candidate
        else:
            collinear.append(name)
    raise ValidationError(
        f"protected design matrix is rank deficient; collinear columns: {collinear}"
    )


def _expand_interactions(
    data: GroupedOutcomes, interactions: Sequence[tuple[str, str]]
) -> GroupedOutcomes:
    """Append product columns of declared protected-column pairs."""
    idx = {name: i for i, name in enumerate(data.protected_names)}
    for a, b in interactions:
        for col in (a, b):
            if col not in idx:
                raise ValidationError(f"unknown protected column {col!r} in interactions")
    new_names = data.protected_names + tuple(f"{a}*{b}" for a, b in interactions)
    records = []
    for rec in data.records:
        extra = tuple(rec.protected[idx[a]] * rec.protected[idx[b]] for a, b in interactions)
        records.append(replace(rec, protected=rec.protected + extra))
    return GroupedOutcomes(tuple(records), data.legitimate_names, new_names)


def _fit(
    data: GroupedOutcomes,
    order: tuple[str, ...],
    sequential: bool,
) -> tuple[GroupedOutcomes, ResidualizationModel]:
    L, S = _predictor_matrices(data)
    n = len(data.records)
    base = np.column_stack([np.ones(n), S])
    _check_full_rank(base, data.protected_names)
    col_of = {name: i for i, name in enumerate(data.legitimate_names)}
    transformed: dict[str, np.ndarray] = {}
    coefficients: dict[str, tuple[float, ...]] = {}
    for k, name in enumerate(order):
        design = base
        if sequential and k > 0:
            prior = np.column_stack([transformed[p] for p in order[:k]])
            design = np.column_stack([base, prior])
        target = L[:, col_of[name]]
        beta, *_ = np.linalg.lstsq(design, target, rcond=None)
        transformed[name] = target - design @ beta
        coefficients[name] = tuple(float(b) for b in beta)
    records = []
    for i, rec in enumerate(data.records):
        values = tuple(float(transformed[name][i]) for name in data.legitimate_names)
        records.append(replace(rec, legitimate=values))
    model = ResidualizationModel(
        protected_names=data.protected_names,
        legitimate_names=data.legitimate_names,
        coefficients=coefficients,
        order=order,
        sequential=sequential,
    )
    return data.with_records(records), model


def residualize(
    data: GroupedOutcomes,
    *,
    interactions: Sequence[tuple[str, str]] = (),
) -> tuple[GroupedOutcomes, ResidualizationModel]:
    """Replace each legitimate predictor by its least-squares residual on
    (intercept + protected predictors).

    Residuals have zero sample covariance with every protected column.
    ``interactions`` optionally adds product columns of declared protected
    pairs to the regression design before fitting.
    """
    if interactions:
        data = _expand_interactions(data, interactions)
    return _fit(data, data.legitimate_names, sequential=False)


def sequential_residualize(
    data: GroupedOutcomes,
    order: Optional[Sequence[str]] = None,
    *,
    interactions: Sequence[tuple[str, str]] = (),
) -> tuple[GroupedOutcomes, ResidualizationModel]:
    """Residualize predictors one at a time, conditioning each on the
    protected predictors plus the previously transformed predictors.

    ``order`` defaults to column order.  The flexible-regression variant
    of this scheme orders predictors by distributional complexity; here
    the ordering is the caller's call, since no precise complexity
    measure is mandated, and the regressions are linear.
    """
    if order is None:
        order = data.legitimate_names
    order = tuple(order)
    if sorted(order) != sorted(data.legitimate_names):
        raise ValidationError(
            f"order {order} must be a permutation of {data.legitimate_names}"
        )
    if interactions:
        data = _expand_interactions(data, interactions)
    return _fit(data, order, sequential=True)


@dataclass(frozen=True)
class RebalanceWeights:
    """Per (group, outcome class) weight multipliers hitting a target rate.

    Multiplying each record's weight by ``weights[(group, y)]`` makes every
    group's weighted failure base rate equal ``target_rate`` exactly, while
    leaving each group's total weight unchanged.
    """

    weights: dict[tuple[str, int], float]
    target_rate: float

    def apply(self, data: GroupedOutcomes) -> GroupedOutcomes:
        missing = {(r.group, r.y) for r in data.records} - set(self.weights)
        if missing:
            raise ValidationError(f"no rebalance weight for {sorted(missing)}")
        return data.with_records(
            replace(rec, weight=rec.weight * self.weights[(rec.group, rec.y)])
            for rec in data.records
        )


def rebalance_weights(
    data: GroupedOutcomes, target_rate: Optional[float] = None
) -> RebalanceWeights:
    """Weights w(group, class) = target class rate / observed class rate.

    The default target is the pooled (weight-aware) failure base rate.
    Every group must contain both outcome classes, otherwise the required
    weight would be infinite.
    """
    if not data.records:
        raise ValidationError("dataset is empty")
    fail_w: dict[str, float] = {}
    total_w: dict[str, float] = {}
    for rec in data.records:
        total_w[rec.group] = total_w.get(rec.group, 0.0) + rec.weight
        if rec.y == 1:
            fail_w[rec.group] = fail_w.get(rec.group, 0.0) + rec.weight
    if target_rate is None:
        target_rate = sum(fail_w.values()) / sum(total_w.values())
    if not (0.0 < target_rate < 1.0):
        raise ValidationError(
            f"target rate must be strictly inside (0, 1), got {target_rate!r}"
        )
    weights: dict[tuple[str, int], float] = {}
    for group, total in total_w.items():
        observed = fail_w.get(group, 0.0) / total
        if observed <= 0.0 or observed >= 1.0:
            raise ValidationError(
                f"group {group!r} has a single outcome class (rate {observed}); "
                "rebalancing would need an infinite weight"
            )
        weights[(group, 1)] = target_rate / observed
        weights[(group, 0)] = (1.0 - target_rate) / (1.0 - observed)
    return RebalanceWeights(weights=weights, target_rate=target_rate)


@dataclass(frozen=True)
class FlipEntry:
    """One relabeled record: outcome flipped from ``old_y`` to ``new_y``."""

    record_id: str
    group: str
    old_y: int
    new_y: int

    def as_dict(self) -> dict[str, object]:
        return {
            "record_id": self.record_id,
            "group": self.group,
            "old_y": self.old_y,
            "new_y": self.new_y,
        }


def relabel(
    data: GroupedOutcomes, target_rate: float, seed: int
) -> tuple[GroupedOutcomes, tuple[FlipEntry, ...]]:
    """Flip the minimum number of outcome labels per group to hit the
    target failure base rate (up to integer rounding).

    Flip counts use unweighted record counts: round(n_g * |observed -
    target|) records are drawn uniformly without replacement from the
    over-represented class, seeded.  Returns the new data and the flip
    log; everything not logged is untouched.
    """
    if not (0.0 <= target_rate <= 1.0):
        raise ValidationError(f"target rate must be in [0, 1], got {target_rate!r}")
    if not data.records:
        raise ValidationError("dataset is empty")
    rng = generator(seed)
    flip_ids: dict[str, int] = {}
    flips: list[FlipEntry] = []
    for group, records in data.by_group().items():
        n = len(records)
        fails = [rec for rec in records if rec.y == 1]
        successes = [rec for rec in records if rec.y == 0]
        observed = len(fails) / n
        count = round(n * abs(observed - target_rate))
        if count == 0:
            continue
        pool = fails if observed > target_rate else successes
        chosen = rng.choice(len(pool), size=count, replace=False)
        for idx in sorted(int(i) for i in chosen):
            rec = pool[idx]
            flip_ids[rec.id] = 1 - rec.y
            flips.append(FlipEntry(rec.id, group, rec.y, 1 - rec.y))
    new_records = [
        replace(rec, y=flip_ids[rec.id]) if rec.id in flip_ids else rec
        for rec in data.records
    ]
    return data.with_records(new_records), tuple(flips)


@dataclass(frozen=True)
class PerturbEntry:
    """One record whose group label was resampled."""

    record_id: str
    old_group: str
    new_group: str

    def as_dict(self) -> dict[str, object]:
        return {
            "record_id": self.record_id,
            "old_group": self.old_group,
            "new_group": self.new_group,
        }


def perturb_protected(
    data: GroupedOutcomes, fraction: float, seed: int
) -> tuple[GroupedOutcomes, tuple[PerturbEntry, ...]]:
    """Resample the group label of round(fraction * n) records, seeded.

    Each perturbed record's new group is drawn from the *other* groups'
    empirical size distribution, so with two groups the label simply
    flips.  Returns new data plus the perturbation log.
    """
    if not (0.0 <= fraction <= 1.0):
        raise ValidationError(f"fraction must be in [0, 1], got {fraction!r}")
    groups = data.groups()
    if len(groups) < 2:
        raise ValidationError(f"need at least 2 groups to perturb, got {len(groups)}")
    rng = generator(seed)
    n = len(data.records)
    count = round(fraction * n)
    sizes = {g: 0 for g in groups}
    for rec in data.records:
        sizes[rec.group] += 1
    chosen = set(int(i) for i in rng.choice(n, size=count, replace=False)) if count else set()
    out: list[Record] = []
    log: list[PerturbEntry] = []
    for i, rec in enumerate(data.records):
        if i not in chosen:
            out.append(rec)
            continue
        others = [g for g in groups if g != rec.group]
        probs = np.array([sizes[g] for g in others], dtype=float)
        if probs.sum() == 0:
            probs = np.ones(len(others))
        probs /= probs.sum()
        new_group = str(rng.choice(others, p=probs))
        out.append(replace(rec, group=new_group))
        log.append(PerturbEntry(rec.id, rec.group, new_group))
    return data.with_records(out), tuple(log)
