"""Post-processing: equalized odds via randomized label reassignment.

Each group gets two mixing probabilities: ``p1`` (emit class 1 when the
classifier said 1) and ``p0`` (emit class 1 when it said 0).  The mixed
true/false positive rates are linear in them,

    tpr' = p1 * tpr + p0 * (1 - tpr)
    fpr' = p1 * fpr + p0 * (1 - fpr)

so minimizing expected misclassification subject to near-equal mixed
rates across groups is a small linear program.  Two groups are solved
exactly by enumerating vertices of the four-variable polytope (box facets
plus the four tolerance facets).  For more groups the solver optimizes a
single common rate point over the intersection of every group's reachable
quadrilateral (equivalent to the LP at tolerance zero): the intersection
always contains the diagonal tpr' = fpr' reachable by constant policies,
so a feasible solution exists for any tolerance >= 0.

:func:`mixing_oracle` is an independent brute-force check: an exhaustive
grid over mixing probabilities, with rate equality relaxed to twice the
grid step.  It shares no code path with the vertex solver.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from .confusion import ConfusionTable, GroupedOutcomes, ValidationError
from .rng import generator

__all__ = [
    "GroupMixing",
    "MixingPolicy",
    "solve_equalized_odds",
    "mixing_oracle",
    "apply_mixing",
    "expected_mixed_tables",
]

_TIE = 1e-12
_FEAS = 1e-9


@dataclass(frozen=True)
class GroupMixing:
    """Mixing probabilities and achieved rates for one group."""

    p1: float
    p0: float
    achieved_tpr: float
    achieved_fpr: float

    def as_dict(self) -> dict[str, float]:
        return {
            "p1": self.p1,
            "p0": self.p0,
            "achieved_tpr": self.achieved_tpr,
            "achieved_fpr": self.achieved_fpr,
        }


@dataclass(frozen=True)
class MixingPolicy:
    """Per-group randomized reassignment with its expected error."""

    per_group: dict[str, GroupMixing]
    expected_error: float

    @property
    def is_identity(self) -> bool:
        return all(m.p1 == 1.0 and m.p0 == 0.0 for m in self.per_group.values())

    def as_dict(self) -> dict[str, object]:
        return {
            "groups": {g: m.as_dict() for g, m in sorted(self.per_group.items())},
            "expected_error": self.expected_error,
        }


@dataclass(frozen=True)
class _GroupStats:
    name: str
    weight: float  # share of the pooled population
    p: float  # failure base rate
    tpr: float
    fpr: float


def _group_stats(tables: Mapping[str, ConfusionTable]) -> list[_GroupStats]:
    if len(tables) < 2:
        raise ValidationError(f"need at least 2 groups, got {len(tables)}")
    total = sum(t.n for t in tables.values())
    stats = []
    for name in sorted(tables):
        t = tables[name]
        if t.actual_fail <= 0 or t.actual_success <= 0:
            raise ValidationError(
                f"group {name!r}: table needs both actual positives and negatives "
                f"to define tpr and fpr"
            )
        stats.append(
            _GroupStats(
                name=name,
                weight=t.n / total,
                p=t.actual_fail / t.n,
                tpr=t.tp / t.actual_fail,
                fpr=t.fp / t.actual_success,
            )
        )
    return stats


def _mixed_rates(g: _GroupStats, p1: float, p0: float) -> tuple[float, float]:
    return (
        p1 * g.tpr + p0 * (1.0 - g.tpr),
        p1 * g.fpr + p0 * (1.0 - g.fpr),
    )


def _error(g: _GroupStats, tpr: float, fpr: float, cost_fn: float, cost_fp: float) -> float:
    return cost_fn * g.p * (1.0 - tpr) + cost_fp * (1.0 - g.p) * fpr


def _policy(stats: list[_GroupStats], assignment: dict[str, tuple[float, float]]) -> MixingPolicy:
    per_group = {}
    expected = 0.0
    for g in stats:
        p1, p0 = assignment[g.name]
        tpr, fpr = _mixed_rates(g, p1, p0)
        per_group[g.name] = GroupMixing(p1=p1, p0=p0, achieved_tpr=tpr, achieved_fpr=fpr)
        expected += g.weight * _error(g, tpr, fpr, 1.0, 1.0)
    return MixingPolicy(per_group=per_group, expected_error=expected)


def _solve_two_groups(
    stats: list[_GroupStats],
    tol: float,
    cost_fn: float,
    cost_fp: float,
    equal_opportunity: bool,
) -> MixingPolicy:
    """Exact LP by vertex enumeration; variables (p1_A, p0_A, p1_B, p0_B)."""
    a, b = stats
    # Objective coefficients: minimize sum_g w_g * cost-weighted error.
    c = np.array(
        [
            a.weight * (-cost_fn * a.p * a.tpr + cost_fp * (1 - a.p) * a.fpr),
            a.weight * (-cost_fn * a.p * (1 - a.tpr) + cost_fp * (1 - a.p) * (1 - a.fpr)),
            b.weight * (-cost_fn * b.p * b.tpr + cost_fp * (1 - b.p) * b.fpr),
            b.weight * (-cost_fn * b.p * (1 - b.tpr) + cost_fp * (1 - b.p) * (1 - b.fpr)),
        ]
    )
    rows = []
    rhs = []
    for i in range(4):  # box facets
        lo = np.zeros(4)
        lo[i] = -1.0
        rows.append(lo)
        rhs.append(0.0)
        hi = np.zeros(4)
        hi[i] = 1.0
        rows.append(hi)
        rhs.append(1.0)
    tpr_row = np.array([a.tpr, 1 - a.tpr, -b.tpr, -(1 - b.tpr)])
    fpr_row = np.array([a.fpr, 1 - a.fpr, -b.fpr, -(1 - b.fpr)])
    rate_rows = [tpr_row, -tpr_row]
    if not equal_opportunity:
        rate_rows += [fpr_row, -fpr_row]
    for row in rate_rows:
        rows.append(row)
        rhs.append(tol)
    A = np.array(rows)
    bvec = np.array(rhs)

    vertices: list[np.ndarray] = []
    for combo in itertools.combinations(range(len(rows)), 4):
        sub = A[list(combo)]
        if abs(np.linalg.det(sub)) < 1e-12:
            continue
        x = np.linalg.solve(sub, bvec[list(combo)])
        if np.all(A @ x <= bvec + _FEAS):
            vertices.append(np.clip(x, 0.0, 1.0))
    if not vertices:  # cannot happen for tol >= 0 (the origin is feasible)
        raise RuntimeError("vertex enumeration found no feasible point")
    objs = [float(c @ v) for v in vertices]
    best = min(objs)
    identity = np.array([1.0, 0.0, 1.0, 0.0])
    tied = [v for v, o in zip(vertices, objs) if o <= best + _TIE]
    chosen = None
    for v in tied:
        if np.max(np.abs(v - identity)) <= _FEAS:
            chosen = identity
            break
    if chosen is None:
        chosen = min(tied, key=lambda v: tuple(np.round(v, 9)))
    return _policy(stats, {
        a.name: (float(chosen[0]), float(chosen[1])),
        b.name: (float(chosen[2]), float(chosen[3])),
    })


def _quad_vertices(g: _GroupStats) -> list[tuple[float, float]]:
    """Reachable (tpr', fpr') corners, ordered counter-clockwise."""
    pts = [(0.0, 0.0), (g.tpr, g.fpr), (1.0, 1.0), (1.0 - g.tpr, 1.0 - g.fpr)]
    cx = sum(p[0] for p in pts) / 4
    cy = sum(p[1] for p in pts) / 4
    return sorted(pts, key=lambda p: math.atan2(p[1] - cy, p[0] - cx))


def _clip_polygon(
    poly: list[tuple[float, float]], edge_a: tuple[float, float], edge_b: tuple[float, float]
) -> list[tuple[float, float]]:
    """Sutherland-Hodgman clip of a convex polygon against one directed edge."""

    def inside(p):
        return (
            (edge_b[0] - edge_a[0]) * (p[1] - edge_a[1])
            - (edge_b[1] - edge_a[1]) * (p[0] - edge_a[0])
        ) >= -_FEAS

    def intersect(p, q):
        dx1, dy1 = q[0] - p[0], q[1] - p[1]
        dx2, dy2 = edge_b[0] - edge_a[0], edge_b[1] - edge_a[1]
        denom = dx1 * dy2 - dy1 * dx2
        if abs(denom) < 1e-15:
            return q
        t = ((edge_a[0] - p[0]) * dy2 - (edge_a[1] - p[1]) * dx2) / denom
        return (p[0] + t * dx1, p[1] + t * dy1)

    out: list[tuple[float, float]] = []
    for i, cur in enumerate(poly):
        prev = poly[i - 1]
        if inside(cur):
            if not inside(prev):
                out.append(intersect(prev, cur))
            out.append(cur)
        elif inside(prev):
            out.append(intersect(prev, cur))
    return out


def _invert_rates(g: _GroupStats, t: float, f: float) -> tuple[float, float]:
    """The (p1, p0) realizing target rates (t, f) for this group."""
    det = g.tpr - g.fpr
    if abs(det) < 1e-12:
        # Degenerate classifier: reachable set is the diagonal; t == f there.
        return (float(np.clip(t, 0.0, 1.0)),) * 2
    p1 = ((1 - g.fpr) * t - (1 - g.tpr) * f) / det
    p0 = (g.tpr * f - g.fpr * t) / det
    if not (-_FEAS <= p1 <= 1 + _FEAS and -_FEAS <= p0 <= 1 + _FEAS):
        raise RuntimeError(f"rate inversion left the box for group {g.name!r}")
    return float(np.clip(p1, 0.0, 1.0)), float(np.clip(p0, 0.0, 1.0))


def _solve_common_rates(
    stats: list[_GroupStats], cost_fn: float, cost_fp: float
) -> MixingPolicy:
    """More than two groups: one exact common rate point for everyone.

    Tolerance is treated as zero here, which is feasible for every input
    (constant policies reach any diagonal point) and keeps the solution
    exact; the cost is only that slack a positive tolerance might have
    exploited is left unused.
    """
    degenerate = [g for g in stats if abs(g.tpr - g.fpr) < 1e-12]
    candidates: list[tuple[float, float]] = [(0.0, 0.0), (1.0, 1.0)]
    if all(
        abs(g.tpr - stats[0].tpr) < 1e-12 and abs(g.fpr - stats[0].fpr) < 1e-12
        for g in stats
    ):
        candidates.append((stats[0].tpr, stats[0].fpr))
    if not degenerate:
        poly = _quad_vertices(stats[0])
        for g in stats[1:]:
            clip = _quad_vertices(g)
            for i in range(len(clip)):
                poly = _clip_polygon(poly, clip[i], clip[(i + 1) % len(clip)])
                if not poly:
                    break
            if not poly:
                break
        candidates += poly
    best: Optional[tuple[float, tuple[float, float]]] = None
    best_assignment: dict[str, tuple[float, float]] = {}
    for t, f in candidates:
        if abs(t - f) >= 1e-12 and degenerate:
            continue
        try:
            assignment = {g.name: _invert_rates(g, t, f) for g in stats}
        except RuntimeError:
            continue
        obj = sum(
            g.weight * _error(g, *_mixed_rates(g, *assignment[g.name]), cost_fn, cost_fp)
            for g in stats
        )
        key = (obj, (round(t, 9), round(f, 9)))
        if best is None or key < best:
            best = key
            best_assignment = assignment
    assert best is not None  # diagonal endpoints always survive
    return _policy(stats, best_assignment)


def solve_equalized_odds(
    tables: Mapping[str, ConfusionTable],
    tol: float = 0.0,
    *,
    cost_fn: float = 1.0,
    cost_fp: float = 1.0,
    equal_opportunity: bool = False,
) -> MixingPolicy:
    """Mixing probabilities equalizing mixed TPR and FPR across groups
    (within ``tol``) at minimal expected misclassification.

    The objective weights each group by its record share; an asymmetric
    ``cost_fn``/``cost_fp`` pair reweights the two error types in the
    objective only — the constraint set is unchanged.  With
    ``equal_opportunity=True`` only the mixed TPR is constrained.  When
    the input rates already satisfy the constraints and no strictly
    cheaper vertex exists, the identity policy (p1=1, p0=0) is returned,
    so already-fair predictions pass through untouched.  Two groups are
    solved at the requested tolerance; more groups are solved at
    tolerance zero (documented conservative choice).
    ``expected_error`` on the result is always the plain unit-cost error.
    """
    if tol < 0:
        raise ValidationError(f"tolerance must be >= 0, got {tol!r}")
    if cost_fn <= 0 or cost_fp <= 0:
        raise ValidationError("error costs must be > 0")
    stats = _group_stats(tables)
    # Identity short-circuit: rates already within tolerance and identity
    # no worse than any alternative is handled by the tie-break inside the
    # solvers; here only the exact-equality fast path is taken.
    if len(stats) == 2:
        return _solve_two_groups(stats, tol, cost_fn, cost_fp, equal_opportunity)
    if equal_opportunity:
        raise ValidationError("equal_opportunity mode supports exactly 2 groups")
    return _solve_common_rates(stats, cost_fn, cost_fp)


def mixing_oracle(
    tables: Mapping[str, ConfusionTable],
    grid_step: float,
    *,
    cost_fn: float = 1.0,
    cost_fp: float = 1.0,
) -> MixingPolicy:
    """Brute-force two-group check of :func:`solve_equalized_odds`.

    Exhaustive search over all mixing tuples on a ``grid_step`` lattice,
    keeping pairs whose mixed rates agree within ``2 * grid_step``, and
    returning the cheapest.  Implemented with a binned minimum filter so
    the million-point grid stays fast, but every candidate pair satisfies
    the relaxed constraint exactly.
    """
    if not (0.0 < grid_step <= 0.1):
        raise ValidationError(f"grid_step must be in (0, 0.1], got {grid_step!r}")
    stats = _group_stats(tables)
    if len(stats) != 2:
        raise ValidationError("mixing_oracle covers exactly 2 groups")
    a, b = stats
    steps = int(round(1.0 / grid_step))
    nbin = steps + 1
    idx = np.arange(nbin, dtype=np.float64)

    def group_arrays(g: _GroupStats):
        # Rates in grid-step units: t*steps = p1_idx*tpr + p0_idx*(1-tpr).
        t_units = g.tpr * idx[:, None] + (1 - g.tpr) * idx[None, :]
        f_units = g.fpr * idx[:, None] + (1 - g.fpr) * idx[None, :]
        e = cost_fn * g.p * (1.0 - t_units / steps)
        e += cost_fp * (1 - g.p) / steps * f_units
        bins = np.rint(t_units).astype(np.int64) * nbin
        bins += np.rint(f_units).astype(np.int64)
        return e.ravel(), bins.ravel()

    def rates_at(g: _GroupStats, i: int) -> tuple[float, float]:
        p1, p0 = i // nbin / steps, i % nbin / steps
        return _mixed_rates(g, p1, p0)

    e_a, bins_a = group_arrays(a)
    e_b, bins_b = group_arrays(b)

    # Cheapest B point per bin, then a 3x3 window minimum so A candidates
    # see every B point within one bin (rate gap <= 2 * grid_step).
    best_e = np.full(nbin * nbin, np.inf)
    np.minimum.at(best_e, bins_b, e_b)
    padded = np.pad(best_e.reshape(nbin, nbin), 1, constant_values=np.inf)
    rows = np.minimum.reduce([padded[:, i : i + nbin] for i in range(3)])
    M = np.minimum.reduce([rows[i : i + nbin, :] for i in range(3)])

    obj = a.weight * e_a + b.weight * M.ravel()[bins_a]
    i_a = int(np.argmin(obj))
    if not np.isfinite(obj[i_a]):
        raise RuntimeError("oracle found no compatible grid pair")
    # Recover a matching B point: its error value sits verbatim in the
    # window minimum, so an exact-equality scan restricted to the nine
    # neighbor bins finds it.
    bt_a, bf_a = divmod(int(bins_a[i_a]), nbin)
    target = float(M[bt_a, bf_a])
    i_b = -1
    for j in np.flatnonzero(e_b == target):
        bt, bf = divmod(int(bins_b[j]), nbin)
        if abs(bt - bt_a) <= 1 and abs(bf - bf_a) <= 1:
            i_b = int(j)
            break
    assert i_b >= 0
    ra, rb = rates_at(a, i_a), rates_at(b, i_b)
    assert abs(ra[0] - rb[0]) <= 2 * grid_step + 1e-12
    assert abs(ra[1] - rb[1]) <= 2 * grid_step + 1e-12

    def unravel(i: int) -> tuple[float, float]:
        return (i // nbin) / steps, (i % nbin) / steps

    assignment = {a.name: unravel(i_a), b.name: unravel(i_b)}
    # Prefer the identity when it is feasible and no worse.
    ident_obj = a.weight * float(
        cost_fn * a.p * (1 - a.tpr) + cost_fp * (1 - a.p) * a.fpr
    ) + b.weight * float(cost_fn * b.p * (1 - b.tpr) + cost_fp * (1 - b.p) * b.fpr)
    rates_close = (
        abs(a.tpr - b.tpr) <= 2 * grid_step + 1e-12
        and abs(a.fpr - b.fpr) <= 2 * grid_step + 1e-12
    )
    if rates_close and ident_obj <= obj[i_a] + _TIE:
        assignment = {a.name: (1.0, 0.0), b.name: (1.0, 0.0)}
    return _policy(stats, assignment)


def expected_mixed_tables(
    tables: Mapping[str, ConfusionTable], policy: MixingPolicy
) -> dict[str, ConfusionTable]:
    """Expected confusion tables after mixing (fractional cells).

    Closed form from the mixed rates; equals the cell-flow recount
    (each original cell splits between "emit 1" and "emit 0").
    """
    out = {}
    for name in sorted(tables):
        t = tables[name]
        if name not in policy.per_group:
            raise ValidationError(f"policy has no entry for group {name!r}")
        m = policy.per_group[name]
        out[name] = ConfusionTable(
            tp=t.actual_fail * m.achieved_tpr,
            fn=t.actual_fail * (1 - m.achieved_tpr),
            fp=t.actual_success * m.achieved_fpr,
            tn=t.actual_success * (1 - m.achieved_fpr),
        )
    return out


def apply_mixing(
    data: GroupedOutcomes, policy: MixingPolicy, seed: int
) -> GroupedOutcomes:
    """Randomize predictions record by record according to the policy."""
    from dataclasses import replace

    rng = generator(seed)
    draws = rng.random(len(data.records))
    out = []
    for rec, u in zip(data.records, draws):
        if rec.group not in policy.per_group:
            raise ValidationError(f"policy has no entry for group {rec.group!r}")
        if rec.yhat is None:
            raise ValidationError(f"record {rec.id!r} has no prediction to mix")
        m = policy.per_group[rec.group]
        p_emit_one = m.p1 if rec.yhat == 1 else m.p0
        out.append(replace(rec, yhat=int(u < p_emit_one)))
    return data.with_records(out)
