"""Equalized-odds mixing: solver, brute-force oracle, applicator."""

from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from scipy.optimize import linprog

from fairlens.confusion import ConfusionTable, GroupedOutcomes, Record, ValidationError, build_tables
from fairlens.feasibility import scenario
from fairlens.postprocess import (
    GroupMixing,
    MixingPolicy,
    apply_mixing,
    expected_mixed_tables,
    mixing_oracle,
    solve_equalized_odds,
)
from conftest import FEMALES_T2, MALES_T3, rate_table


def random_instance(rng: np.random.Generator, match: bool = False) -> dict[str, ConfusionTable]:
    """Sensible two-group instance: better-than-chance classifiers with
    moderate base rates, so the identity is optimal when rates match."""
    p_a, p_b = rng.uniform(0.35, 0.65, size=2)
    tpr_a = rng.uniform(0.7, 0.95)
    fpr_a = rng.uniform(0.05, 0.3)
    if match:
        tpr_b, fpr_b = tpr_a, fpr_a
    else:
        tpr_b = rng.uniform(0.7, 0.95)
        fpr_b = rng.uniform(0.05, 0.3)
    n_a, n_b = rng.integers(100, 2000, size=2)
    return {
        "a": rate_table(float(n_a), p_a, 1 - tpr_a, fpr_a),
        "b": rate_table(float(n_b), p_b, 1 - tpr_b, fpr_b),
    }


def linprog_objective(tables: dict[str, ConfusionTable]) -> float:
    """Third-opinion LP value at tolerance zero (per-group variables)."""
    names = sorted(tables)
    stats = []
    total = sum(t.n for t in tables.values())
    for name in names:
        t = tables[name]
        stats.append(
            (t.n / total, t.actual_fail / t.n, t.tp / t.actual_fail, t.fp / t.actual_success)
        )
    n_vars = 2 * len(stats)
    c = np.zeros(n_vars)
    for i, (w, p, tpr, fpr) in enumerate(stats):
        c[2 * i] = w * (-p * tpr + (1 - p) * fpr)
        c[2 * i + 1] = w * (-p * (1 - tpr) + (1 - p) * (1 - fpr))
    A_eq = []
    b_eq = []
    _, _, tpr0, fpr0 = stats[0]
    for i, (w, p, tpr, fpr) in enumerate(stats[1:], start=1):
        row_t = np.zeros(n_vars)
        row_t[0], row_t[1] = tpr0, 1 - tpr0
        row_t[2 * i], row_t[2 * i + 1] = -tpr, -(1 - tpr)
        row_f = np.zeros(n_vars)
        row_f[0], row_f[1] = fpr0, 1 - fpr0
        row_f[2 * i], row_f[2 * i + 1] = -fpr, -(1 - fpr)
        A_eq += [row_t, row_f]
        b_eq += [0.0, 0.0]
    res = linprog(c, A_eq=np.array(A_eq), b_eq=np.array(b_eq), bounds=[(0, 1)] * n_vars,
                  method="highs")
    assert res.success
    const = sum(w * p for w, p, _, _ in stats)
    return float(res.fun + const)


def standalone_minimum(table: ConfusionTable) -> float:
    """One group's cheapest reachable error over its whole mixing square."""
    p = table.actual_fail / table.n
    tpr = table.tp / table.actual_fail
    fpr = table.fp / table.actual_success
    corners = [(0.0, 0.0), (1.0, 1.0), (tpr, fpr), (1 - tpr, 1 - fpr)]
    return min(p * (1 - t) + (1 - p) * f for t, f in corners)


class TestSolveEqualizedOdds:
    def test_identical_rates_return_identity(self):
        t = rate_table(500, 0.5, 0.3, 0.2)
        u = rate_table(900, 0.4, 0.3, 0.2)
        policy = solve_equalized_odds({"a": t, "b": u}, tol=0.0)
        assert policy.is_identity
        baseline = (t.fn + t.fp + u.fn + u.fp) / (t.n + u.n)
        assert policy.expected_error == pytest.approx(baseline, abs=1e-12)

    def test_worked_tables_2_and_3_are_identity(self):
        # Both tables sit at tpr .60 / fpr .40 already.
        policy = solve_equalized_odds({"female": FEMALES_T2, "male": MALES_T3}, tol=0.0)
        assert policy.is_identity

    def test_reconstructed_study_matches_oracle(self):
        tables = scenario("empirical_t13").tables
        policy = solve_equalized_odds(tables, tol=0.0)
        oracle = mixing_oracle(tables, 0.001)
        assert policy.expected_error <= oracle.expected_error + 2e-3
        mixes = list(policy.per_group.values())
        assert abs(mixes[0].achieved_tpr - mixes[1].achieved_tpr) <= 1e-9
        assert abs(mixes[0].achieved_fpr - mixes[1].achieved_fpr) <= 1e-9

    def test_degenerate_table_rejected(self):
        with pytest.raises(ValidationError, match="positives"):
            solve_equalized_odds({"a": ConfusionTable(5, 5, 0, 0), "b": FEMALES_T2})

    def test_negative_tolerance_rejected(self):
        with pytest.raises(ValidationError, match="tolerance"):
            solve_equalized_odds({"a": FEMALES_T2, "b": MALES_T3}, tol=-0.1)

    def test_single_group_rejected(self):
        with pytest.raises(ValidationError, match="2 groups"):
            solve_equalized_odds({"a": FEMALES_T2})

    def test_feasible_for_any_nonnegative_tolerance(self):
        rng = np.random.default_rng(99)
        for _ in range(25):
            tables = random_instance(rng)
            for tol in (0.0, 0.01, 0.3):
                policy = solve_equalized_odds(tables, tol=tol)
                mixes = list(policy.per_group.values())
                assert abs(mixes[0].achieved_tpr - mixes[1].achieved_tpr) <= tol + 1e-9
                assert abs(mixes[0].achieved_fpr - mixes[1].achieved_fpr) <= tol + 1e-9

    def test_matches_linprog_objective(self):
        rng = np.random.default_rng(17)
        for _ in range(25):
            tables = random_instance(rng)
            policy = solve_equalized_odds(tables, tol=0.0)
            assert policy.expected_error == pytest.approx(
                linprog_objective(tables), abs=1e-8
            )

    def test_optimality_certificate_via_vertex_sweep(self):
        # No feasible vertex of the tol=0 polytope beats the solver.
        rng = np.random.default_rng(31)
        tables = random_instance(rng)
        policy = solve_equalized_odds(tables, tol=0.0)
        stats = {g: tables[g] for g in sorted(tables)}
        (na, ta), (nb, tb) = [(t.n, t) for t in stats.values()]
        w_a, w_b = na / (na + nb), nb / (na + nb)

        def group(t):
            return t.actual_fail / t.n, t.tp / t.actual_fail, t.fp / t.actual_success

        p_a, tpr_a, fpr_a = group(ta)
        p_b, tpr_b, fpr_b = group(tb)

        def err(p, tpr, fpr, p1, p0):
            t = p1 * tpr + p0 * (1 - tpr)
            f = p1 * fpr + p0 * (1 - fpr)
            return p * (1 - t) + (1 - p) * f, t, f

        # Dense corner sweep as an independent vertex approximation.
        grid = np.linspace(0, 1, 21)
        best = math.inf
        for p1a, p0a in itertools.product(grid, grid):
            ea, t_a, f_a = err(p_a, tpr_a, fpr_a, p1a, p0a)
            for p1b, p0b in itertools.product(grid, grid):
                eb, t_b, f_b = err(p_b, tpr_b, fpr_b, p1b, p0b)
                if abs(t_a - t_b) <= 1e-9 and abs(f_a - f_b) <= 1e-9:
                    best = min(best, w_a * ea + w_b * eb)
        if math.isfinite(best):
            assert policy.expected_error <= best + 1e-9

    def test_cost_weighted_objective_shifts_solution(self):
        tables = scenario("empirical_t13").tables
        cheap_fn = solve_equalized_odds(tables, tol=0.0, cost_fn=0.2, cost_fp=1.0)
        dear_fn = solve_equalized_odds(tables, tol=0.0, cost_fn=5.0, cost_fp=1.0)
        # Costlier false negatives push toward predicting more failures.
        assert dear_fn.per_group["black"].achieved_tpr >= cheap_fn.per_group["black"].achieved_tpr

    def test_equal_opportunity_constrains_tpr_only(self):
        rng = np.random.default_rng(8)
        tables = random_instance(rng)
        policy = solve_equalized_odds(tables, tol=0.0, equal_opportunity=True)
        mixes = list(policy.per_group.values())
        assert abs(mixes[0].achieved_tpr - mixes[1].achieved_tpr) <= 1e-9
        full = solve_equalized_odds(tables, tol=0.0)
        assert policy.expected_error <= full.expected_error + 1e-12

    def test_three_groups_common_rates(self):
        rng = np.random.default_rng(77)
        tables = {
            "a": rate_table(400, 0.5, 0.25, 0.2),
            "b": rate_table(700, 0.6, 0.35, 0.15),
            "c": rate_table(300, 0.45, 0.3, 0.25),
        }
        policy = solve_equalized_odds(tables, tol=0.0)
        tprs = {m.achieved_tpr for m in policy.per_group.values()}
        fprs = {m.achieved_fpr for m in policy.per_group.values()}
        assert max(tprs) - min(tprs) <= 1e-9
        assert max(fprs) - min(fprs) <= 1e-9
        assert policy.expected_error == pytest.approx(linprog_objective(tables), abs=1e-8)

    def test_three_identical_groups_identity(self):
        t = rate_table(500, 0.5, 0.3, 0.2)
        tables = {"a": t, "b": t.scaled(2), "c": t.scaled(0.5)}
        policy = solve_equalized_odds(tables)
        assert policy.is_identity

    def test_degradation_floor_weighted_mean(self):
        # The solved error can never undercut the weighted mean of each
        # group's standalone floor (each group's error is bounded below by
        # its own reachable minimum at any common rate point).
        rng = np.random.default_rng(3)
        for _ in range(30):
            tables = random_instance(rng)
            policy = solve_equalized_odds(tables, tol=0.0)
            total = sum(t.n for t in tables.values())
            floor = sum(t.n / total * standalone_minimum(t) for t in tables.values())
            assert policy.expected_error >= floor - 1e-9

    def test_degradation_floor_worst_group_when_base_rates_equal(self):
        # With equal base rates every group's error equals the common-rate
        # error, so the total cannot undercut the worst standalone floor.
        rng = np.random.default_rng(4)
        for _ in range(30):
            p = rng.uniform(0.3, 0.7)
            tables = {
                "a": rate_table(float(rng.integers(100, 1000)), p,
                                rng.uniform(0.05, 0.45), rng.uniform(0.05, 0.45)),
                "b": rate_table(float(rng.integers(100, 1000)), p,
                                rng.uniform(0.05, 0.45), rng.uniform(0.05, 0.45)),
            }
            policy = solve_equalized_odds(tables, tol=0.0)
            worst = max(standalone_minimum(t) for t in tables.values())
            assert policy.expected_error >= worst - 1e-9


class TestMixingOracle:
    def test_identity_feasible_input_returns_identity(self):
        t = rate_table(500, 0.5, 0.3, 0.2)
        u = rate_table(900, 0.4, 0.3, 0.2)
        oracle = mixing_oracle({"a": t, "b": u}, 0.01)
        assert oracle.is_identity

    def test_solver_within_lipschitz_slack_of_oracle(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            tables = random_instance(rng)
            policy = solve_equalized_odds(tables, tol=0.0)
            for step in (0.01, 0.005):
                oracle = mixing_oracle(tables, step)
                assert policy.expected_error <= oracle.expected_error + 2 * step

    def test_refinement_consistency(self):
        rng = np.random.default_rng(12)
        tables = random_instance(rng)
        coarse = mixing_oracle(tables, 0.01)
        fine = mixing_oracle(tables, 0.001)
        assert abs(coarse.expected_error - fine.expected_error) <= 10 * 2 * 0.001 + 2 * 0.01

    def test_bad_grid_step_rejected(self):
        with pytest.raises(ValidationError, match="grid_step"):
            mixing_oracle({"a": FEMALES_T2, "b": MALES_T3}, 0.5)

    def test_oracle_pair_respects_relaxed_constraint(self):
        rng = np.random.default_rng(13)
        tables = random_instance(rng)
        step = 0.005
        oracle = mixing_oracle(tables, step)
        mixes = list(oracle.per_group.values())
        assert abs(mixes[0].achieved_tpr - mixes[1].achieved_tpr) <= 2 * step + 1e-12
        assert abs(mixes[0].achieved_fpr - mixes[1].achieved_fpr) <= 2 * step + 1e-12


class TestExpectedMixedTables:
    def test_closed_form_equals_cell_flow_recount(self):
        rng = np.random.default_rng(14)
        tables = random_instance(rng)
        policy = solve_equalized_odds(tables, tol=0.0)
        analytic = expected_mixed_tables(tables, policy)
        for g, t in tables.items():
            m = policy.per_group[g]
            # Flow recount: each original cell splits by its emit probability.
            tp = t.tp * m.p1 + t.fn * m.p0
            fn = t.tp * (1 - m.p1) + t.fn * (1 - m.p0)
            fp = t.fp * m.p1 + t.tn * m.p0
            tn = t.fp * (1 - m.p1) + t.tn * (1 - m.p0)
            assert analytic[g].tp == pytest.approx(tp, abs=1e-12)
            assert analytic[g].fn == pytest.approx(fn, abs=1e-12)
            assert analytic[g].fp == pytest.approx(fp, abs=1e-12)
            assert analytic[g].tn == pytest.approx(tn, abs=1e-12)

    def test_missing_group_rejected(self):
        policy = MixingPolicy(
            per_group={"a": GroupMixing(1.0, 0.0, 0.6, 0.4)}, expected_error=0.4
        )
        with pytest.raises(ValidationError, match="'b'"):
            expected_mixed_tables({"a": FEMALES_T2, "b": MALES_T3}, policy)


def unit_records(table: ConfusionTable, group: str) -> list[Record]:
    records = []
    layout = [(1, 1, table.tp), (1, 0, table.fn), (0, 1, table.fp), (0, 0, table.tn)]
    for y, yhat, count in layout:
        for i in range(int(count)):
            records.append(Record(id=f"{group}-{y}{yhat}-{i}", group=group, y=y, yhat=yhat))
    return records


class TestApplyMixing:
    def test_identity_policy_is_passthrough(self):
        data = GroupedOutcomes(tuple(unit_records(ConfusionTable(30, 20, 20, 30), "g")
                                     + unit_records(ConfusionTable(25, 25, 25, 25), "h")))
        policy = MixingPolicy(
            per_group={
                "g": GroupMixing(1.0, 0.0, 0.6, 0.4),
                "h": GroupMixing(1.0, 0.0, 0.5, 0.5),
            },
            expected_error=0.0,
        )
        for seed in (1, 2, 3):
            mixed = apply_mixing(data, policy, seed=seed)
            assert [r.yhat for r in mixed.records] == [r.yhat for r in data.records]

    def test_all_ones_policy(self):
        data = GroupedOutcomes(tuple(unit_records(ConfusionTable(5, 5, 5, 5), "g")
                                     + unit_records(ConfusionTable(5, 5, 5, 5), "h")))
        policy = MixingPolicy(
            per_group={
                "g": GroupMixing(1.0, 1.0, 1.0, 1.0),
                "h": GroupMixing(1.0, 1.0, 1.0, 1.0),
            },
            expected_error=0.5,
        )
        mixed = apply_mixing(data, policy, seed=9)
        assert all(r.yhat == 1 for r in mixed.records)

    def test_same_seed_reproducible(self):
        tables = scenario("empirical_t13").tables
        data = GroupedOutcomes(tuple(unit_records(tables["black"], "black")
                                     + unit_records(tables["white"], "white")))
        policy = solve_equalized_odds(tables, tol=0.0)
        a = apply_mixing(data, policy, seed=21)
        b = apply_mixing(data, policy, seed=21)
        assert [r.yhat for r in a.records] == [r.yhat for r in b.records]

    def test_empirical_rates_converge_to_policy_targets(self):
        tables = scenario("empirical_t13").tables
        data = GroupedOutcomes(tuple(unit_records(tables["black"], "black")
                                     + unit_records(tables["white"], "white")))
        policy = solve_equalized_odds(tables, tol=0.0)
        mixed = build_tables(apply_mixing(data, policy, seed=21))
        for g, t in tables.items():
            m = policy.per_group[g]
            got = mixed[g]
            for target, emp, n in (
                (m.achieved_tpr, got.tp / got.actual_fail, t.actual_fail),
                (m.achieved_fpr, got.fp / got.actual_success, t.actual_success),
            ):
                sigma = math.sqrt(max(target * (1 - target), 1e-12) / n)
                assert abs(emp - target) <= 3 * sigma + 1e-9

    def test_missing_group_in_policy_rejected(self):
        data = GroupedOutcomes(tuple(unit_records(ConfusionTable(5, 5, 5, 5), "g")))
        policy = MixingPolicy(per_group={"h": GroupMixing(1, 0, 0.5, 0.5)}, expected_error=0.5)
        with pytest.raises(ValidationError, match="'g'"):
            apply_mixing(data, policy, seed=1)
