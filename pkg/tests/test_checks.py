"""The six fairness checks against the worked tables."""

from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fairlens.checks import (
    CHECK_NAMES,
    INDETERMINATE,
    SATISFIED,
    UNSATISFIED,
    conditional_procedure_accuracy_equality,
    conditional_use_accuracy_equality,
    evaluate_all,
    overall_accuracy_equality,
    statistical_parity,
    total_fairness,
    treatment_equality,
)
from fairlens.confusion import ConfusionTable, ValidationError, derive_quantities
from fairlens.feasibility import scenario
from conftest import FEMALES_T2, MALES_T3, MALES_TUNED_T4, rate_table


def two_groups(a: ConfusionTable, b: ConfusionTable) -> dict[str, ConfusionTable]:
    return {"female": a, "male": b}


class TestOverallAccuracyEquality:
    def test_tables_2_and_3_agree_at_point_six(self):
        r = overall_accuracy_equality(two_groups(FEMALES_T2, MALES_T3), tol=0.0)
        assert r.per_group_values["female"]["overall_accuracy"] == pytest.approx(0.60)
        assert r.per_group_values["male"]["overall_accuracy"] == pytest.approx(0.60)
        assert r.max_abs_disparity == pytest.approx(0.0)
        assert r.status == SATISFIED

    def test_identical_tables_have_zero_disparity(self):
        r = overall_accuracy_equality(two_groups(FEMALES_T2, FEMALES_T2), tol=0.0)
        assert r.max_abs_disparity == 0.0
        assert r.satisfied

    def test_tables_2_and_4_differ(self):
        r = overall_accuracy_equality(two_groups(FEMALES_T2, MALES_TUNED_T4), tol=0.01)
        assert r.max_abs_disparity == pytest.approx(1100 / 1500 - 0.60, abs=1e-12)
        assert r.status == UNSATISFIED

    def test_single_group_rejected(self):
        with pytest.raises(ValidationError, match="at least 2"):
            overall_accuracy_equality({"g": FEMALES_T2})


class TestStatisticalParity:
    def test_tables_2_and_3(self):
        r = statistical_parity(two_groups(FEMALES_T2, MALES_T3), tol=0.05)
        assert r.per_group_values["male"]["pred_fail_share"] == pytest.approx(8 / 15)
        assert r.max_abs_disparity == pytest.approx(8 / 15 - 0.5, abs=1e-12)
        assert r.satisfied

    def test_same_table_twice(self):
        r = statistical_parity(two_groups(MALES_T3, MALES_T3), tol=0.0)
        assert r.max_abs_disparity == 0.0

    def test_tables_2_and_4(self):
        r = statistical_parity(two_groups(FEMALES_T2, MALES_TUNED_T4), tol=0.05)
        assert r.max_abs_disparity == pytest.approx(1000 / 1500 - 0.5, abs=1e-12)
        assert not r.satisfied


class TestConditionalProcedureAccuracy:
    def test_tables_2_and_3_satisfied(self):
        r = conditional_procedure_accuracy_equality(two_groups(FEMALES_T2, MALES_T3), tol=0.0)
        assert r.status == SATISFIED
        assert r.components["failure_class_accuracy"] == pytest.approx(0.0)
        assert r.components["success_class_accuracy"] == pytest.approx(0.0)

    def test_tables_2_and_4_fnr_gap(self):
        r = conditional_procedure_accuracy_equality(two_groups(FEMALES_T2, MALES_TUNED_T4))
        assert r.components["failure_class_accuracy"] == pytest.approx(0.20)
        assert r.status == UNSATISFIED

    def test_identical_tables(self):
        r = conditional_procedure_accuracy_equality(two_groups(MALES_T3, MALES_T3), tol=0.0)
        assert r.satisfied


class TestConditionalUseAccuracy:
    def test_tables_2_and_4_success_side_fine_failure_side_not(self):
        r = conditional_use_accuracy_equality(two_groups(FEMALES_T2, MALES_TUNED_T4), tol=0.01)
        assert r.components["success_prediction_accuracy"] == pytest.approx(0.0)
        assert r.components["failure_prediction_accuracy"] == pytest.approx(0.20)
        assert r.status == UNSATISFIED

    def test_reconstructed_study_nearly_equal(self):
        tables = scenario("empirical_t13").tables
        r = conditional_use_accuracy_equality(tables, tol=0.02)
        npvs = {g: v["success_prediction_accuracy"] for g, v in r.per_group_values.items()}
        assert npvs["black"] == pytest.approx(0.93, abs=0.01)
        assert npvs["white"] == pytest.approx(0.94, abs=0.01)
        assert r.components["success_prediction_accuracy"] <= 0.02

    def test_identical_tables(self):
        assert conditional_use_accuracy_equality(two_groups(FEMALES_T2, FEMALES_T2), tol=0.0).satisfied


class TestTreatmentEquality:
    def test_tables_2_and_3_ratio_gap(self):
        r = treatment_equality(two_groups(FEMALES_T2, MALES_T3), tol=0.05)
        assert r.per_group_values["female"]["fn_fp_ratio"] == pytest.approx(1.0)
        assert r.per_group_values["male"]["fn_fp_ratio"] == pytest.approx(2.0)
        assert r.max_abs_disparity == pytest.approx(1.0)
        assert not r.satisfied

    def test_no_false_positives_is_indeterminate(self):
        t = ConfusionTable(10, 5, 0, 10)
        r = treatment_equality(two_groups(t, t))
        assert r.status == INDETERMINATE
        assert not r.satisfied
        assert r.max_abs_disparity is None

    def test_reconstructed_study_gross_inequality(self):
        tables = scenario("empirical_t13").tables
        r = treatment_equality(tables, tol=0.05)
        ratios = {g: v["fn_fp_ratio"] for g, v in r.per_group_values.items()}
        # Black trades ~4 false positives per false negative, White ~3 the
        # other way round.
        assert 1 / ratios["black"] == pytest.approx(4.0, abs=0.3)
        assert ratios["white"] == pytest.approx(3.0, abs=0.3)
        assert r.status == UNSATISFIED


class TestTotalFairness:
    def test_perfect_separation_pair_satisfies_everything(self):
        tables = {
            "male": scenario("separation_m_t9").tables["male"],
            "female": scenario("separation_f_t10").tables["female"],
        }
        r = total_fairness(tables, tol=0.0)
        assert r.status == SATISFIED

    def test_tables_2_and_3_fail_via_treatment_equality(self):
        r = total_fairness(two_groups(FEMALES_T2, MALES_T3), tol=0.05)
        assert r.status == UNSATISFIED
        assert r.components["treatment_equality"] == pytest.approx(1.0)

    def test_identical_tables_satisfied(self):
        assert total_fairness(two_groups(MALES_T3, MALES_T3), tol=0.0).satisfied

    def test_implication_components_all_satisfied(self):
        # total satisfied => every component check satisfied
        rng = np.random.default_rng(7)
        for _ in range(50):
            cells_a = rng.uniform(1, 40, size=4)
            cells_b = cells_a * rng.uniform(0.5, 2.0)
            tables = two_groups(ConfusionTable(*cells_a), ConfusionTable(*cells_b))
            tol = rng.uniform(0, 0.3)
            total = total_fairness(tables, tol)
            if total.satisfied:
                for check in (
                    overall_accuracy_equality,
                    statistical_parity,
                    conditional_procedure_accuracy_equality,
                    conditional_use_accuracy_equality,
                    treatment_equality,
                ):
                    assert check(tables, tol).satisfied


class TestEvaluateAll:
    def test_tables_2_and_3_verdicts(self):
        # At tol .05: overall accuracy, statistical parity and procedure
        # accuracy hold; conditional use accuracy and treatment equality
        # fail, which drags total fairness down with them.
        report = evaluate_all(two_groups(FEMALES_T2, MALES_T3), tol=0.05)
        status = {c.name: c.status for c in report.checks}
        assert status == {
            "overall_accuracy_equality": SATISFIED,
            "statistical_parity": SATISFIED,
            "conditional_procedure_accuracy_equality": SATISFIED,
            "conditional_use_accuracy_equality": UNSATISFIED,
            "treatment_equality": UNSATISFIED,
            "total_fairness": UNSATISFIED,
        }
        assert report.check("statistical_parity").max_abs_disparity == pytest.approx(1 / 30)

    def test_contains_exactly_the_six_checks(self):
        report = evaluate_all(two_groups(FEMALES_T2, MALES_T3))
        assert tuple(c.name for c in report.checks) == CHECK_NAMES

    def test_identical_tables_all_satisfied(self):
        report = evaluate_all(two_groups(MALES_T3, MALES_T3), tol=0.0)
        assert all(c.satisfied for c in report.checks)

    def test_reconstructed_study_signature(self):
        report = evaluate_all(scenario("empirical_t13").tables, tol=0.02)
        use = report.check("conditional_use_accuracy_equality")
        proc = report.check("conditional_procedure_accuracy_equality")
        assert use.components["success_prediction_accuracy"] <= 0.02
        fnrs = {g: q.fnr for g, q in report.per_group_quantities.items()}
        assert fnrs["black"] == pytest.approx(0.49, abs=0.01)
        assert fnrs["white"] == pytest.approx(0.93, abs=0.01)
        assert proc.status == UNSATISFIED
        assert proc.max_abs_disparity > 0.4


class TestCheckProperties:
    def test_permuting_group_labels_changes_nothing(self):
        tables = {"a": FEMALES_T2, "b": MALES_T3, "c": MALES_TUNED_T4}
        base = evaluate_all(tables, tol=0.03)
        for perm in itertools.permutations("abc"):
            relabeled = {new: tables[old] for new, old in zip("abc", perm)}
            report = evaluate_all(relabeled, tol=0.03)
            for c_base, c_perm in zip(base.checks, report.checks):
                assert c_base.status == c_perm.status
                assert (c_base.max_abs_disparity is None) == (c_perm.max_abs_disparity is None)
                if c_base.max_abs_disparity is not None:
                    assert c_perm.max_abs_disparity == pytest.approx(c_base.max_abs_disparity)

    def test_infinite_tolerance_satisfies_every_determinate_check(self):
        report = evaluate_all(two_groups(FEMALES_T2, MALES_TUNED_T4), tol=math.inf)
        for c in report.checks:
            assert c.status in (SATISFIED, INDETERMINATE)
            if c.max_abs_disparity is not None:
                assert c.satisfied

    @settings(max_examples=100, deadline=None)
    @given(
        st.floats(0.05, 0.95),
        st.floats(0.05, 0.95),
        st.floats(0.05, 0.95),
        st.integers(10, 10_000),
        st.integers(10, 10_000),
    )
    def test_equal_rates_force_equal_use_accuracy(self, p, fnr, fpr, n_a, n_b):
        # Same base rate and error rates => PPV and NPV agree to 1e-12,
        # regardless of group size (the feasibility identity's flip side).
        tables = two_groups(rate_table(n_a, p, fnr, fpr), rate_table(n_b, p, fnr, fpr))
        qa, qb = (derive_quantities(t) for t in tables.values())
        assert qa.fail_pred_accuracy == pytest.approx(qb.fail_pred_accuracy, abs=1e-12)
        assert qa.success_pred_accuracy == pytest.approx(qb.success_pred_accuracy, abs=1e-12)
