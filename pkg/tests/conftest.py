"""Shared fixtures: worked-table cells, printed marginals, and generators.

The printed-value map below is typed directly from the source tables the
scenario catalog reproduces (two-decimal marginals as printed).  Keys use
the quantity names of TableQuantities plus the accuracy properties.
"""

from __future__ import annotations

import numpy as np
import pytest

from fairlens.confusion import ConfusionTable, GroupedOutcomes, Record

# Cells of the worked tables (tp, fn, fp, tn).
FEMALES_T2 = ConfusionTable(300, 200, 200, 300)
MALES_T3 = ConfusionTable(600, 400, 200, 300)
MALES_TUNED_T4 = ConfusionTable(800, 200, 200, 300)

# Printed two-decimal marginal values per catalog scenario (and group).
PRINTED_MARGINALS: dict[str, dict[str, float]] = {
    "females_t2": {
        "base_rate_success": 0.50,
        "pred_success_share": 0.50,
        "fnr": 0.40,
        "fpr": 0.40,
        "fail_pred_error": 0.40,
        "success_pred_error": 0.40,
        "cost_ratio_fn_to_fp": 1.00,
    },
    "males_t3": {
        "base_rate_success": 0.33,
        "pred_success_share": 0.47,
        "fnr": 0.40,
        "fpr": 0.40,
        "fail_pred_error": 0.25,
        "success_pred_error": 0.57,
        "cost_ratio_fn_to_fp": 2.00,
    },
    "males_tuned_t4": {
        "base_rate_success": 0.33,
        "pred_success_share": 0.33,
        "fnr": 0.20,
        "fpr": 0.40,
        "fail_pred_error": 0.20,
        "success_pred_error": 0.40,
        "cost_ratio_fn_to_fp": 1.00,
    },
    "allfail_m_t5": {
        "base_rate_fail": 0.80,
        "tpr": 1.00,
        "tnr": 0.00,
        "fail_pred_accuracy": 0.80,
    },
    "allfail_f_t6": {
        "base_rate_fail": 0.80,
        "tpr": 1.00,
        "tnr": 0.00,
        "fail_pred_accuracy": 0.80,
    },
    "random30_m_t7": {
        "base_rate_fail": 0.80,
        "tpr": 0.30,
        "tnr": 0.70,
        "fail_pred_accuracy": 0.80,
        "success_pred_accuracy": 0.20,
    },
    "random30_f_t8": {
        "base_rate_fail": 0.80,
        "tpr": 0.30,
        "tnr": 0.70,
        "fail_pred_accuracy": 0.80,
        "success_pred_accuracy": 0.20,
    },
    "random30_f_modified": {
        "base_rate_fail": 0.29,
        "tpr": 0.30,
        "tnr": 0.70,
        "fail_pred_accuracy": 0.29,
        "success_pred_accuracy": 0.71,
    },
    "separation_m_t9": {
        "base_rate_fail": 0.80,
        "tpr": 1.00,
        "tnr": 1.00,
        "fail_pred_accuracy": 1.00,
        "success_pred_accuracy": 1.00,
    },
    "separation_f_t10": {
        "base_rate_fail": 0.80,
        "tpr": 1.00,
        "tnr": 1.00,
        "fail_pred_accuracy": 1.00,
        "success_pred_accuracy": 1.00,
    },
    "nosep_equal_f_t11": {
        "base_rate_fail": 0.56,
        "tpr": 0.60,
        "tnr": 0.50,
        "fail_pred_accuracy": 0.60,
        "success_pred_accuracy": 0.50,
    },
    "nosep_equal_m_t12": {
        "base_rate_fail": 0.56,
        "tpr": 0.60,
        "tnr": 0.50,
        "fail_pred_accuracy": 0.60,
        "success_pred_accuracy": 0.50,
    },
    "nosep_diff_f_t13a": {
        "base_rate_fail": 0.56,
        "tpr": 0.60,
        "tnr": 0.50,
        "fail_pred_accuracy": 0.60,
        "success_pred_accuracy": 0.50,
    },
    # Success-column conditional use accuracy is printed as .40 in the
    # source but equals 600/1000 = .60 from the printed cells; the catalog
    # keeps the cells, so .60 is the checked value (the .40 is a typo that
    # printed the error instead of the accuracy).
    "nosep_diff_m_t13b": {
        "base_rate_fail": 0.45,
        "tpr": 0.60,
        "tnr": 0.50,
        "fail_pred_accuracy": 0.50,
        "success_pred_accuracy": 0.60,
    },
}


def rate_table(n: float, p: float, fnr: float, fpr: float) -> ConfusionTable:
    """Fractional table realizing exactly the given size, base rate, and
    error rates (the impossibility-suite building block)."""
    return ConfusionTable(
        tp=n * p * (1.0 - fnr),
        fn=n * p * fnr,
        fp=n * (1.0 - p) * fpr,
        tn=n * (1.0 - p) * (1.0 - fpr),
    )


def unequal_rate_pair(rng: np.random.Generator) -> tuple[ConfusionTable, ConfusionTable]:
    """Two tables with shared FNR/FPR in (0, 1) and base rates >= .05 apart."""
    while True:
        p_a, p_b = rng.uniform(0.03, 0.97, size=2)
        if abs(p_a - p_b) >= 0.05:
            break
    fnr = rng.uniform(0.02, 0.98)
    fpr = rng.uniform(0.02, 0.98)
    n_a, n_b = rng.integers(50, 5000, size=2)
    return rate_table(float(n_a), p_a, fnr, fpr), rate_table(float(n_b), p_b, fnr, fpr)


def predictor_dataset(
    seed: int = 11, n: int = 300, planted: bool = True
) -> GroupedOutcomes:
    """Three legitimate predictors with a planted linear dependence on two
    protected columns (group indicator and a continuous proxy)."""
    rng = np.random.default_rng(seed)
    records = []
    for i in range(n):
        group = "a" if rng.random() < 0.5 else "b"
        s1 = 1.0 if group == "a" else 0.0
        s2 = rng.normal(0.0, 1.0)
        noise = rng.normal(0.0, 1.0, size=3)
        if planted:
            l1 = 2.0 * s1 - 1.5 * s2 + noise[0]
            l2 = -0.7 * s1 + 0.4 * s2 + noise[1]
            l3 = 1.1 * s2 + noise[2]
        else:
            l1, l2, l3 = noise
        records.append(
            Record(
                id=f"r{i}",
                group=group,
                y=int(rng.random() < 0.5),
                score=float(rng.random()),
                legitimate=(float(l1), float(l2), float(l3)),
                protected=(s1, float(s2)),
            )
        )
    return GroupedOutcomes(tuple(records), ("l1", "l2", "l3"), ("s1", "s2"))


def toy_scored_dataset(
    seed: int,
    n_per_group: int = 200,
    groups: tuple[str, ...] = ("a", "b"),
    base_rates: tuple[float, ...] = (0.5, 0.6),
) -> GroupedOutcomes:
    """Small scored two-group dataset for recount-style oracles."""
    rng = np.random.default_rng(seed)
    records = []
    for g, brf in zip(groups, base_rates):
        for i in range(n_per_group):
            y = int(rng.random() < brf)
            center = 0.65 if y else 0.35
            score = float(np.clip(rng.normal(center, 0.18), 0.0, 1.0))
            records.append(Record(id=f"{g}{i}", group=g, y=y, score=score))
    return GroupedOutcomes(tuple(records))


@pytest.fixture
def females_t2() -> ConfusionTable:
    return FEMALES_T2


@pytest.fixture
def males_t3() -> ConfusionTable:
    return MALES_T3


@pytest.fixture
def males_tuned_t4() -> ConfusionTable:
    return MALES_TUNED_T4
