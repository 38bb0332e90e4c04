"""When can error rates and predictive values be equalized at once?

With unequal failure base rates and no perfect classifier, a binary
classifier cannot simultaneously equalize conditional use accuracy
(PPV/NPV) and the false negative / false positive rates across groups.
The link is an algebraic identity tying the false positive rate to the
base rate, PPV and FNR of the same table:

    fpr = (p / (1 - p)) * ((1 - ppv) / ppv) * (1 - fnr)

which holds for every consistent table.  Fix fnr and fpr across two
groups with different ``p``: the identity then forces different PPVs.
:func:`prevalence_identity_residual` exposes the identity numerically and
:func:`joint_feasibility` states the escape hatches (equal base rates, or
a perfectly separating classifier).

The module also ships a catalog of small worked confusion tables
exercising each regime (constant prediction, random assignment, perfect
separation, equal/unequal base rates without separation, and a two-group
arraignment-scale reconstruction), so the tradeoffs can be reproduced
from fixed cells instead of prose.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping

from .confusion import ConfusionTable, GroupedOutcomes, Record, ValidationError
from .rng import generator

__all__ = [
    "REASON_EQUAL_BASE_RATES",
    "REASON_SEPARATION",
    "REASON_INFEASIBLE",
    "FeasibilityVerdict",
    "Scenario",
    "prevalence_identity_residual",
    "joint_feasibility",
    "scenario",
    "scenario_names",
    "assign_constant",
    "assign_random",
    "detect_separable",
    "table_from_rates",
    "reconstruct_two_group_study",
]

REASON_EQUAL_BASE_RATES = "equal_base_rates"
REASON_SEPARATION = "separation"
REASON_INFEASIBLE = "infeasible_unequal_rates_no_separation"


def prevalence_identity_residual(table: ConfusionTable) -> float:
    """|fpr - (p/(1-p)) * ((1-ppv)/ppv) * (1-fnr)| for one table.

    Zero (to floating-point noise) for every consistent table; the resting
    point of the impossibility argument.  Raises when the identity is
    inapplicable: degenerate base rate (p in {0, 1}) or undefined/zero PPV.
    """
    n = table.n
    if n <= 0:
        raise ValidationError("identity inapplicable: empty table")
    p = table.actual_fail / n
    if p <= 0.0 or p >= 1.0:
        raise ValidationError(f"identity inapplicable: degenerate base rate {p}")
    if table.pred_fail <= 0:
        raise ValidationError("identity inapplicable: no predicted failures (PPV undefined)")
    ppv = table.tp / table.pred_fail
    if ppv <= 0.0:
        raise ValidationError("identity inapplicable: PPV is zero")
    fnr = table.fn / table.actual_fail
    fpr = table.fp / table.actual_success
    rhs = (p / (1.0 - p)) * ((1.0 - ppv) / ppv) * (1.0 - fnr)
    return abs(fpr - rhs)


@dataclass(frozen=True)
class FeasibilityVerdict:
    """Can FNR/FPR equality and conditional use accuracy equality coexist?"""

    base_rates: dict[str, float]
    separable: bool
    joint_feasible: bool
    reason: str


def joint_feasibility(
    base_rates: Mapping[str, float], separable: bool, *, atol: float = 1e-12
) -> FeasibilityVerdict:
    """Feasible iff all group base rates are equal (within ``atol``) or the
    data are separable; otherwise the two fairness families conflict."""
    if not base_rates:
        raise ValidationError("no groups: base rate map is empty")
    rates = dict(base_rates)
    for g, p in rates.items():
        if not (0.0 <= p <= 1.0):
            raise ValidationError(f"group {g!r}: base rate {p!r} outside [0, 1]")
    values = list(rates.values())
    equal = max(values) - min(values) <= atol
    if equal:
        return FeasibilityVerdict(rates, separable, True, REASON_EQUAL_BASE_RATES)
    if separable:
        return FeasibilityVerdict(rates, separable, True, REASON_SEPARATION)
    return FeasibilityVerdict(rates, separable, False, REASON_INFEASIBLE)


@dataclass(frozen=True)
class Scenario:
    """A named set of fixed confusion tables with provenance notes."""

    name: str
    tables: dict[str, ConfusionTable]
    notes: str


def table_from_rates(
    n: int, base_rate_fail: float, fnr: float, fpr: float
) -> ConfusionTable:
    """Integer cells from a size, a failure base rate, and two error rates.

    Counts are rounded to nearest at each step (failures first, then the
    error cells), so the realized rates match the requested ones as closely
    as integer cells allow.
    """
    failures = round(n * base_rate_fail)
    successes = n - failures
    fn = round(fnr * failures)
    fp = round(fpr * successes)
    return ConfusionTable(tp=failures - fn, fn=fn, fp=fp, tn=successes - fp)


def reconstruct_two_group_study() -> dict[str, ConfusionTable]:
    """Cells for the two-group arraignment study behind ``empirical_t13``.

    Only group sizes and two-decimal rates were published (success base
    rates .89/.94, FNR .49/.93, FPR .24/.02, with failure = an arrest for
    a violent crime).  Cells are rebuilt by rounding N*rate at each step;
    see scripts/reconstruct_table13.py for the derivation printout.  The
    rebuilt FP:FN and FN:FP ratios land near 3.96 and 2.97, below the
    reported "a little more than 4.2 / 3.1" because the published rates
    were themselves rounded to two decimals.
    """
    return {
        "black": table_from_rates(13396, 1 - 0.89, fnr=0.49, fpr=0.24),
        "white": table_from_rates(6604, 1 - 0.94, fnr=0.93, fpr=0.02),
    }


def _catalog() -> dict[str, Scenario]:
    def s(name: str, tables: dict[str, ConfusionTable], notes: str) -> Scenario:
        return Scenario(name, tables, notes)

    t = ConfusionTable
    entries = [
        s("females_t2", {"female": t(300, 200, 200, 300)},
          "Hypothetical paroled women; symmetric errors, base rate .50."),
        s("males_t3", {"male": t(600, 400, 200, 300)},
          "Hypothetical paroled men; failure row doubled, base rate .67 fail."),
        s("males_tuned_t4", {"male": t(800, 200, 200, 300)},
          "Men after tuning for equal success-prediction accuracy; FNR drops to .20."),
        s("allfail_m_t5", {"male": t(400, 0, 100, 0)},
          "Everyone predicted to fail, men, base rate .80 fail."),
        s("allfail_f_t6", {"female": t(40, 0, 10, 0)},
          "Everyone predicted to fail, women, base rate .80 fail."),
        s("random30_m_t7", {"male": t(120, 280, 30, 70)},
          "Failure assigned at random with probability .30, men, base rate .80."),
        s("random30_f_t8", {"female": t(12, 28, 3, 7)},
          "Failure assigned at random with probability .30, women, base rate .80."),
        s("random30_f_modified", {"female": t(12, 28, 30, 70)},
          "Random .30 assignment with the women's success row at 30/70; the base "
          "rate falls to .29 and conditional use accuracy moves to .29/.71."),
        s("separation_m_t9", {"male": t(400, 0, 0, 100)},
          "Perfect separation, men; every rate is 1.0 or 0.0."),
        s("separation_f_t10", {"female": t(40, 0, 0, 10)},
          "Perfect separation, women; every rate is 1.0 or 0.0."),
        s("nosep_equal_f_t11", {"female": t(300, 200, 200, 200)},
          "No separation, equal base rates (.56), women."),
        s("nosep_equal_m_t12", {"male": t(600, 400, 400, 400)},
          "No separation, equal base rates (.56), men.  Source caption says "
          "N = 1400 but the printed cells sum to 1800; the cells are kept."),
        s("nosep_diff_f_t13a", {"female": t(300, 200, 200, 200)},
          "No separation, base rate .56, women (contrast with the male table)."),
        s("nosep_diff_m_t13b", {"male": t(600, 400, 600, 600)},
          "No separation, base rate .45, men.  Source prints success-column "
          "conditional use accuracy .40, but d/(b+d) = 600/1000 = .60; it "
          "printed the error instead of the accuracy.  Cells are kept and "
          "the computed .60 stands."),
        s("empirical_t13", reconstruct_two_group_study(),
          "Two-group arraignment study rebuilt from group sizes and published "
          "two-decimal rates; conditional use accuracy nearly equal (.93/.94) "
          "while FNR and FPR differ grossly.  See reconstruct_two_group_study."),
    ]
    return {sc.name: sc for sc in entries}


_CATALOG = _catalog()


def scenario_names() -> tuple[str, ...]:
    return tuple(_CATALOG)


def scenario(name: str) -> Scenario:
    """Fetch a catalog scenario by name; unknown names list the catalog."""
    try:
        return _CATALOG[name]
    except KeyError:
        raise ValidationError(
            f"unknown scenario {name!r}; catalog: {', '.join(_CATALOG)}"
        ) from None


def assign_constant(data: GroupedOutcomes, klass: int) -> GroupedOutcomes:
    """Predict the same class for every record (the degenerate baseline)."""
    if klass not in (0, 1):
        raise ValidationError(f"class must be 0 or 1, got {klass!r}")
    return data.with_records(replace(rec, yhat=klass) for rec in data.records)


def assign_random(data: GroupedOutcomes, p_fail: float, seed: int) -> GroupedOutcomes:
    """Predict failure with the same probability for every record, seeded."""
    if not (0.0 <= p_fail <= 1.0):
        raise ValidationError(f"p_fail must be in [0, 1], got {p_fail!r}")
    rng = generator(seed)
    draws = rng.random(len(data.records))
    return data.with_records(
        replace(rec, yhat=int(u < p_fail))
        for rec, u in zip(data.records, draws)
    )


def detect_separable(data: GroupedOutcomes) -> bool:
    """Is there a single score threshold with zero classification errors?

    Sample-level only: a perfect in-sample split says nothing about the
    population the data came from, and a rich enough score can be
    overmatched to any finite sample.  Callers who know the population is
    (or is not) separable should pass that knowledge to
    :func:`joint_feasibility` directly.
    """
    fail_scores = []
    success_scores = []
    for rec in data.records:
        if rec.score is None:
            raise ValidationError(f"record {rec.id!r} has no score; cannot test separability")
        (fail_scores if rec.y == 1 else success_scores).append(rec.score)
    if not fail_scores or not success_scores:
        return True
    # Ties classify as fail, so a threshold with zero errors exists iff
    # every failure scores strictly above every success.
    return min(fail_scores) > max(success_scores)
