"""fairlens: audit binary risk classifiers for group fairness.

Library surface in brief:

* :mod:`fairlens.confusion` — per-group confusion tables and every rate
  derived from them.
* :mod:`fairlens.checks` — the six fairness checks and the audit report.
* :mod:`fairlens.feasibility` — the impossibility identity, feasibility
  verdicts, and the worked-scenario catalog.
* :mod:`fairlens.preprocess` / :mod:`fairlens.inprocess` /
  :mod:`fairlens.postprocess` — corrections applied before, during, or
  after classification.
* :mod:`fairlens.pipeline` — CSV ingestion, synthetic data, report
  serialization.
* :mod:`fairlens.cli` / :mod:`fairlens.service` — command line and HTTP
  surfaces.
"""

from .confusion import (
    THRESHOLD_ABOVE_MAX,
    ComputationError,
    ConfusionTable,
    GroupedOutcomes,
    Record,
    TableQuantities,
    ValidationError,
    apply_thresholds,
    build_tables,
    derive_quantities,
    table_from_scores,
    tables_from_thresholds,
)
from .checks import (
    CHECK_NAMES,
    DEFAULT_TOLERANCE,
    CheckResult,
    FairnessReport,
    conditional_procedure_accuracy_equality,
    conditional_use_accuracy_equality,
    evaluate_all,
    overall_accuracy_equality,
    statistical_parity,
    total_fairness,
    treatment_equality,
)
from .feasibility import (
    FeasibilityVerdict,
    Scenario,
    assign_constant,
    assign_random,
    detect_separable,
    joint_feasibility,
    prevalence_identity_residual,
    scenario,
    scenario_names,
)
from .preprocess import (
    RebalanceWeights,
    ResidualizationModel,
    perturb_protected,
    rebalance_weights,
    relabel,
    residualize,
    sequential_residualize,
)
from .inprocess import (
    ThresholdPolicy,
    TuneResult,
    policy_from_cost_ratio,
    threshold_for_cost_ratio,
    tune_group_thresholds,
    uncertainty_reassign,
)
from .postprocess import (
    GroupMixing,
    MixingPolicy,
    apply_mixing,
    expected_mixed_tables,
    mixing_oracle,
    solve_equalized_odds,
)
from .pipeline import (
    CsvError,
    GroupSpec,
    SyntheticSpec,
    dataset_hash,
    emit_csv,
    emit_report,
    generate_synthetic,
    load_csv,
    scenario_to_dataset,
    table_to_records,
)

__version__ = "0.1.0"
