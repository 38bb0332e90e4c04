"""Command line surface: audit, scenario, correct, sweep, gen, serve.

Exit codes: 0 success, 1 validation problem (bad arguments, malformed
input data), 2 computation problem (a requested quantity is undefined on
the given data).  Machine-readable output goes to stdout or to files
named by flags; diagnostics go to stderr.  Identical invocations on
identical inputs produce byte-identical outputs: all stochastic
subcommands require an explicit seed and reports carry no timestamps.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .checks import DEFAULT_TOLERANCE, evaluate_all
from .confusion import (
    THRESHOLD_ABOVE_MAX,
    ComputationError,
    GroupedOutcomes,
    ValidationError,
    build_tables,
    derive_quantities,
    table_from_scores,
    tables_from_thresholds,
)
from .feasibility import scenario, scenario_names
from .inprocess import ThresholdPolicy, tune_group_thresholds
from .pipeline import (
    SyntheticSpec,
    dataset_hash,
    emit_csv,
    emit_report,
    generate_synthetic,
    jsonify,
    load_csv,
)
from .postprocess import apply_mixing, expected_mixed_tables, solve_equalized_odds
from .preprocess import rebalance_weights, relabel, residualize, sequential_residualize

_QUANTITY_FIELDS = (
    "n", "base_rate_fail", "base_rate_success", "pred_fail_share",
    "pred_success_share", "overall_error", "overall_accuracy", "fnr", "fpr",
    "fail_pred_error", "success_pred_error", "fail_pred_accuracy",
    "success_pred_accuracy", "cost_ratio_fn_to_fp",
)

_CHECK_COLUMNS = (
    "overall_accuracy_equality", "statistical_parity",
    "conditional_procedure_accuracy_equality", "conditional_use_accuracy_equality",
    "treatment_equality", "total_fairness",
)


def _log(message: str) -> None:
    print(message, file=sys.stderr)


def _write_output(payload: bytes, out: Optional[str]) -> None:
    if out in (None, "-"):
        sys.stdout.buffer.write(payload)
    else:
        Path(out).write_bytes(payload)
        _log(f"wrote {out}")


def _json_bytes(doc) -> bytes:
    return (json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n").encode()


def _load_dataset(path: str) -> GroupedOutcomes:
    return load_csv(Path(path))


def _predictions(data: GroupedOutcomes, args) -> tuple[dict, Optional[dict]]:
    """Per-group tables plus the threshold-policy metadata actually used."""
    if getattr(args, "threshold", None) is not None:
        tables = tables_from_thresholds(data, args.threshold)
        policy_meta = {g: args.threshold for g in data.groups()}
        return tables, {"per_group_threshold": policy_meta, "rationale": "manual"}
    if getattr(args, "policy", None):
        policy = ThresholdPolicy.from_dict(json.loads(Path(args.policy).read_text()))
        return tables_from_thresholds(data, policy.per_group_threshold), policy.as_dict()
    return build_tables(data), None


def _report_format(args) -> str:
    if args.format:
        return args.format
    if args.out and args.out.endswith(".md"):
        return "markdown"
    return "json"


def cmd_audit(args) -> int:
    data = _load_dataset(args.data)
    tables, policy_meta = _predictions(data, args)
    report = evaluate_all(
        tables,
        tol=args.tol,
        metadata={
            "dataset_hash": dataset_hash(data),
            "seed": None,
            "threshold_policy": policy_meta,
        },
    )
    _write_output(emit_report(report, _report_format(args)), args.out)
    return 0


def cmd_scenario(args) -> int:
    if args.list:
        sys.stdout.write("\n".join(scenario_names()) + "\n")
        return 0
    sc = scenario(args.name)
    doc = {
        "name": sc.name,
        "notes": sc.notes,
        "groups": {
            g: {
                "cells": {"tp": t.tp, "fn": t.fn, "fp": t.fp, "tn": t.tn},
                "quantities": derive_quantities(t).as_dict(),
            }
            for g, t in sc.tables.items()
        },
    }
    _write_output(_json_bytes(jsonify(doc)), args.out)
    return 0


def _base_tables(data: GroupedOutcomes):
    """Tables from existing predictions, falling back to threshold 0.5."""
    if all(rec.yhat is not None for rec in data.records):
        return build_tables(data)
    return tables_from_thresholds(data, 0.5)


def _correct_report(data_or_tables, seed: int, method: str, source_hash: str):
    tables = data_or_tables if isinstance(data_or_tables, dict) else _base_tables(data_or_tables)
    return evaluate_all(
        tables,
        metadata={"dataset_hash": source_hash, "seed": seed, "method": method,
                  "threshold_policy": None},
    )


def cmd_correct(args) -> int:
    data = _load_dataset(args.data)
    prefix = args.out_prefix
    seed = args.seed
    source_hash = dataset_hash(data)
    method = args.method

    def emit(name: str, payload: bytes) -> None:
        path = f"{prefix}.{name}"
        Path(path).write_bytes(payload)
        _log(f"wrote {path}")

    before_tables = None
    after_tables = None
    policy_doc = None
    log_lines: list[dict] = []
    transformed: Optional[GroupedOutcomes] = None

    if method == "residualize":
        if args.order or args.sequential:
            order = tuple(args.order.split(",")) if args.order else None
            transformed, model = sequential_residualize(data, order)
        else:
            transformed, model = residualize(data)
        policy_doc = {
            "coefficients": {k: list(v) for k, v in sorted(model.coefficients.items())},
            "order": list(model.order),
            "sequential": model.sequential,
        }
        before_tables, after_tables = _base_tables(data), _base_tables(transformed)
    elif method == "reweight":
        weights = rebalance_weights(data, args.target_rate)
        transformed = weights.apply(data)
        policy_doc = {
            "target_rate": weights.target_rate,
            "weights": {f"{g}|{y}": w for (g, y), w in sorted(weights.weights.items())},
        }
        before_tables, after_tables = _base_tables(data), _base_tables(transformed)
    elif method == "relabel":
        if args.target_rate is None:
            raise ValidationError("relabel needs --target-rate")
        transformed, flips = relabel(data, args.target_rate, seed)
        log_lines = [f.as_dict() for f in flips]
        policy_doc = {"target_rate": args.target_rate, "flips": len(flips)}
        before_tables, after_tables = _base_tables(data), _base_tables(transformed)
    elif method == "tune-thresholds":
        if not args.reference:
            raise ValidationError("tune-thresholds needs --reference")
        result = tune_group_thresholds(
            data, reference=args.reference, target=args.target, tol=args.tol
        )
        ref_threshold = result.policy.per_group_threshold[args.reference]
        before_tables = tables_from_thresholds(data, ref_threshold)
        after_tables = tables_from_thresholds(data, result.policy.per_group_threshold)
        policy_doc = {
            **result.policy.as_dict(),
            "achieved_gap": result.achieved_gap,
            "reference_values": result.reference_values,
            "indeterminate_groups": list(result.indeterminate_groups),
        }
        transformed = None
    elif method == "equalized-odds":
        before_tables = _base_tables(data)
        policy = solve_equalized_odds(before_tables, tol=args.tol)
        after_tables = expected_mixed_tables(before_tables, policy)
        policy_doc = policy.as_dict()
        preds = data if all(r.yhat is not None for r in data.records) else None
        if preds is None:
            from .confusion import apply_thresholds

            preds = apply_thresholds(data, 0.5)
        transformed = apply_mixing(preds, policy, seed)
    else:  # pragma: no cover - argparse restricts choices
        raise ValidationError(f"unknown method {method!r}")

    if transformed is not None:
        emit("dataset.csv", emit_csv(transformed).encode())
    if policy_doc is not None:
        emit("policy.json", _json_bytes(jsonify(policy_doc)))
    if log_lines:
        payload = "".join(json.dumps(line, sort_keys=True) + "\n" for line in log_lines)
        emit("log.jsonl", payload.encode())
    emit("before.json", emit_report(_correct_report(before_tables, seed, method, source_hash), "json"))
    emit("after.json", emit_report(_correct_report(after_tables, seed, method, source_hash), "json"))
    return 0


def frontier_rows(data: GroupedOutcomes, group: str, grid: int) -> list[dict]:
    """Threshold sweep for one group, other groups pinned at 0.5.

    Shared by the CLI ``sweep`` and the service ``/frontier`` endpoint so
    the two surfaces can never disagree.
    """
    if grid < 2:
        raise ValidationError(f"grid must be >= 2, got {grid}")
    groups = data.groups()
    if group not in groups:
        raise ValidationError(f"unknown group {group!r} (groups: {groups})")
    rows = []
    # grid-1 evenly spaced cutoffs over [0, 1], plus the above-max boundary
    # row where nobody is predicted to fail.
    cutpoints = list(np.linspace(0.0, 1.0, grid - 1)) + [THRESHOLD_ABOVE_MAX]
    for t in cutpoints:
        thresholds = {g: 0.5 for g in groups}
        thresholds[group] = float(t)
        quantities = derive_quantities(table_from_scores(data, group, float(t)))
        row: dict = {"threshold": float(t)}
        row.update({name: getattr(quantities, name) for name in _QUANTITY_FIELDS})
        if len(groups) >= 2:
            report = evaluate_all(tables_from_thresholds(data, thresholds))
            for check in report.checks:
                row[f"disparity_{check.name}"] = check.max_abs_disparity
        else:
            for name in _CHECK_COLUMNS:
                row[f"disparity_{name}"] = None
        rows.append(row)
    return rows


def cmd_sweep(args) -> int:
    data = _load_dataset(args.data)
    rows = frontier_rows(data, args.group, args.grid)
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    header = ["threshold"] + list(_QUANTITY_FIELDS) + [f"disparity_{c}" for c in _CHECK_COLUMNS]
    writer.writerow(header)
    for row in rows:
        writer.writerow(["" if row[col] is None else repr(row[col]) for col in header])
    _write_output(out.getvalue().encode(), args.out)
    return 0


def cmd_gen(args) -> int:
    raw = json.loads(Path(args.spec).read_text())
    if args.seed is not None:
        raw["seed"] = args.seed
    if "seed" not in raw:
        raise ValidationError("no seed: pass --seed or put one in the spec file")
    spec = SyntheticSpec.from_dict(raw)
    data = generate_synthetic(spec)
    _write_output(emit_csv(data).encode(), args.out)
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(data_dir=args.data_dir, cors=args.cors)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fairlens",
        description="Audit binary risk classifiers for group fairness.",
    )
    parser.add_argument("--version", action="version", version=f"fairlens {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_audit = sub.add_parser("audit", help="evaluate the six fairness checks on a dataset")
    p_audit.add_argument("--data", required=True)
    mode = p_audit.add_mutually_exclusive_group()
    mode.add_argument("--threshold", type=float, help="one score threshold for every group")
    mode.add_argument("--policy", help="ThresholdPolicy JSON file")
    p_audit.add_argument("--tol", type=float, default=DEFAULT_TOLERANCE)
    p_audit.add_argument("--out", default=None)
    p_audit.add_argument("--format", choices=["json", "markdown"], default=None)
    p_audit.set_defaults(func=cmd_audit)

    p_scenario = sub.add_parser("scenario", help="print a catalog scenario with quantities")
    p_scenario.add_argument("--name")
    p_scenario.add_argument("--list", action="store_true")
    p_scenario.add_argument("--out", default=None)
    p_scenario.set_defaults(func=cmd_scenario)

    p_correct = sub.add_parser("correct", help="apply a fairness correction")
    p_correct.add_argument("--data", required=True)
    p_correct.add_argument(
        "--method",
        required=True,
        choices=["residualize", "reweight", "relabel", "tune-thresholds", "equalized-odds"],
    )
    p_correct.add_argument("--seed", type=int, required=True)
    p_correct.add_argument("--out-prefix", required=True)
    p_correct.add_argument("--target-rate", type=float, default=None)
    p_correct.add_argument("--sequential", action="store_true")
    p_correct.add_argument("--order", default=None, help="comma-separated predictor order")
    p_correct.add_argument("--reference", default=None)
    p_correct.add_argument("--target", choices=["ppv", "npv", "both"], default="ppv")
    p_correct.add_argument("--tol", type=float, default=DEFAULT_TOLERANCE)
    p_correct.set_defaults(func=cmd_correct)

    p_sweep = sub.add_parser("sweep", help="threshold-vs-metrics frontier as CSV")
    p_sweep.add_argument("--data", required=True)
    p_sweep.add_argument("--group", required=True)
    p_sweep.add_argument("--grid", type=int, required=True)
    p_sweep.add_argument("--out", default=None)
    p_sweep.set_defaults(func=cmd_sweep)

    p_gen = sub.add_parser("gen", help="generate a synthetic dataset")
    p_gen.add_argument("--spec", required=True)
    p_gen.add_argument("--seed", type=int, default=None)
    p_gen.add_argument("--out", default=None)
    p_gen.set_defaults(func=cmd_gen)

    p_serve = sub.add_parser("serve", help="start the audit HTTP service")
    p_serve.add_argument("--port", type=int, default=8080)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--data-dir", default=os.environ.get("FAIRLENS_DATA_DIR"))
    p_serve.add_argument("--cors", action="store_true",
                         help="allow any origin (local UI development)")
    p_serve.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        if args.command == "scenario" and not args.list and not args.name:
            raise ValidationError("scenario needs --name or --list")
        return args.func(args)
    except ComputationError as exc:
        _log(f"error: {exc}")
        return 2
    except (ValidationError, FileNotFoundError, json.JSONDecodeError) as exc:
        _log(f"error: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
