"""HTTP audit service for scripted clients and the tradeoff-explorer UI.

Endpoints (JSON responses unless noted):

* ``GET  /health`` — service version and loaded dataset ids.
* ``GET  /scenarios`` / ``GET /scenarios/{name}`` — the worked-table catalog.
* ``POST /datasets`` (CSV body) — validate and store; the id is the
  SHA-256 of the uploaded bytes, so re-uploads are idempotent.
* ``POST /datasets/from_scenario/{name}`` — store a catalog scenario
  expanded to unit records (score column included), for UI use.
* ``POST /datasets/{id}/whatif`` — evaluate one adjustment (thresholds,
  cost ratio, or mixing) and return a full fairness report.
* ``GET  /datasets/{id}/frontier?group=G&grid=K`` — threshold sweep rows.

Datasets are immutable once stored and every evaluation is pure, so any
response depends only on (dataset bytes, request body); responses are
rendered through the same canonical serializer as the CLI, making the
two surfaces byte-interchangeable.  With ``data_dir`` set, uploaded CSVs
are persisted there and reloaded on startup.
"""

from __future__ import annotations

import hashlib
import json
import threading
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request, Response

from . import __version__
from .checks import DEFAULT_TOLERANCE, evaluate_all
from .cli import frontier_rows
from .confusion import (
    ComputationError,
    GroupedOutcomes,
    ValidationError,
    apply_thresholds,
    build_tables,
    derive_quantities,
    tables_from_thresholds,
)
from .feasibility import scenario, scenario_names
from .inprocess import threshold_for_cost_ratio
from .pipeline import (
    CsvError,
    dataset_hash,
    emit_csv,
    jsonify,
    load_csv,
    scenario_to_dataset,
)
from .postprocess import GroupMixing, MixingPolicy, expected_mixed_tables, solve_equalized_odds

__all__ = ["create_app", "DatasetStore"]


class DatasetStore:
    """Append-only in-memory dataset store, keyed by content hash."""

    def __init__(self, data_dir: Optional[str] = None):
        self._lock = threading.Lock()
        self._datasets: dict[str, GroupedOutcomes] = {}
        self._data_dir = Path(data_dir) if data_dir else None
        if self._data_dir:
            self._data_dir.mkdir(parents=True, exist_ok=True)
            for path in sorted(self._data_dir.glob("*.csv")):
                try:
                    self.put(path.read_bytes(), persist=False)
                except ValidationError:
                    continue

    def put(self, raw: bytes, persist: bool = True) -> str:
        dataset_id = hashlib.sha256(raw).hexdigest()
        with self._lock:
            if dataset_id not in self._datasets:
                data = load_csv(raw)
                self._datasets[dataset_id] = data
                if persist and self._data_dir:
                    (self._data_dir / f"{dataset_id}.csv").write_bytes(raw)
        return dataset_id

    def get(self, dataset_id: str) -> Optional[GroupedOutcomes]:
        with self._lock:
            return self._datasets.get(dataset_id)

    def ids(self) -> list[str]:
        with self._lock:
            return sorted(self._datasets)


def _canonical(doc, status_code: int = 200) -> Response:
    """Deterministic JSON response (sorted keys, 6 significant digits)."""
    body = json.dumps(jsonify(doc), sort_keys=True, indent=2, allow_nan=False) + "\n"
    return Response(content=body.encode(), media_type="application/json",
                    status_code=status_code)


def _error(status_code: int, message: str, **extra) -> Response:
    return _canonical({"error": message, **extra}, status_code=status_code)


def _scenario_doc(name: str) -> dict:
    sc = scenario(name)
    return {
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


def _whatif_report(data: GroupedOutcomes, body: dict) -> dict:
    modes = [k for k in ("thresholds", "cost_ratio", "mixing") if k in body]
    if len(modes) != 1:
        raise ValidationError(
            f"exactly one adjustment mode per request; got {modes or 'none'}"
        )
    tol = body.get("tol", DEFAULT_TOLERANCE)
    if not isinstance(tol, (int, float)) or tol < 0:
        raise ValidationError(f"tol must be a number >= 0, got {tol!r}")
    extra_meta: dict = {"adjustment": modes[0]}

    if "thresholds" in body:
        thresholds = body["thresholds"]
        if not isinstance(thresholds, dict) or not thresholds:
            raise ValidationError("thresholds must be a non-empty object group -> cutoff")
        unknown = set(thresholds) - set(data.groups())
        if unknown:
            raise ValidationError(f"thresholds for unknown groups: {sorted(unknown)}")
        missing = set(data.groups()) - set(thresholds)
        if missing:
            raise ValidationError(f"missing thresholds for groups: {sorted(missing)}")
        tables = tables_from_thresholds(data, {g: float(t) for g, t in thresholds.items()})
        extra_meta["threshold_policy"] = {
            "per_group_threshold": thresholds, "rationale": "manual"}
    elif "cost_ratio" in body:
        r = body["cost_ratio"]
        if not isinstance(r, (int, float)):
            raise ValidationError(f"cost_ratio must be a number, got {r!r}")
        t = threshold_for_cost_ratio(float(r))
        tables = tables_from_thresholds(data, t)
        extra_meta["threshold_policy"] = {
            "per_group_threshold": {g: t for g in data.groups()},
            "rationale": "cost_ratio",
            "cost_ratio_fn_to_fp": float(r),
        }
    else:
        mixing = body["mixing"]
        if not isinstance(mixing, dict):
            raise ValidationError("mixing must be an object")
        base = (
            build_tables(data)
            if all(rec.yhat is not None for rec in data.records)
            else tables_from_thresholds(data, 0.5)
        )
        if mixing.get("solve"):
            policy = solve_equalized_odds(
                base, tol=float(mixing.get("tol", 0.0)),
                equal_opportunity=bool(mixing.get("equal_opportunity", False)),
            )
        elif "policies" in mixing:
            try:
                per_group = {
                    str(g): GroupMixing(
                        p1=float(m["p1"]), p0=float(m["p0"]),
                        achieved_tpr=0.0, achieved_fpr=0.0,
                    )
                    for g, m in mixing["policies"].items()
                }
            except (KeyError, TypeError) as exc:
                raise ValidationError(f"malformed mixing policies: {exc}") from exc
            bad = [g for g, m in per_group.items() if not (0 <= m.p0 <= 1 and 0 <= m.p1 <= 1)]
            if bad:
                raise ValidationError(f"mixing probabilities outside [0, 1] for {bad}")
            unknown = set(per_group) - set(data.groups())
            if unknown:
                raise ValidationError(f"mixing policies for unknown groups: {sorted(unknown)}")
            missing = set(data.groups()) - set(per_group)
            if missing:
                raise ValidationError(f"missing mixing policies for groups: {sorted(missing)}")
            resolved = {}
            expected_error = 0.0
            total_n = sum(t.n for t in base.values())
            for g, t in base.items():
                m = per_group[g]
                tpr = t.tp / t.actual_fail if t.actual_fail > 0 else 0.0
                fpr = t.fp / t.actual_success if t.actual_success > 0 else 0.0
                mixed_tpr = m.p1 * tpr + m.p0 * (1 - tpr)
                mixed_fpr = m.p1 * fpr + m.p0 * (1 - fpr)
                resolved[g] = GroupMixing(
                    p1=m.p1, p0=m.p0, achieved_tpr=mixed_tpr, achieved_fpr=mixed_fpr
                )
                expected_error += (
                    t.actual_fail * (1 - mixed_tpr) + t.actual_success * mixed_fpr
                ) / total_n
            policy = MixingPolicy(per_group=resolved, expected_error=expected_error)
        else:
            raise ValidationError("mixing needs either solve=true or a policies object")
        tables = expected_mixed_tables(base, policy)
        extra_meta["mixing_policy"] = policy.as_dict()

    report = evaluate_all(
        tables,
        tol=float(tol),
        metadata={"dataset_hash": dataset_hash(data), "seed": None, **extra_meta},
    )
    return report.as_dict()


def create_app(data_dir: Optional[str] = None, cors: bool = False) -> FastAPI:
    app = FastAPI(title="fairlens audit service", version=__version__)
    store = DatasetStore(data_dir)
    if cors:
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(
            CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
        )

    @app.get("/health")
    def health() -> Response:
        return _canonical({"status": "ok", "version": __version__, "datasets": store.ids()})

    @app.get("/scenarios")
    def scenarios() -> Response:
        return _canonical({"scenarios": list(scenario_names())})

    @app.get("/scenarios/{name}")
    def scenario_detail(name: str) -> Response:
        try:
            return _canonical(_scenario_doc(name))
        except ValidationError as exc:
            return _error(404, str(exc))

    @app.post("/datasets")
    async def upload(request: Request) -> Response:
        raw = await request.body()
        if not raw:
            return _error(400, "empty body", errors=[])
        try:
            dataset_id = store.put(raw)
        except CsvError as exc:
            return _error(400, "invalid CSV", errors=exc.as_dicts())
        except ValidationError as exc:
            return _error(400, str(exc), errors=[])
        return _canonical({"dataset_id": dataset_id})

    @app.post("/datasets/from_scenario/{name}")
    def dataset_from_scenario(name: str) -> Response:
        try:
            data = scenario_to_dataset(scenario(name).tables)
        except ValidationError as exc:
            return _error(404, str(exc))
        dataset_id = store.put(emit_csv(data).encode())
        return _canonical({"dataset_id": dataset_id})

    @app.post("/datasets/{dataset_id}/whatif")
    async def whatif(dataset_id: str, request: Request) -> Response:
        data = store.get(dataset_id)
        if data is None:
            return _error(404, f"unknown dataset {dataset_id!r}")
        try:
            body = json.loads(await request.body() or b"{}")
        except json.JSONDecodeError as exc:
            return _error(422, f"body is not valid JSON: {exc}")
        if not isinstance(body, dict):
            return _error(422, "body must be a JSON object")
        try:
            return _canonical(_whatif_report(data, body))
        except (ValidationError, ComputationError) as exc:
            return _error(422, str(exc))

    @app.get("/datasets/{dataset_id}/frontier")
    def frontier(dataset_id: str, group: str, grid: int = 51) -> Response:
        data = store.get(dataset_id)
        if data is None:
            return _error(404, f"unknown dataset {dataset_id!r}")
        try:
            rows = frontier_rows(data, group, grid)
        except (ValidationError, ComputationError) as exc:
            return _error(422, str(exc))
        return _canonical({"group": group, "grid": grid, "rows": rows})

    return app
