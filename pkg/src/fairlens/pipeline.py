"""Dataset ingestion, synthetic data, and report serialization.

The CSV schema (documented byte-exactly in docs/FORMAT.md): UTF-8, comma
separated, header row mandatory.  Required columns ``id``, ``group``,
``y``; optional ``score``, ``yhat``, ``weight``; legitimate predictors
are prefixed ``L_`` and protected predictors ``S_``.  At least one of the
``score``/``yhat`` columns must exist and every row must fill one of
them.  Validation failures are collected per line and raised together.

Report JSON is the versioned ``fairlens-report/1`` document: sorted keys,
floats rounded to six significant digits, non-finite and undefined values
rendered as ``null``.  Serialization is deterministic, so equal reports
produce byte-identical output.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Mapping, Optional, Union

import numpy as np

from .checks import FairnessReport
from .confusion import ConfusionTable, GroupedOutcomes, Record, ValidationError
from .rng import keyed_generators

__all__ = [
    "SCHEMA_VERSION",
    "SATURATION_QUALITY",
    "CsvError",
    "GroupSpec",
    "SyntheticSpec",
    "load_csv",
    "emit_csv",
    "dataset_hash",
    "generate_synthetic",
    "emit_report",
    "jsonify",
    "table_to_records",
    "scenario_to_dataset",
]

SCHEMA_VERSION = "fairlens-report/1"

# Latent location gap above which the two class-conditional score
# distributions no longer overlap (noise support is [-1, 1]), so every
# generated sample is separable at some threshold.
SATURATION_QUALITY = 2.0

_FIXED_COLUMNS = ("id", "group", "y", "score", "yhat", "weight")

# Scores attached when a confusion table is expanded to unit records: one
# value per (y, yhat) cell, on the correct side of 0.5 so thresholding at
# 0.5 reproduces the original table exactly.
_CELL_SCORES = {(1, 1): 0.8, (0, 1): 0.7, (1, 0): 0.3, (0, 0): 0.2}


class CsvError(ValidationError):
    """CSV validation failure with per-line detail in ``errors``."""

    def __init__(self, errors: list[tuple[int, str]]):
        self.errors = list(errors)
        preview = "; ".join(f"line {ln}: {msg}" for ln, msg in self.errors[:5])
        more = f" (+{len(self.errors) - 5} more)" if len(self.errors) > 5 else ""
        super().__init__(f"invalid CSV: {preview}{more}")

    def as_dicts(self) -> list[dict[str, object]]:
        return [{"line": ln, "message": msg} for ln, msg in self.errors]


def _read_text(source: Union[str, Path, bytes, IO]) -> str:
    if isinstance(source, bytes):
        return source.decode("utf-8")
    if isinstance(source, (str, Path)) and "\n" not in str(source):
        return Path(source).read_text(encoding="utf-8")
    if isinstance(source, str):
        return source
    data = source.read()
    return data.decode("utf-8") if isinstance(data, bytes) else data


def load_csv(source: Union[str, Path, bytes, IO]) -> GroupedOutcomes:
    """Parse and validate a dataset CSV.

    ``source`` may be a path, raw bytes, CSV text, or a file object.  Row
    order is preserved.  All validation problems are reported at once via
    :class:`CsvError`, each tagged with its 1-based line number.
    """
    text = _read_text(source)
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise CsvError([(1, "empty file: header row is mandatory")])
    header = rows[0]
    errors: list[tuple[int, str]] = []
    seen_cols: set[str] = set()
    for col in header:
        if col in seen_cols:
            errors.append((1, f"duplicate column {col!r}"))
        seen_cols.add(col)
        if col not in _FIXED_COLUMNS and not col.startswith(("L_", "S_")):
            errors.append((1, f"unknown column {col!r} (predictors use L_/S_ prefixes)"))
    for required in ("id", "group", "y"):
        if required not in seen_cols:
            errors.append((1, f"missing required column {required!r}"))
    if "score" not in seen_cols and "yhat" not in seen_cols:
        errors.append((1, "need a score or a yhat column (or both)"))
    if errors:
        raise CsvError(errors)
    col = {name: i for i, name in enumerate(header)}
    legit_names = tuple(c[2:] for c in header if c.startswith("L_"))
    prot_names = tuple(c[2:] for c in header if c.startswith("S_"))

    records: list[Record] = []
    seen_ids: set[str] = set()
    for line_no, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            errors.append((line_no, f"expected {len(header)} fields, got {len(row)}"))
            continue

        def cell(name: str) -> str:
            return row[col[name]].strip() if name in col else ""

        problems: list[str] = []
        rid = cell("id")
        group = cell("group")
        if not rid:
            problems.append("id must be non-empty")
        elif rid in seen_ids:
            problems.append(f"duplicate id {rid!r}")
        if not group:
            problems.append("group must be non-empty")
        y_raw = cell("y")
        y = -1
        if y_raw in ("0", "1"):
            y = int(y_raw)
        else:
            problems.append(f"y must be 0 or 1, got {y_raw!r}")
        score: Optional[float] = None
        if cell("score"):
            try:
                score = float(cell("score"))
                if not (0.0 <= score <= 1.0):
                    problems.append(f"score {score} outside [0, 1]")
            except ValueError:
                problems.append(f"score {cell('score')!r} is not a number")
        yhat: Optional[int] = None
        if cell("yhat"):
            if cell("yhat") in ("0", "1"):
                yhat = int(cell("yhat"))
            else:
                problems.append(f"yhat must be 0 or 1, got {cell('yhat')!r}")
        weight = 1.0
        if cell("weight"):
            try:
                weight = float(cell("weight"))
                if not (math.isfinite(weight) and weight > 0):
                    problems.append(f"weight must be > 0, got {weight}")
            except ValueError:
                problems.append(f"weight {cell('weight')!r} is not a number")
        if score is None and yhat is None:
            problems.append("row needs a score or a yhat value")

        def predictor_values(names: tuple[str, ...], prefix: str) -> tuple[float, ...]:
            values = []
            for name in names:
                raw = cell(f"{prefix}{name}")
                if not raw:
                    problems.append(f"predictor {prefix}{name} is empty")
                    values.append(math.nan)
                    continue
                try:
                    values.append(float(raw))
                except ValueError:
                    problems.append(f"predictor {prefix}{name} value {raw!r} is not a number")
                    values.append(math.nan)
            return tuple(values)

        legit = predictor_values(legit_names, "L_")
        prot = predictor_values(prot_names, "S_")
        if problems:
            errors.extend((line_no, p) for p in problems)
            continue
        seen_ids.add(rid)
        records.append(
            Record(id=rid, group=group, y=y, score=score, yhat=yhat,
                   weight=weight, legitimate=legit, protected=prot)
        )
    if errors:
        raise CsvError(errors)
    return GroupedOutcomes(tuple(records), legit_names, prot_names)


def _fmt(value: Optional[float]) -> str:
    if value is None:
        return ""
    return repr(value)


def emit_csv(data: GroupedOutcomes) -> str:
    """Serialize a dataset back to the canonical CSV form.

    Floats use shortest round-trip formatting, so load(emit(d)) == d at
    the record level and emit is deterministic.
    """
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    header = list(_FIXED_COLUMNS)
    header += [f"L_{name}" for name in data.legitimate_names]
    header += [f"S_{name}" for name in data.protected_names]
    writer.writerow(header)
    for rec in data.records:
        row = [
            rec.id,
            rec.group,
            str(rec.y),
            _fmt(rec.score),
            "" if rec.yhat is None else str(rec.yhat),
            repr(rec.weight),
        ]
        row += [repr(v) for v in rec.legitimate]
        row += [repr(v) for v in rec.protected]
        writer.writerow(row)
    return out.getvalue()


def dataset_hash(data: GroupedOutcomes) -> str:
    """Content hash of the canonical CSV serialization."""
    return hashlib.sha256(emit_csv(data).encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class GroupSpec:
    """Synthetic recipe for one group."""

    n: int
    base_rate_fail: float
    score_quality: float

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValidationError(f"group size must be >= 1, got {self.n}")
        if not (0.0 < self.base_rate_fail < 1.0):
            raise ValidationError(
                f"base rate must be strictly inside (0, 1), got {self.base_rate_fail}"
            )
        if self.score_quality < 0:
            raise ValidationError(f"score quality must be >= 0, got {self.score_quality}")


@dataclass(frozen=True)
class SyntheticSpec:
    """Per-group sizes, base rates and score quality, plus the global seed."""

    groups: dict[str, GroupSpec]
    seed: int

    def __post_init__(self) -> None:
        if not self.groups:
            raise ValidationError("synthetic spec needs at least one group")

    @classmethod
    def from_dict(cls, raw: Mapping) -> "SyntheticSpec":
        try:
            groups = {
                str(name): GroupSpec(
                    n=int(g["n"]),
                    base_rate_fail=float(g["base_rate_fail"]),
                    score_quality=float(g["score_quality"]),
                )
                for name, g in raw["groups"].items()
            }
            return cls(groups=groups, seed=int(raw["seed"]))
        except (KeyError, TypeError, AttributeError) as exc:
            raise ValidationError(f"malformed synthetic spec: {exc}") from exc

    def as_dict(self) -> dict:
        return {
            "seed": self.seed,
            "groups": {
                name: {
                    "n": g.n,
                    "base_rate_fail": g.base_rate_fail,
                    "score_quality": g.score_quality,
                }
                for name, g in sorted(self.groups.items())
            },
        }


def generate_synthetic(spec: SyntheticSpec) -> GroupedOutcomes:
    """Seeded synthetic dataset with exact per-group failure counts.

    Outcomes are assigned at the exact rounded count round(n * rate), not
    by Bernoulli draws, so base rates are honored at any sample size.
    Scores are sigmoid-transformed latents ``+-quality/2 + noise`` with
    Beta(2,2) noise scaled to [-1, 1]: unimodal on (0, 1) for each class,
    carrying no signal at quality 0, and fully separated once the quality
    exceeds :data:`SATURATION_QUALITY`.  Each group draws from its own
    generator derived from (seed, sorted group index), so output is
    bit-reproducible and insensitive to other groups' sizes.
    """
    rngs = keyed_generators(spec.seed, spec.groups)
    records: list[Record] = []
    for name in sorted(spec.groups):
        g = spec.groups[name]
        rng = rngs[name]
        n_fail = round(g.n * g.base_rate_fail)
        ys = np.zeros(g.n, dtype=int)
        ys[:n_fail] = 1
        ys = ys[rng.permutation(g.n)]
        noise = rng.beta(2.0, 2.0, size=g.n) * 2.0 - 1.0
        latent = (g.score_quality / 2.0) * (2 * ys - 1) + noise
        scores = 1.0 / (1.0 + np.exp(-latent))
        for i in range(g.n):
            records.append(
                Record(
                    id=f"{name}-{i:06d}",
                    group=name,
                    y=int(ys[i]),
                    score=float(scores[i]),
                )
            )
    return GroupedOutcomes(tuple(records))


def _six_sig(value: float) -> Optional[float]:
    if not math.isfinite(value):
        return None
    return float(f"{value:.6g}") + 0.0  # +0.0 folds -0.0 into 0.0


def jsonify(obj):
    if obj is None or isinstance(obj, (str, bool, int)):
        return obj
    if isinstance(obj, float):
        return _six_sig(obj)
    if isinstance(obj, Mapping):
        return {str(k): jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonify(v) for v in obj]
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def report_to_json_dict(report: FairnessReport) -> dict:
    """The report as a plain JSON-ready dict (6 significant digits)."""
    return jsonify(report.as_dict())


def _md_value(value: Optional[float]) -> str:
    if value is None:
        return "--"
    return f"{value:.2f}"


def _markdown(report: FairnessReport) -> str:
    lines = ["# Fairness report", ""]
    lines.append(
        "| Group | N | Base rate (fail) | Cond. use acc. (fail) | Cond. use acc. (succ.) "
        "| FNR | FPR | Fail-pred. error | Succ.-pred. error |"
    )
    lines.append("|---|---|---|---|---|---|---|---|---|")
    for group in sorted(report.per_group_quantities):
        q = report.per_group_quantities[group]
        lines.append(
            "| {} | {:g} | {} | {} | {} | {} | {} | {} | {} |".format(
                group,
                q.n,
                _md_value(q.base_rate_fail),
                _md_value(q.fail_pred_accuracy),
                _md_value(q.success_pred_accuracy),
                _md_value(q.fnr),
                _md_value(q.fpr),
                _md_value(q.fail_pred_error),
                _md_value(q.success_pred_error),
            )
        )
    lines.append("")
    lines.append(f"Checks at tolerance {report.tolerance:g}:")
    lines.append("")
    symbol = {"satisfied": "PASS", "unsatisfied": "FAIL", "indeterminate": "n/a "}
    for check in report.checks:
        disparity = "--" if check.max_abs_disparity is None else f"{check.max_abs_disparity:.4f}"
        lines.append(f"- [{symbol[check.status]}] {check.name}: max disparity {disparity}")
    lines.append("")
    return "\n".join(lines)


def emit_report(report: FairnessReport, format: str = "json") -> bytes:
    """Serialize a report deterministically as JSON or markdown."""
    if format == "json":
        doc = report_to_json_dict(report)
        return (json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n").encode("utf-8")
    if format == "markdown":
        return _markdown(report).encode("utf-8")
    raise ValidationError(f"unknown report format {format!r}; use json or markdown")


def table_to_records(table: ConfusionTable, group: str) -> list[Record]:
    """Expand integer confusion-table cells into unit records.

    Each record carries the cell's (y, yhat) plus a fixed synthetic score
    on the matching side of 0.5 (see ``_CELL_SCORES``), so thresholding
    the expanded data at 0.5 rebuilds the original table exactly.
    """
    records = []
    cells = [((1, 1), table.tp), ((1, 0), table.fn), ((0, 1), table.fp), ((0, 0), table.tn)]
    for (y, yhat), count in cells:
        if abs(count - round(count)) > 1e-9:
            raise ValidationError(f"cell ({y},{yhat}) of group {group!r} is fractional")
        for i in range(int(round(count))):
            records.append(
                Record(
                    id=f"{group}-y{y}p{yhat}-{i:06d}",
                    group=group,
                    y=y,
                    yhat=yhat,
                    score=_CELL_SCORES[(y, yhat)],
                )
            )
    return records


def scenario_to_dataset(tables: Mapping[str, ConfusionTable]) -> GroupedOutcomes:
    """Unit-record dataset for a scenario's tables (see table_to_records)."""
    records: list[Record] = []
    for group in sorted(tables):
        records.extend(table_to_records(tables[group], group))
    return GroupedOutcomes(tuple(records))
