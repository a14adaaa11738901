"""Structured verification reports (JSON) and grid exports (CSV)."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field, is_dataclass
from pathlib import Path

import numpy as np

SCHEMA_VERSION = "1.0"


@dataclass
class CheckRecord:
    name: str
    max_residual: float
    mean_residual: float
    tolerance: float
    kind: str = "below"
    note: str = ""

    @property
    def passed(self) -> bool:
        if self.kind == "above":
            return bool(self.max_residual > self.tolerance)
        return bool(self.max_residual < self.tolerance)

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "max_residual": _clean(self.max_residual),
            "mean_residual": _clean(self.mean_residual),
            "tolerance": _clean(self.tolerance),
            "pass": self.passed,
        }
        if self.kind != "below":
            d["comparison"] = self.kind
        if self.note:
            d["note"] = self.note
        return d


def _clean(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else str(x)


def _jsonable(obj):
    if is_dataclass(obj):
        return _jsonable(asdict(obj))
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        return _clean(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


@dataclass
class VerificationReport:
    title: str
    config: dict
    seed: int | None = None
    checks: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    data: dict = field(default_factory=dict)
    timing: dict = field(default_factory=dict)
    # in-memory results for exporters; never serialized
    artifacts: dict = field(default_factory=dict, repr=False, compare=False)

    def add(self, name: str, values, tolerance: float, kind: str = "below", note: str = "") -> CheckRecord:
        """Record a check from a scalar or an array of residuals.

        ``kind="above"`` turns it into a lower-bound check (pass iff the
        statistic exceeds the threshold); the statistic is then the minimum.
        """
        v = np.abs(np.atleast_1d(np.asarray(values, dtype=float)))
        if v.size == 0:
            rec = CheckRecord(name, float("nan"), float("nan"), tolerance, kind, note or "no data")
        elif kind == "above":
            rec = CheckRecord(name, float(np.min(v)), float(np.mean(v)), tolerance, kind, note)
        else:
            rec = CheckRecord(name, float(np.max(v)), float(np.mean(v)), tolerance, kind, note)
        self.checks.append(rec)
        return rec

    def add_flag(self, name: str, ok: bool, note: str = "") -> CheckRecord:
        rec = CheckRecord(name, 0.0 if ok else 1.0, 0.0 if ok else 1.0, 0.5, "below", note)
        self.checks.append(rec)
        return rec

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self) -> list:
        return [c for c in self.checks if not c.passed]

    def check(self, name: str) -> CheckRecord:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self, include_timing: bool = False) -> dict:
        d = {
            "schema_version": SCHEMA_VERSION,
            "title": self.title,
            "config": _jsonable(self.config),
            "seed": self.seed,
            "checks": [c.to_dict() for c in self.checks],
            "pass": self.passed,
        }
        if self.notes:
            d["notes"] = list(self.notes)
        if self.data:
            d["data"] = _jsonable(self.data)
        if include_timing:
            d["timing"] = _jsonable(self.timing)
        return d

    def write(self, path, include_timing: bool = False) -> Path:
        """Write the report; timing goes to a sibling file so the report itself
        is byte-identical across runs with the same configuration."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(include_timing), indent=2, sort_keys=False) + "\n")
        if self.timing and not include_timing:
            path.with_suffix(".timing.json").write_text(json.dumps(_jsonable(self.timing), indent=2) + "\n")
        return path

    def summary_lines(self) -> list[str]:
        out = []
        for c in self.checks:
            tag = "PASS" if c.passed else "FAIL"
            op = ">" if c.kind == "above" else "<"
            out.append(f"[{tag}] {c.name}: {c.max_residual:.3e} {op} {c.tolerance:.1e}")
        return out


def write_csv(path, columns: dict) -> Path:
    """Columns of equal length (arrays are flattened) with a header row."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    flat = {k: np.asarray(v).ravel() for k, v in columns.items()}
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(flat))
        for row in zip(*flat.values()):
            w.writerow([repr(float(x)) for x in row])
    return path


def curve_csv(path, curve, model) -> Path:
    """s, chart coordinates, kappa_1..kappa_3 and eta(gamma') per sample."""
    from .models import structure_values

    _, _, _, eta = structure_values(model, curve.positions)
    cols = {"s": curve.s}
    for i in range(curve.positions.shape[1]):
        cols[f"x{i}"] = curve.positions[:, i]
    for i in range(3):
        cols[f"kappa{i + 1}"] = curve.curvatures[:, i] if i < curve.curvatures.shape[1] else np.zeros(len(curve.s))
    cols["eta_tangent"] = np.einsum("na,na->n", eta, curve.tangent)
    return write_csv(path, cols)
