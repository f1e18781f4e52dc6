"""Structured experiment reports and their JSON / CSV serialization."""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np


@dataclass
class Quantity:
    name: str
    value: object
    relation: str  # the analytic relation this number reproduces


@dataclass
class Check:
    name: str
    relation: str
    measured: float
    tolerance: float
    passed: bool


@dataclass
class ExperimentReport:
    experiment: str
    inputs: dict
    quantities: list[Quantity] = field(default_factory=list)
    checks: list[Check] = field(default_factory=list)
    columns: list[str] = field(default_factory=list)
    rows: list[list] = field(default_factory=list)
    duration_s: float | None = None

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def quantity(self, name, value, relation):
        self.quantities.append(Quantity(name, _plain(value), relation))

    def check_le(self, name, relation, measured, tolerance) -> Check:
        measured = float(measured)
        c = Check(name, relation, measured, float(tolerance), bool(measured <= tolerance))
        self.checks.append(c)
        return c

    def check_true(self, name, relation, ok: bool) -> Check:
        c = Check(name, relation, 0.0 if ok else 1.0, 0.0, bool(ok))
        self.checks.append(c)
        return c

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        if self.duration_s is None:
            del d["duration_s"]
        return _plain(d)


def _plain(x):
    """Make ``x`` JSON-serializable; complex numbers become ``{"re", "im"}``."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (complex, np.complexfloating)):
        return {"re": float(x.real), "im": float(x.imag)}
    if isinstance(x, (float, np.floating)):
        return float(x)
    return x


def reports_json(reports: list[ExperimentReport]) -> str:
    if len(reports) == 1:
        payload = reports[0].to_dict()
    else:
        payload = {
            "experiments": [r.to_dict() for r in reports],
            "passed": all(r.passed for r in reports),
        }
    return json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n"


def report_csv(report: ExperimentReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(report.columns)
    for row in report.rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def write_atomic(path, text: str) -> None:
    """Write through a temp file in the target directory, then rename over ``path``."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
