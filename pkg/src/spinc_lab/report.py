"""Deterministic JSON reports: sorted keys, floats at 17 significant digits, atomic writes."""
from __future__ import annotations

import dataclasses
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

SCHEMA = "spinc-lab-report/1"
TOOL_VERSION = "0.1.0"


@dataclass
class CheckRecord:
    name: str
    anchor: str  # which identity the check exercises
    residual: float
    tolerance: float
    passed: bool
    samples: list = field(default_factory=list)
    asserted: bool = True
    mode: str = "max"  # "max": residual <= tol passes; "min": residual >= tol passes
    detail: dict = field(default_factory=dict)


def check(name: str, anchor: str, residual: float, tolerance: float, samples=(), *,
          mode: str = "max", asserted: bool = True, **detail) -> CheckRecord:
    residual = float(residual)
    if mode == "max":
        ok = residual <= tolerance
    elif mode == "min":
        ok = residual >= tolerance
    else:
        raise ValueError(f"unknown check mode {mode!r}")
    return CheckRecord(name, anchor, residual, float(tolerance), bool(ok and math.isfinite(residual)),
                       [list(map(float, np.ravel(s))) for s in samples], asserted, mode, detail)


@dataclass
class Report:
    command: str
    config: dict
    checks: list = field(default_factory=list)
    data: dict = field(default_factory=dict)
    timing: dict = field(default_factory=dict)

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks if c.asserted)

    def summary(self) -> dict:
        asserted = [c for c in self.checks if c.asserted]
        worst = max((c.residual for c in asserted if c.mode == "max"), default=0.0)
        return {"asserted": len(asserted), "passed": sum(c.passed for c in asserted),
                "total": len(self.checks), "worst_residual": worst, "all_passed": self.all_passed}

    def body(self) -> dict:
        return {"schema": SCHEMA, "tool_version": TOOL_VERSION, "command": self.command,
                "config": self.config, "checks": [dataclasses.asdict(c) for c in self.checks],
                "data": self.data, "summary": self.summary()}

    def to_json(self, with_timing: bool = True) -> str:
        body = self.body()
        if with_timing:
            body["timing"] = self.timing
        return dumps(body) + "\n"


def _plain(obj: Any) -> Any:
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return _plain(dataclasses.asdict(obj))
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    return obj


def format_float(x: float) -> str:
    if math.isnan(x):
        return '"NaN"'
    if math.isinf(x):
        return '"Infinity"' if x > 0 else '"-Infinity"'
    s = format(x, ".17g")
    if "e" not in s and "." not in s and "n" not in s:
        s += ".0"
    return s


def _dump(obj: Any, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_dump(obj[k], indent, level + 1)}" for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(_dump(v, indent, level) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _dump(v, indent, level + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        return format_float(obj)
    if isinstance(obj, int):
        return str(obj)
    return json.dumps(str(obj))


def dumps(obj: Any, indent: int = 2) -> str:
    return _dump(_plain(obj), indent, 0)


def write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def strip_timing(text: str) -> str:
    """Report text with the timing block removed, for determinism comparisons."""
    body = json.loads(text)
    body.pop("timing", None)
    return dumps(body)


def load(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)


def check_from_dict(d: dict) -> CheckRecord:
    return CheckRecord(**d)


def optional_float(x) -> Optional[float]:
    return None if x is None else float(x)
