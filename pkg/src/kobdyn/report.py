"""Verdict reports: named checks with observed values, bounds and witnesses."""

from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from .orbit import jnum, jpoint


@dataclass
class Check:
    name: str
    passed: bool
    observed: Any = None
    bound: Any = None
    tolerance: Optional[float] = None
    witness: Any = None
    note: str = ""

    def __post_init__(self):
        self.passed = bool(self.passed)
        if not self.passed and self.witness is None:
            self.witness = {"observed": self.observed}

    def to_json(self):
        return {
            "name": self.name,
            "passed": self.passed,
            "observed": _jsonable(self.observed),
            "bound": _jsonable(self.bound),
            "tolerance": jnum(self.tolerance),
            "witness": _jsonable(self.witness),
            "note": self.note,
        }


@dataclass
class Report:
    title: str
    checks: list = field(default_factory=list)
    data: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def add(self, *args, **kwargs):
        c = args[0] if args and isinstance(args[0], Check) else Check(*args, **kwargs)
        self.checks.append(c)
        return c

    def extend(self, other, prefix=""):
        for c in other.checks:
            self.checks.append(Check(prefix + c.name, c.passed, c.observed, c.bound,
                                     c.tolerance, c.witness, c.note))
        return self

    def check(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def failures(self):
        return [c for c in self.checks if not c.passed]

    def to_json(self):
        return {
            "title": self.title,
            "passed": self.passed,
            "checks": [c.to_json() for c in self.checks],
            "data": _jsonable(self.data),
        }

    def summary(self):
        lines = ["%s: %s" % (self.title, "PASS" if self.passed else "FAIL")]
        for c in self.checks:
            lines.append("  [%s] %s observed=%s bound=%s" % (
                "ok" if c.passed else "FAIL", c.name, _short(c.observed), _short(c.bound)))
        return "\n".join(lines)


def _short(v):
    if isinstance(v, float):
        return "%.6g" % v
    return str(_jsonable(v))


def _jsonable(v):
    """Convert numpy / complex / nested values to plain JSON types deterministically."""
    if v is None or isinstance(v, (bool, str)):
        return v
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return jnum(v)
    if isinstance(v, (complex, np.complexfloating)):
        return [jnum(v.real), jnum(v.imag)]
    if isinstance(v, np.ndarray):
        if v.dtype == object or np.iscomplexobj(v):
            if v.ndim == 1:
                return jpoint(v)
            return [_jsonable(x) for x in v]
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if hasattr(v, "to_json"):
        return _jsonable(v.to_json())
    try:
        return jnum(float(v))
    except (TypeError, ValueError):
        return str(v)
