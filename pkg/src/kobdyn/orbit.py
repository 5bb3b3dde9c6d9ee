"""Orbit records and their CSV / JSON serialization."""

import csv
import io
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _arith as ar

CSV_SCHEMA_VERSION = 1

# distances above this are dominated by rounding in double precision
DIST_CAP = 20.0


def fmt(x):
    """Deterministic text for a real number (shortest round-trip repr)."""
    if x is None:
        return ""
    x = float(x)
    if np.isnan(x):
        return "nan"
    if np.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def jnum(x):
    """JSON-safe real: non-finite values become strings."""
    if x is None:
        return None
    x = float(x)
    if np.isfinite(x):
        return x
    return "nan" if np.isnan(x) else ("inf" if x > 0 else "-inf")


def jpoint(z):
    return [[jnum(c.real), jnum(c.imag)] for c in np.asarray(ar.to_float(z)).ravel()]


@dataclass
class OrbitRecord:
    """A finite forward or backward orbit with per-step data.

    ``points`` keeps the exact representation used during the computation
    (complex or high precision); ``steps[n]`` is k(z_{n+1}, z_n) and
    ``residuals[n]`` is |f(z_{n+1}) - z_n| (backward) or 0 (forward).
    Diagnostic sequences have one entry per point.
    """

    points: list
    steps: np.ndarray
    residuals: np.ndarray
    direction: str
    t: Optional[np.ndarray] = None
    s: Optional[np.ndarray] = None
    gauge: Optional[np.ndarray] = None
    limit: Optional[np.ndarray] = None
    converged: bool = False
    failed: bool = False
    flags: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.points)

    @property
    def n(self):
        return len(self.points) - 1

    @property
    def dim(self):
        return len(self.points[0])

    def array(self):
        """Points as an (n+1, d) complex array."""
        return np.array([ar.to_float(z) for z in self.points])

    @property
    def step_sup(self):
        return float(np.max(self.steps)) if len(self.steps) else 0.0

    @property
    def a_hat(self):
        return float(np.tanh(self.step_sup))

    def to_csv(self):
        d = self.dim
        cols = ["n"]
        for i in range(d):
            cols += ["re_z%d" % (i + 1), "im_z%d" % (i + 1)]
        cols += ["step", "residual", "t_n", "s_n", "gauge"]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(cols)
        Z = self.array()
        for n in range(len(Z)):
            row = [str(n)]
            for c in Z[n]:
                row += [fmt(c.real), fmt(c.imag)]
            row.append(fmt(self.steps[n - 1]) if n > 0 else "")
            row.append(fmt(self.residuals[n - 1]) if n > 0 else "")
            for seq in (self.t, self.s, self.gauge):
                row.append(fmt(seq[n]) if seq is not None else "")
            w.writerow(row)
        return buf.getvalue()

    def to_json(self):
        def seq(x):
            return None if x is None else [jnum(v) for v in x]

        return {
            "direction": self.direction,
            "n": self.n,
            "points": [jpoint(z) for z in self.points],
            "steps": seq(self.steps),
            "residuals": seq(self.residuals),
            "t_n": seq(self.t),
            "s_n": seq(self.s),
            "gauge": seq(self.gauge),
            "step_sup": jnum(self.step_sup),
            "a_hat": jnum(self.a_hat),
            "limit": None if self.limit is None else jpoint(self.limit),
            "converged": self.converged,
            "failed": self.failed,
            "flags": list(self.flags),
        }
