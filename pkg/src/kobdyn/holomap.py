"""Holomorphic self-maps as small expression trees.

Every map evaluates batches of points (..., d), in double or high precision,
and knows its complex Jacobian.  Automorphisms carry closed-form inverses;
other maps fall back to damped Newton for preimages.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import _arith as ar
from . import geometry as geo
from .errors import ConfigError, NoPreimageError, SelfMapViolation

# ---------------------------------------------------------------------------
# preimages


@dataclass(frozen=True)
class NewtonConfig:
    tol: float = 1e-12
    max_iter: int = 60
    halvings: int = 30
    n_random: int = 8
    seed: int = 0
    seeds: tuple = ()
    dedup: float = 1e-8


@dataclass
class PreimageSet:
    solutions: list  # [(point, residual)]
    method: str

    @property
    def points(self):
        return [s for s, _ in self.solutions]

    def __len__(self):
        return len(self.solutions)


def _residual(f, w, z):
    r = ar.abs2(f.eval(w) - z)
    return float(ar.sqrt(r))


def _dedup(cands, eps):
    out = []
    for w, r in sorted(cands, key=lambda c: c[1]):
        if all(float(ar.sqrt(ar.abs2(w - v))) > eps for v, _ in out):
            out.append((w, r))
    return out


def newton_preimages(f, z, cfg=None):
    """All preimages of z reachable by damped Newton from a spread of seeds."""
    cfg = cfg or NewtonConfig()
    D = f.domain
    hp = ar.is_hp(z)
    zf = ar.to_float(z)
    rng = np.random.default_rng(cfg.seed)
    seeds = [zf.copy()]
    for s in cfg.seeds:
        s = np.asarray(s, dtype=complex)
        seeds.append(zf + 0.5 * (s - zf))
        seeds.append(zf + 0.9 * (s - zf))
    d = D.dim
    for _ in range(cfg.n_random):
        g = rng.normal(size=2 * d)
        g = g / np.linalg.norm(g) * rng.uniform() ** (1 / (2 * d))
        v = g[:d] + 1j * g[d:]
        seeds.append(D.from_ball(v) if D.closed_form else D.center + 0.5 * v)
    found = []
    for w in seeds:
        w = _newton(f, w, zf, cfg)
        if w is None:
            continue
        if hp:
            w = _newton_hp(f, ar.to_hp(w), z, cfg)
        if not D.contains(w if D.closed_form else ar.to_float(w)):
            continue
        r = _residual(f, w, z)
        if r <= max(cfg.tol, 1e-12) * 10:
            found.append((w, r))
    return PreimageSet(_dedup(found, cfg.dedup), "newton")


def _newton(f, w, z, cfg):
    D = f.domain
    w = np.asarray(w, dtype=complex)
    if not D.contains(w):
        return None
    res = np.linalg.norm(f.eval(w) - z)
    for _ in range(cfg.max_iter):
        if res <= cfg.tol:
            return w
        J = f.jacobian(w)
        try:
            step = np.linalg.solve(J, f.eval(w) - z)
        except np.linalg.LinAlgError:
            return None
        lam = 1.0
        for _ in range(cfg.halvings):
            cand = w - lam * step
            if D.contains(cand):
                r = np.linalg.norm(f.eval(cand) - z)
                if r < res:
                    w, res = cand, r
                    break
            lam /= 2
        else:
            return w if res <= cfg.tol * 10 else None
    return w if res <= cfg.tol * 10 else None


def _newton_hp(f, w, z, cfg, iters=8):
    """Polish a double-precision root in high precision."""
    for _ in range(iters):
        r = f.eval(w) - z
        if float(ar.sqrt(ar.abs2(r))) < 1e-40:
            break
        J = f.jacobian(ar.to_float(w))
        w = w - ar.to_hp(np.linalg.solve(J, np.eye(len(w)))) @ r
    return w


# ---------------------------------------------------------------------------
# base class


class HolMap:
    """Base class; subclasses define ``_eval`` and ``_jac`` on batches."""

    domain: geo.Domain
    supports_hp = True

    def eval(self, z):
        z = _as_batch(z)
        return self._eval(z)

    __call__ = eval

    def jacobian(self, z):
        z = ar.to_float(_as_batch(z))
        return self._jac(z)

    def inverse(self):
        """Closed-form inverse map, or None."""
        return None

    @property
    def is_automorphism(self):
        return self.inverse() is not None

    def preimages(self, z, cfg=None):
        z = geo.as_point(z, self.domain)
        inv = self.inverse()
        if inv is not None:
            w = inv.eval(z)
            return PreimageSet([(w, _residual(self, w, z))], "closed_form")
        return newton_preimages(self, z, cfg)

    def to_spec(self):
        raise NotImplementedError

    def _jac(self, z):
        return finite_difference_jacobian(self._eval, z)


def _as_batch(z):
    if ar.is_hp(z):
        return np.asarray(z, dtype=object)
    z = np.asarray(z)
    if z.ndim == 0:
        z = z[None]
    return z.astype(complex)


def finite_difference_jacobian(fn, z, h=1e-6):
    """Central differences for a holomorphic map (complex step along each axis)."""
    z = np.asarray(z, dtype=complex)
    d = z.shape[-1]
    cols = []
    for j in range(d):
        e = np.zeros(d, dtype=complex)
        e[j] = h
        cols.append((fn(z + e) - fn(z - e)) / (2 * h))
    return np.stack(cols, axis=-1)


def _hp_sqrt1m(a, like):
    if ar.is_hp(like):
        return ar.HP.sqrt(1 - ar.HP.mpf(a) ** 2)
    return np.sqrt(1 - a * a)


# ---------------------------------------------------------------------------
# primitives


@dataclass(frozen=True, eq=False)
class DiskMobius(HolMap):
    """z -> (z + a)/(1 + a z), a real in (-1, 1)."""

    a: float
    domain: geo.Domain = field(default_factory=geo.unit_disk)

    def __post_init__(self):
        if not -1 < self.a < 1:
            raise ValueError("disk_mobius parameter must lie in (-1, 1)")
        object.__setattr__(self, "a", float(self.a))

    def _eval(self, z):
        return (z + self.a) / (1 + self.a * z)

    def _jac(self, z):
        return ((1 - self.a ** 2) / (1 + self.a * z) ** 2)[..., None]

    def inverse(self):
        return DiskMobius(-self.a)

    def to_spec(self):
        return {"type": "disk_mobius", "a": self.a}


@dataclass(frozen=True, eq=False)
class DiskBlaschkeQuad(HolMap):
    """z -> z (z + a)/(1 + a z); fixes 0 with multiplier a and has boundary fixed point 1."""

    a: float
    domain: geo.Domain = field(default_factory=geo.unit_disk)

    def __post_init__(self):
        if not 0 < self.a < 1:
            raise ValueError("disk_blaschke_quad parameter must lie in (0, 1)")
        object.__setattr__(self, "a", float(self.a))

    def _eval(self, z):
        return z * (z + self.a) / (1 + self.a * z)

    def _jac(self, z):
        a = self.a
        return ((a * z * z + 2 * z + a) / (1 + a * z) ** 2)[..., None]

    def preimages(self, z, cfg=None):
        z = geo.as_point(z, self.domain)
        a = self.a
        # w^2 + (a - a z) w - z = 0
        b = a - a * z[0]
        disc = b * b + 4 * z[0]
        if ar.is_hp(z):
            r = ar.HP.sqrt(disc)
        else:
            r = np.sqrt(complex(disc))
        sols = []
        for w in ((-b + r) / 2, (-b - r) / 2):
            w = np.array([w], dtype=z.dtype)
            if ar.abs2(w) < 1:
                sols.append((w, _residual(self, w, z)))
        return PreimageSet(_dedup(sols, 1e-8 if cfg is None else cfg.dedup), "closed_form")

    def to_spec(self):
        return {"type": "disk_blaschke_quad", "a": self.a}


@dataclass(frozen=True, eq=False)
class DiskParabolic(HolMap):
    """Parabolic automorphism C^-1(C(z) + shift) with C(z) = i(1+z)/(1-z); fixes 1."""

    shift: float = 1.0
    domain: geo.Domain = field(default_factory=geo.unit_disk)

    def _eval(self, z):
        t = self.shift
        return (t + (2j - t) * z) / ((2j + t) - t * z)

    def _jac(self, z):
        t = self.shift
        return (-4 / ((2j + t) - t * z) ** 2)[..., None]

    def inverse(self):
        return DiskParabolic(-self.shift)

    def to_spec(self):
        out = {"type": "disk_parabolic"}
        if self.shift != 1.0:
            out["shift"] = self.shift
        return out


@dataclass(frozen=True, eq=False)
class BallMobiusAxis(HolMap):
    """(z1, z') -> ((z1 + a)/(1 + a z1), sqrt(1-a^2) z'/(1 + a z1)) on the unit ball of C^d."""

    a: float
    d: int = 2
    domain: Optional[geo.Domain] = None

    def __post_init__(self):
        if not -1 < self.a < 1:
            raise ValueError("ball_mobius_axis parameter must lie in (-1, 1)")
        object.__setattr__(self, "a", float(self.a))
        if self.domain is None:
            object.__setattr__(self, "domain", geo.unit_ball(self.d))

    def _eval(self, z):
        a = self.a
        den = 1 + a * z[..., :1]
        first = (z[..., :1] + a) / den
        rest = _hp_sqrt1m(a, z) * z[..., 1:] / den
        return np.concatenate([first, rest], axis=-1)

    def _jac(self, z):
        a = self.a
        s = np.sqrt(1 - a * a)
        den = 1 + a * z[..., 0]
        J = np.zeros(z.shape + (z.shape[-1],), dtype=complex)
        J[..., 0, 0] = (1 - a * a) / den ** 2
        for j in range(1, z.shape[-1]):
            J[..., j, j] = s / den
            J[..., j, 0] = -a * s * z[..., j] / den ** 2
        return J

    def inverse(self):
        return BallMobiusAxis(-self.a, self.d, self.domain)

    def to_spec(self):
        return {"type": "ball_mobius_axis", "a": self.a, "d": self.d}


@dataclass(frozen=True, eq=False)
class Unitary(HolMap):
    """z -> U z for a unitary matrix U."""

    U: np.ndarray
    domain: Optional[geo.Domain] = None

    def __post_init__(self):
        U = np.atleast_2d(np.asarray(self.U, dtype=complex))
        if not np.allclose(U.conj().T @ U, np.eye(U.shape[0]), atol=1e-12):
            raise ValueError("matrix is not unitary")
        object.__setattr__(self, "U", U)
        if self.domain is None:
            object.__setattr__(self, "domain", geo.unit_ball(U.shape[0]))

    def _eval(self, z):
        if ar.is_hp(z):
            return z @ ar.to_hp(self.U.T)
        return z @ self.U.T

    def _jac(self, z):
        return np.broadcast_to(self.U, z.shape + (z.shape[-1],)).copy()

    def inverse(self):
        return Unitary(self.U.conj().T, self.domain)

    def to_spec(self):
        return {"type": "unitary", "matrix": _cmat_json(self.U)}


@dataclass(frozen=True, eq=False)
class Scale(HolMap):
    """z -> lam z with |lam| < 1 (a self-map of any balanced convex domain)."""

    lam: complex
    domain: geo.Domain = field(default_factory=geo.unit_disk)

    def __post_init__(self):
        if not abs(self.lam) < 1:
            raise ValueError("scale factor must satisfy |lam| < 1")
        lam = complex(self.lam)
        object.__setattr__(self, "lam", lam.real if lam.imag == 0 else lam)

    def _eval(self, z):
        return self.lam * z

    def _jac(self, z):
        return self.lam * np.broadcast_to(np.eye(z.shape[-1]), z.shape + (z.shape[-1],)).astype(complex)

    def preimages(self, z, cfg=None):
        z = geo.as_point(z, self.domain)
        w = z / self.lam
        if not self.domain.contains(w):
            return PreimageSet([], "closed_form")
        return PreimageSet([(w, _residual(self, w, z))], "closed_form")

    def to_spec(self):
        return {"type": "scale", "lam": _cjson(self.lam)}


@dataclass(frozen=True, eq=False)
class Compose(HolMap):
    """maps[0] first, then maps[1], ...; the empty composition is the identity."""

    maps: tuple
    domain: Optional[geo.Domain] = None

    def __post_init__(self):
        object.__setattr__(self, "maps", tuple(self.maps))
        if self.domain is None:
            if not self.maps:
                raise ValueError("an empty composition needs an explicit domain")
            object.__setattr__(self, "domain", self.maps[0].domain)
        for m in self.maps:
            if m.domain.dim != self.domain.dim:
                raise ValueError("composed maps act on different dimensions")

    @property
    def supports_hp(self):
        return all(m.supports_hp for m in self.maps)

    def _eval(self, z):
        for m in self.maps:
            z = m._eval(z)
        return z

    def _jac(self, z):
        J = np.broadcast_to(np.eye(z.shape[-1], dtype=complex), z.shape + (z.shape[-1],))
        for m in self.maps:
            J = m._jac(z) @ J
            z = m._eval(z)
        return J

    def inverse(self):
        invs = [m.inverse() for m in self.maps]
        if any(i is None for i in invs):
            return None
        return Compose(tuple(reversed(invs)), self.domain)

    def preimages(self, z, cfg=None):
        z = geo.as_point(z, self.domain)
        if not self.maps:
            return PreimageSet([(z, 0.0)], "closed_form")
        inv = self.inverse()
        if inv is not None:
            return super().preimages(z, cfg)
        # peel the maps from the outside in, branching over every preimage
        layer = [z]
        method = "closed_form"
        for m in reversed(self.maps):
            nxt = []
            for v in layer:
                ps = m.preimages(v, cfg)
                if ps.method == "newton":
                    method = "newton"
                nxt.extend(ps.points)
            layer = nxt
        sols = [(w, _residual(self, w, z)) for w in layer if self.domain.contains(w)]
        return PreimageSet(_dedup(sols, (cfg or NewtonConfig()).dedup), method)

    def to_spec(self):
        return {"type": "compose", "maps": [m.to_spec() for m in self.maps]}


def identity(domain):
    return Compose((), domain)


@dataclass(frozen=True, eq=False)
class UserAnalytic(HolMap):
    """Map given by an evaluation oracle; Jacobian by finite differences, preimages by Newton.

    The oracle must accept batches (..., d).  Outputs leaving the domain raise
    :class:`SelfMapViolation`.
    """

    fn: Callable
    domain: geo.Domain
    jac_fn: Optional[Callable] = None
    name: str = "user"
    supports_hp = False

    def _eval(self, z):
        out = np.asarray(self.fn(z))
        if not ar.is_hp(out):
            bad = self.domain.rho(out) >= 0
            if np.any(bad):
                raise SelfMapViolation("map %s leaves the domain" % self.name)
        return out

    def _jac(self, z):
        if self.jac_fn is not None:
            return np.asarray(self.jac_fn(z), dtype=complex)
        return finite_difference_jacobian(self.fn, z)

    def to_spec(self):
        return {"type": "user", "name": self.name}


# ---------------------------------------------------------------------------
# JSON schema


def _cjson(c):
    c = complex(c)
    return c.real if c.imag == 0 else [c.real, c.imag]


def _cmat_json(M):
    return [[_cjson(v) for v in row] for row in M]


def parse_complex(v, path="value"):
    """A JSON complex number: a real number or a [re, im] pair."""
    if isinstance(v, bool):
        raise ConfigError("expected a number", path)
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(
            isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
        return complex(v[0], v[1])
    raise ConfigError("expected a number or [re, im] pair", path)


def parse_point(v, dim, path="point"):
    if not isinstance(v, list):
        v = [v]
    if len(v) != dim:
        raise ConfigError("expected %d coordinates" % dim, path)
    return np.array([parse_complex(x, "%s/%d" % (path, i)) for i, x in enumerate(v)])


def _real(spec, key, path, lo=None, hi=None):
    if key not in spec:
        raise ConfigError("missing field", "%s/%s" % (path, key))
    v = spec[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError("expected a real number", "%s/%s" % (path, key))
    if (lo is not None and not v > lo) or (hi is not None and not v < hi):
        raise ConfigError("must lie in (%s, %s)" % (lo, hi), "%s/%s" % (path, key))
    return float(v)


def map_from_spec(spec, domain, path="/map"):
    """Build a map from its JSON description on the given domain."""
    if not isinstance(spec, dict) or "type" not in spec:
        raise ConfigError("map must be an object with a 'type'", path)
    t = spec["type"]
    d = domain.dim
    if t in ("disk_mobius", "disk_blaschke_quad", "disk_parabolic") and domain.kind != geo.DISK:
        raise ConfigError("%s requires the disk domain" % t, path + "/type")
    if t == "disk_mobius":
        return DiskMobius(_real(spec, "a", path, -1, 1), domain)
    if t == "disk_blaschke_quad":
        return DiskBlaschkeQuad(_real(spec, "a", path, 0, 1), domain)
    if t == "disk_parabolic":
        shift = _real(spec, "shift", path) if "shift" in spec else 1.0
        return DiskParabolic(shift, domain)
    if t == "ball_mobius_axis":
        a = _real(spec, "a", path, -1, 1)
        md = spec.get("d", d)
        if md != d or domain.kind not in (geo.BALL, geo.DISK):
            raise ConfigError("ball_mobius_axis must match the ball dimension", path + "/d")
        return BallMobiusAxis(a, d, domain)
    if t == "unitary":
        M = spec.get("matrix")
        if not isinstance(M, list) or len(M) != d or any(not isinstance(r, list) or len(r) != d for r in M):
            raise ConfigError("expected a %dx%d matrix" % (d, d), path + "/matrix")
        U = np.array([[parse_complex(x, "%s/matrix/%d/%d" % (path, i, j)) for j, x in enumerate(r)]
                      for i, r in enumerate(M)])
        try:
            return Unitary(U, domain)
        except ValueError as e:
            raise ConfigError(str(e), path + "/matrix")
    if t == "scale":
        if "lam" not in spec:
            raise ConfigError("missing field", path + "/lam")
        lam = parse_complex(spec["lam"], path + "/lam")
        if not abs(lam) < 1:
            raise ConfigError("|lam| must be < 1", path + "/lam")
        return Scale(lam, domain)
    if t == "identity":
        return identity(domain)
    if t == "compose":
        maps = spec.get("maps")
        if not isinstance(maps, list):
            raise ConfigError("expected a list of maps", path + "/maps")
        return Compose(tuple(map_from_spec(m, domain, "%s/maps/%d" % (path, i)) for i, m in enumerate(maps)),
                       domain)
    raise ConfigError("unknown map type %r" % (t,), path + "/type")
