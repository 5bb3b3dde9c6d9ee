"""Forward dynamics: iteration, Wolff points, dilation coefficients, classification."""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from . import _arith as ar
from . import geometry as geo
from .errors import (ClassificationError, ContradictionError, DomainError,
                     EstimationError, UnsupportedOperation)
from .orbit import DIST_CAP, OrbitRecord
from .report import Report

log = logging.getLogger(__name__)

STRONGLY_ELLIPTIC = "strongly_elliptic"
ELLIPTIC_NON_STRONG = "elliptic_non_strong"
HYPERBOLIC = "hyperbolic"
PARABOLIC = "parabolic"


def safe_distance(D, z, w, cap=DIST_CAP):
    """k_D(z, w), capped when double precision can no longer resolve it.

    Returns (value, capped).  High-precision points are never capped.
    """
    try:
        k = geo.distance(D, z, w)
    except DomainError:
        if ar.is_hp(z) or ar.is_hp(w):
            raise
        return cap, True
    if not (ar.is_hp(z) or ar.is_hp(w)) and not (np.isfinite(k) and k <= cap):
        return cap, True
    return k, False


# ---------------------------------------------------------------------------
# forward orbits


def iterate_forward(f, z0, n):
    """Forward orbit z_0, f(z_0), ..., f^n(z_0) with per-step Kobayashi distances."""
    D = f.domain
    z = geo.as_point(z0, D)
    geo._require_inside(D, z)
    pts = [z]
    steps = np.zeros(n)
    flags = []
    for m in range(n):
        w = f.eval(pts[-1])
        pts.append(w)
        steps[m], capped = safe_distance(D, w, pts[-2])
        if capped and "distance_cap" not in flags:
            flags.append("distance_cap")
    return OrbitRecord(pts, steps, np.zeros(n), "forward", flags=flags)


# ---------------------------------------------------------------------------
# dilation coefficient


@dataclass(frozen=True)
class DilationConfig:
    k_min: int = 4
    k_max: int = 16
    tol: float = 1e-4
    div_slope: float = 0.1


@dataclass
class DilationEstimate:
    value: float
    pole: np.ndarray
    error_bar: float
    samples: list
    diverges: bool = False

    @property
    def log_half(self):
        """1/2 log beta, the limit of the bracket."""
        return 0.5 * np.log(self.value)

    def to_json(self):
        return {"value": self.value, "error_bar": self.error_bar, "diverges": self.diverges,
                "pole": np.asarray(self.pole), "samples": [list(s) for s in self.samples]}


def dilation_coefficient(f, sigma, p=None, cfg=None):
    """beta_{sigma,p} from the radial limit of k(p, phi(t)) - k(p, f(phi(t))).

    phi is the complex geodesic from p to sigma; the bracket is sampled at
    t = 1 - 2^-k and Richardson-extrapolated.  A bracket growing without bound
    gives ``value = inf`` with ``diverges = True``.
    """
    cfg = cfg or DilationConfig()
    D = f.domain
    p = D.center if p is None else geo.as_point(p, D)
    geod = geo.geodesic_through(D, p, sigma)
    ks = np.arange(cfg.k_min, cfg.k_max + 1)
    ts = 1 - 2.0 ** -ks
    pts = geod.eval(ts)
    fpts = f.eval(pts)
    samples = []
    for t, z, fz in zip(ts, pts, fpts):
        try:
            b = float(geo.distance(D, p, z) - geo.distance(D, p, fz))
        except DomainError:
            break
        if not np.isfinite(b):
            break
        samples.append((float(t), b))
    if len(samples) < 4:
        raise EstimationError("too few usable bracket samples", partial={"samples": samples})
    b = np.array([s[1] for s in samples])
    diffs = np.diff(b)
    if np.all(diffs[-4:] > cfg.div_slope):
        return DilationEstimate(np.inf, p, 0.0, samples, diverges=True)
    # each bracket loses ~eps/(1-t) to cancellation in 1-|z|^2
    noise = 8 * np.finfo(float).eps / (1 - np.array([s[0] for s in samples]))
    limit, err = geo.richardson(b, ratio=2.0, noise=noise)
    err = max(err, 1e-13)
    if err > cfg.tol or np.all(diffs[-4:] < -cfg.div_slope):
        raise EstimationError("bracket does not settle (error %.3g)" % err,
                              partial={"samples": samples, "estimate": limit, "error": err})
    beta = float(np.exp(2 * limit))
    return DilationEstimate(beta, p, 2 * beta * err, samples)


# ---------------------------------------------------------------------------
# boundary fixed points


@dataclass(frozen=True)
class FixedPointConfig:
    log_m: tuple = (1.0, 2.0, 4.0)
    fill: float = 0.9
    s_exponents: tuple = tuple(range(4, 14))
    tol: float = 1e-6


def _approach_curves(D, sigma, cfg):
    """Curves s -> z(s) ending at sigma inside K-regions of the centre.

    In the ball chart z(s) = sigma (1 - s e^{i psi}) + sqrt(s) c u with u
    orthogonal to sigma; its K-region gauge tends to -log(cos psi - c^2/2).
    """
    sb = D.to_ball(ar.to_float(geo.as_point(sigma, D)))
    sb = sb / np.linalg.norm(sb)
    d = D.dim
    u = geo._frame(sb)[:, 1] if d > 1 else None
    curves = [(0.0, 0.0)]
    for lm in cfg.log_m:
        g = cfg.fill * lm
        psi = np.arccos(np.exp(-g))
        if d == 1:
            curves += [(psi, 0.0), (-psi, 0.0)]
        else:
            c = np.sqrt(2 * (np.cos(psi / 2) - np.exp(-g)))
            curves += [(psi, 0.0), (psi / 2, c), (-psi / 2, 1j * c)]
    s = 10.0 ** -np.asarray(cfg.s_exponents, dtype=float)
    out = []
    for psi, c in curves:
        z = sb[None, :] * (1 - s * np.exp(1j * psi))[:, None]
        if u is not None:
            z = z + np.sqrt(s)[:, None] * c * u[None, :]
        out.append(((psi, c), D.from_ball(z)))
    return s, out


def is_boundary_fixed_point(f, sigma, cfg=None, p=None):
    """Finite-fan test of the K-limit f -> sigma at sigma; returns (verdict, dilation estimate)."""
    cfg = cfg or FixedPointConfig()
    D = f.domain
    if not D.closed_form:
        raise UnsupportedOperation("boundary fixed point test needs a ball chart")
    sigma = ar.to_float(geo.as_point(sigma, D))
    s, curves = _approach_curves(D, sigma, cfg)
    basis = np.c_[np.ones_like(s), np.sqrt(s), s]
    worst = 0.0
    limits = []
    for params, z in curves:
        fz = f.eval(z)
        coef, *_ = np.linalg.lstsq(basis, fz - sigma[None, :], rcond=None)
        lim = coef[0] + sigma
        err = float(np.linalg.norm(lim - sigma))
        limits.append((params, lim, err))
        worst = max(worst, err)
    fixed = worst <= cfg.tol
    try:
        est = dilation_coefficient(f, sigma, p)
    except EstimationError:
        est = None
    return fixed, est


def _chart(D, xi):
    """Local chart of the sphere (ball chart) around xi: R^{2d} -> boundary points."""
    xb = D.to_ball(xi)
    xb = xb / np.linalg.norm(xb)
    d = D.dim

    def point(x, r=1.0):
        v = xb + x[:d] + 1j * x[d:]
        return D.from_ball(r * v / np.linalg.norm(v))

    return point


def refine_boundary_fixed_point(f, xi, r=1 - 1e-12):
    """Locally minimize |f(r xi) - r xi| over boundary points xi near the candidate."""
    D = f.domain
    point = _chart(D, xi)
    n = 2 * D.dim
    scale = 1 - r

    def g(x):
        z = point(x, r)
        return float(np.linalg.norm(f.eval(z) - z)) / scale

    res = minimize(g, np.zeros(n), method="Nelder-Mead",
                   options={"xatol": 1e-13, "fatol": 1e-14, "initial_simplex": _simplex(n, 1e-6),
                            "maxiter": 4000})
    best = point(res.x) if res.fun <= g(np.zeros(n)) else point(np.zeros(n))
    return best


def _simplex(n, h):
    return np.vstack([np.zeros(n), h * np.eye(n)])


def find_boundary_fixed_points(f, samples=20000, seed=0, extra=(), tol=1e-6):
    """Catalogue boundary fixed points by a seeded boundary scan plus local refinement.

    Returns a list of (point, DilationEstimate) sorted by the dilation value.
    Heuristic: fixed points missed by the scan are not reported.
    """
    D = f.domain
    if not D.closed_form:
        raise UnsupportedOperation("boundary scans need a ball chart")
    d = D.dim
    r = 1 - 1e-8
    if d == 1:
        xi = np.exp(2j * np.pi * np.arange(min(samples, 4096)) / min(samples, 4096))[:, None]
    else:
        rng = np.random.default_rng(seed)
        g = rng.normal(size=(samples, 2 * d))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        xi = g[:, :d] + 1j * g[:, d:]
    xi = D.from_ball(xi)
    gvals = np.linalg.norm(f.eval(r * xi) - r * xi, axis=1)
    order = np.argsort(gvals)[:24]
    cands = [xi[i] for i in order] + [ar.to_float(geo.as_point(e, D)) for e in extra]
    found = []
    for c in cands:
        xi_r = refine_boundary_fixed_point(f, c, r=1 - 1e-8)
        if any(np.linalg.norm(xi_r - q) < 1e-5 for q, _ in found):
            continue
        try:
            ok, est = is_boundary_fixed_point(f, xi_r, FixedPointConfig(tol=tol))
        except EstimationError:
            continue
        if ok and est is not None:
            found.append((xi_r, est))
    found.sort(key=lambda e: e[1].value)
    return found


# ---------------------------------------------------------------------------
# classification


@dataclass(frozen=True)
class ClassifyConfig:
    probes: Optional[tuple] = None
    max_iter: int = 200000
    boundary_tol: float = 1e-6
    step_tol: float = 1e-9
    margin: float = 1e-3
    newton_tol: float = 1e-12
    check_every: int = 64
    seed: int = 0


@dataclass
class Classification:
    kind: str
    point: Optional[np.ndarray] = None
    beta: Optional[float] = None
    beta_err: Optional[float] = None
    spectral_radius: Optional[float] = None
    evidence: dict = field(default_factory=dict)

    @property
    def wolff(self):
        return self.point

    @property
    def boundary_wolff(self):
        return self.kind in (HYPERBOLIC, PARABOLIC)

    def to_json(self):
        return {"kind": self.kind, "point": self.point, "beta": self.beta, "beta_err": self.beta_err,
                "spectral_radius": self.spectral_radius, "evidence": self.evidence}


def _default_probes(D, seed):
    rng = np.random.default_rng(seed)
    d = D.dim
    pts = [D.center]
    for _ in range(4):
        g = rng.normal(size=2 * d)
        g = 0.5 * g / np.linalg.norm(g)
        v = g[:d] + 1j * g[d:]
        pts.append(D.from_ball(v) if D.closed_form else D.center + 0.5 * geo.boundary_dist(D, D.center) * v)
    return pts


def interior_fixed_point(f, seeds, tol=1e-12, max_iter=100):
    """Damped Newton on f(z) - z from each seed; first interior root found (or None)."""
    D = f.domain
    I = np.eye(D.dim)
    for z in seeds:
        z = np.asarray(z, dtype=complex)
        res = np.linalg.norm(f.eval(z) - z)
        for _ in range(max_iter):
            if res <= tol:
                break
            F = f.eval(z) - z
            J = f.jacobian(z) - I
            step = np.linalg.lstsq(J, F, rcond=None)[0]
            lam = 1.0
            for _ in range(30):
                cand = z - lam * step
                if D.contains(cand) and geo.boundary_dist(D, cand) > 1e-9:
                    r = np.linalg.norm(f.eval(cand) - cand)
                    if r < res:
                        z, res = cand, r
                        break
                lam /= 2
            else:
                break
        if res > tol or geo.boundary_dist(D, z) < 1e-4:
            continue
        # a parabolic boundary point attracts Newton too; there J - I degenerates
        smin = np.linalg.svd(f.jacobian(z) - I, compute_uv=False).min()
        if res == 0 or smin > 1e-6:
            return z, float(res)
    return None, None


def _forward_limit(f, probes, cfg):
    """Batch-iterate probes; returns (limit estimate, iterations, converged, tail stats)."""
    D = f.domain
    Z = np.array(probes, dtype=complex)
    snaps = {0: Z.copy()}
    n = 0
    while n < cfg.max_iter:
        for _ in range(cfg.check_every):
            prev = Z
            Z = f.eval(Z)
        n += cfg.check_every
        snaps[n] = Z.copy()
        bd = np.array([geo.boundary_dist(D, z) for z in Z])
        st = np.linalg.norm(Z - prev, axis=1)
        if np.all(bd < cfg.boundary_tol) and np.all(st < cfg.step_tol):
            half = snaps[cfg.check_every * max(1, round(n / 2 / cfg.check_every))]
            est = 2 * Z - half
            return est, n, True, {"boundary_dist": float(bd.max()), "last_increment": float(st.max())}
    bd = np.array([geo.boundary_dist(D, z) for z in Z])
    return Z, n, False, {"boundary_dist": float(bd.min()), "last_increment": float(np.linalg.norm(Z - prev, axis=1).max())}


def classify(f, cfg=None):
    """Classify f as strongly elliptic, elliptic (not strongly), hyperbolic or parabolic."""
    cfg = cfg or ClassifyConfig()
    D = f.domain
    probes = list(cfg.probes) if cfg.probes is not None else _default_probes(D, cfg.seed)
    probes = [ar.to_float(geo.as_point(q, D)) for q in probes]

    # interior fixed point: seeds are probes and short forward runs from them
    seeds = list(probes)
    Z = np.array(probes)
    for _ in range(200):
        Z = f.eval(Z)
    seeds += [z for z in Z if D.contains(z) and geo.boundary_dist(D, z) > 1e-6]
    p, res = interior_fixed_point(f, seeds, cfg.newton_tol)
    if p is not None:
        rho = float(np.max(np.abs(np.linalg.eigvals(f.jacobian(p)))))
        ev = {"newton_residual": res}
        if rho < 1 - 1e-9:
            return Classification(STRONGLY_ELLIPTIC, p, spectral_radius=rho, evidence=ev)
        return Classification(ELLIPTIC_NON_STRONG, p, spectral_radius=rho, evidence=ev)

    est, n, ok, stats = _forward_limit(f, probes, cfg)
    if not ok:
        if stats["boundary_dist"] > 1e-3:
            return Classification(ELLIPTIC_NON_STRONG, evidence=dict(stats, iterations=n))
        raise ClassificationError("forward orbits did not settle within %d iterations" % n)
    lims = [geo.project_to_boundary(D, e) for e in est]
    spread = max(float(np.linalg.norm(l - lims[0])) for l in lims)
    if spread > 1e-4:
        raise ClassificationError("probe orbits approach different boundary points (spread %.3g)" % spread)
    tau = refine_boundary_fixed_point(f, lims[0])
    beta = dilation_coefficient(f, tau)
    ev = dict(stats, iterations=n, orbit_limit=lims[0], probe_spread=spread)
    if beta.value < 1 - cfg.margin:
        kind = HYPERBOLIC
    elif abs(beta.value - 1) <= cfg.margin:
        kind = PARABOLIC
    else:
        raise ClassificationError("forward limit has dilation %.6g > 1" % beta.value)
    return Classification(kind, tau, beta.value, beta.error_bar, evidence=ev)


def wolff_point(f, cfg=None):
    c = classify(f, cfg)
    if c.kind == ELLIPTIC_NON_STRONG:
        raise ClassificationError("elliptic map without attracting fixed point has no Wolff point")
    return c.point


# ---------------------------------------------------------------------------
# checks


def julia_check(f, sigma, tau, p=None, trials=1000, seed=0, radii=(0.25, 1.0, 4.0), beta=None, rel=1e-9):
    """Sampled Julia inclusion f(E_p(sigma, R)) in E_p(tau, beta_{sigma,p} R)."""
    D = f.domain
    p = D.center if p is None else geo.as_point(p, D)
    if beta is None:
        est = dilation_coefficient(f, sigma, p)
        beta, berr = est.value, est.error_bar
    else:
        berr = 0.0
    rep = Report("julia_check", data={"beta": beta, "beta_err": berr})
    rng = np.random.default_rng(seed)
    overall = 0.0
    for R in radii:
        z = geo.sample_horosphere(D, sigma, p, R, trials, rng)
        hs = geo.horofunction(D, sigma, p, z)
        ht = geo.horofunction(D, tau, p, f.eval(z))
        ratio = ht / hs
        i = int(np.argmax(ratio))
        overall = max(overall, float(ratio[i]))
        bound = (beta + berr) * (1 + rel)
        rep.add("julia_R=%g" % R, ratio[i] <= bound, float(ratio[i]), bound, rel,
                witness={"index": i, "point": z[i]})
    rep.data["max_ratio"] = overall
    return rep


def wolff_consistency(f, cls=None, samples=1000, seed=0, tol=1e-6):
    """Cross-check boundary fixed point, horosphere invariance and orbit limit at the Wolff point."""
    cls = cls or classify(f)
    D = f.domain
    rep = Report("wolff_consistency", data={"classification": cls})
    if not cls.boundary_wolff:
        rep.add("boundary_wolff_point", False, cls.kind, "hyperbolic|parabolic",
                note="map has no boundary Wolff point")
        return rep
    tau = cls.point
    fixed, est = is_boundary_fixed_point(f, tau)
    beta = est.value if est else np.inf
    rep.add("fixed_point", fixed, fixed, True)
    rep.add("beta_le_1", beta <= 1 + 1e-6, beta, 1.0, 1e-6)
    rng = np.random.default_rng(seed)
    worst, wit = 0.0, None
    for R in (0.25, 1.0, 4.0):
        z = geo.sample_horosphere(D, tau, D.center, R, samples, rng)
        r = geo.horofunction(D, tau, D.center, f.eval(z)) / geo.horofunction(D, tau, D.center, z)
        i = int(np.argmax(r))
        if r[i] > worst:
            worst, wit = float(r[i]), z[i]
    rep.add("horosphere_invariance", worst <= 1 + 1e-9, worst, 1.0, 1e-9, witness={"point": wit})
    lim = cls.evidence.get("orbit_limit")
    gap = float(np.linalg.norm(lim - tau)) if lim is not None else np.inf
    rep.add("orbit_limit", gap <= tol, gap, tol, tol)
    return rep


@dataclass
class ContractionEstimate:
    c: float
    sup: float
    witness: np.ndarray
    radius: float


def contraction_constant(f, p, R0, samples=2000, seed=0, radii_factors=(1, 1.25, 1.5, 2, 3, 4, 6, 10)):
    """c = exp(2 sup) with sup of k(f(z), p) - k(z, p) over z with k(z, p) >= R0.

    Sampled on Kobayashi spheres about p followed by local refinement; a
    nonnegative supremum raises :class:`ContradictionError`.
    """
    D = f.domain
    if not D.closed_form:
        raise UnsupportedOperation("contraction sampling needs a ball chart")
    p = ar.to_float(geo.as_point(p, D))
    pb = D.to_ball(p)
    d = D.dim
    rng = np.random.default_rng(seed)

    def pts(R, v):
        r = np.tanh(np.minimum(R, 13.0))
        return D.from_ball(geo.ball_automorphism(pb, r[..., None] * v))

    def gap(z):
        fz = f.eval(z)
        return geo._ball_dist_raw(D.to_ball(fz), pb[None, :]) - geo._ball_dist_raw(D.to_ball(z), pb[None, :])

    if d == 1:
        V = np.exp(2j * np.pi * np.arange(samples) / samples)[:, None]
    else:
        g = rng.normal(size=(samples, 2 * d))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        V = g[:, :d] + 1j * g[:, d:]
    best, bR, bv = -np.inf, None, None
    for fac in radii_factors:
        R = R0 * fac
        vals = gap(pts(np.full(len(V), R), V))
        i = int(np.argmax(vals))
        if vals[i] > best:
            best, bR, bv = float(vals[i]), R, V[i]

    def obj(x):
        R = R0 + x[0] ** 2
        v = bv + x[1:d + 1] + 1j * x[d + 1:]
        v = v / np.linalg.norm(v)
        return -gap(pts(np.array([R]), v[None, :]))[0]

    x0 = np.r_[np.sqrt(bR - R0), np.zeros(2 * d)]
    res = minimize(obj, x0, method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 2000})
    if -res.fun > best:
        best = float(-res.fun)
        R = R0 + res.x[0] ** 2
        v = bv + res.x[1:d + 1] + 1j * res.x[d + 1:]
        bR, bv = R, v / np.linalg.norm(v)
    witness = pts(np.array([bR]), bv[None, :])[0]
    if best >= -1e-12:
        raise ContradictionError("k(f(z),p) - k(z,p) reaches %.3g >= 0" % best, witness=witness)
    return ContractionEstimate(float(np.exp(2 * best)), best, witness, float(bR))
