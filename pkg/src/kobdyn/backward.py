"""Backward orbits with bounded Kobayashi step.

Stepping with a branch-selection policy, the construction of a backward
orbit converging to an isolated repelling boundary fixed point, and the
checks tying backward orbits to boundary dilation coefficients.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _arith as ar
from . import dynamics as dyn
from . import geometry as geo
from .errors import (BoundedStepError, ContradictionError, EstimationError,
                     IsolationViolation, NoPreimageError)
from .holomap import NewtonConfig
from .orbit import DIST_CAP, OrbitRecord
from .report import Report

log = logging.getLogger(__name__)

MIN_STEP = "min_step"
TOWARD = "toward"
NEAREST = "nearest"


# ---------------------------------------------------------------------------
# stepping


def backward_step(f, z, policy=MIN_STEP, a_max=np.inf, target=None, newton=None):
    """One admissible preimage of z; returns (w, step, residual).

    Policies: ``min_step`` picks the preimage with the smallest Kobayashi
    step, ``toward`` the one closest to ``target`` (a boundary point),
    ``nearest`` the one closest to ``target`` used as a candidate point.
    Only preimages with step <= a_max are admissible; ties go to the
    lowest index.
    """
    D = f.domain
    try:
        ps = f.preimages(z, newton)
    except NoPreimageError:
        ps = None
    if ps is None or len(ps) == 0:
        raise BoundedStepError("no preimage of %s in the domain" % ar.to_float(z))
    cands = []
    for w, res in ps.solutions:
        step, capped = dyn.safe_distance(D, w, z)
        if step <= a_max:
            cands.append((w, float(step), res))
    if not cands:
        raise BoundedStepError("every preimage exceeds the step bound %g" % a_max)
    if policy == MIN_STEP:
        key = [c[1] for c in cands]
    elif policy in (TOWARD, NEAREST):
        if target is None:
            raise ValueError("policy %r needs a target" % policy)
        tgt = ar.to_float(np.asarray(target))
        key = [float(np.linalg.norm(ar.to_float(c[0]) - tgt)) for c in cands]
    else:
        raise ValueError("unknown policy %r" % policy)
    return cands[int(np.argmin(key))]


def _limit_estimate(pts):
    """Extrapolated limit of a convergent point sequence and an error estimate.

    Geometric tails get an Aitken-type correction; slowly converging tails
    (increments ratio near 1, as for parabolic maps) are treated as O(1/n)
    and Richardson-extrapolated.
    """
    Z = np.array([ar.to_float(z) for z in pts[-3:]])
    if len(pts) < 3:
        return Z[-1], np.inf
    i1 = np.linalg.norm(Z[2] - Z[1])
    i0 = np.linalg.norm(Z[1] - Z[0])
    q = i1 / i0 if i0 > 0 else 0.0
    if q < 0.95:
        return Z[2] + (Z[2] - Z[1]) * q / (1 - q), i1 * q / (1 - q)
    N = len(pts) - 1
    zN, zh = ar.to_float(pts[N]), ar.to_float(pts[N // 2])
    zq, zq2 = ar.to_float(pts[(3 * N) // 4]), ar.to_float(pts[(3 * N) // 8])
    L1 = 2 * zN - zh
    L2 = 2 * zq - zq2
    return L1, float(np.linalg.norm(L1 - L2))


def annotate(orbit, f, p=None, tau=None, sigma=None):
    """Fill the t_n = h_{tau,p}(z_n), s_n = exp(-2 k(p, z_n)) and gauge sequences."""
    D = f.domain
    p = D.center if p is None else geo.as_point(p, D)
    n = len(orbit.points)
    s = np.empty(n)
    t = np.full(n, np.nan) if tau is not None else None
    g = np.full(n, np.nan) if sigma is not None else None
    capped_any = False
    for i, z in enumerate(orbit.points):
        k, capped = dyn.safe_distance(D, p, z)
        capped_any |= capped
        s[i] = float(ar.exp(-2 * k))
        if not D.closed_form:
            continue
        if tau is not None:
            t[i] = float(geo.horofunction(D, tau, p, z))
        if sigma is not None:
            h = geo.horofunction(D, sigma, p, z)
            g[i] = np.nan if capped else float(ar.log(h) / 2 + k)
    orbit.s, orbit.t, orbit.gauge = s, t, g
    if capped_any and "distance_cap" not in orbit.flags:
        orbit.flags.append("distance_cap")
    return orbit


@dataclass(frozen=True)
class BackwardConfig:
    precision: str = "auto"  # "float", "hp" or "auto"
    hp_switch: float = 1e-7
    limit_tol: float = 1e-6
    increment_tol: float = 1e-8
    newton: NewtonConfig = field(default_factory=NewtonConfig)


def _maybe_hp(f, z, prev_bd, cfg):
    """Switch to high precision when the orbit runs geometrically into the boundary."""
    if ar.is_hp(z) or not f.supports_hp or cfg.precision == "float":
        return z, prev_bd
    if cfg.precision == "hp":
        return ar.to_hp(z), prev_bd
    bd = float(geo.boundary_dist(f.domain, z))
    if bd < cfg.hp_switch and prev_bd is not None and bd < 0.9 * prev_bd:
        return ar.to_hp(z), bd
    return z, bd


def backward_orbit(f, z0, n, a_max=np.inf, policy=MIN_STEP, target=None, p=None, tau=None,
                   sigma=None, cfg=None, start_points=None):
    """Backward orbit z_0, z_1, ... with f(z_{k+1}) = z_k, chosen by ``policy``.

    Diagnostics are filled against the pole p (default the centre), the
    Wolff point ``tau`` (t_n) and the orbit limit (gauges).  On a bounded-step
    failure :class:`BoundedStepError` is raised with the partial orbit.
    """
    cfg = cfg or BackwardConfig()
    D = f.domain
    z = geo.as_point(z0, D)
    geo._require_inside(D, ar.to_float(z))
    pts = list(start_points) if start_points else [z]
    steps, res = [], []
    prev_bd = None
    z = pts[-1]
    for _ in range(n):
        z, prev_bd = _maybe_hp(f, z, prev_bd, cfg)
        try:
            w, st, r = backward_step(f, z, policy, a_max, target, cfg.newton)
        except BoundedStepError as e:
            orb = OrbitRecord(pts, np.array(steps), np.array(res), "backward", failed=True,
                              flags=["bounded_step_failure"])
            e.orbit = _finish(orb, f, p, tau, sigma, cfg)
            raise e
        pts.append(w)
        steps.append(st)
        res.append(r)
        z = w
    orb = OrbitRecord(pts, np.array(steps), np.array(res), "backward")
    return _finish(orb, f, p, tau, sigma, cfg)


def _finish(orb, f, p, tau, sigma, cfg):
    D = f.domain
    if len(orb.points) >= 3:
        zN = orb.points[-1]
        bd = float(geo.boundary_dist(D, zN))
        inc = float(ar.sqrt(ar.abs2(zN - orb.points[-2])))
        est, err = _limit_estimate(orb.points)
        orb.meta.update(final_boundary_dist=bd, final_increment=inc, limit_error=err)
        if bd < cfg.limit_tol and (inc < cfg.increment_tol or err < cfg.increment_tol):
            orb.limit = geo.project_to_boundary(D, est) if D.closed_form else est
            orb.converged = True
        elif bd < cfg.limit_tol:
            orb.limit = geo.project_to_boundary(D, est) if D.closed_form else est
            orb.flags.append("limit_unsettled")
    if any(ar.is_hp(z) for z in orb.points):
        orb.flags.append("high_precision")
    sig = sigma if sigma is not None else orb.limit
    return annotate(orb, f, p, tau, sig)


# ---------------------------------------------------------------------------
# construction at a repelling boundary fixed point


@dataclass
class IsolationWindow:
    """Euclidean ball U about sigma that must not contain other competing boundary fixed points."""

    center: np.ndarray
    radius: float
    beta_cap: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("window radius must be positive")

    def violations(self, catalog, tau=None):
        """Catalogued points (with beta <= beta_cap) or tau inside the closed window."""
        bad = []
        for q, est in catalog:
            if np.linalg.norm(q - self.center) <= 1e-6:
                continue
            if est.value <= self.beta_cap * (1 + 1e-9) and np.linalg.norm(q - self.center) <= self.radius:
                bad.append(q)
        if tau is not None and np.linalg.norm(tau - self.center) <= self.radius:
            bad.append(np.asarray(tau))
        return bad


def default_window(f, sigma, beta, cls=None, catalog=None, fallback=0.5):
    """Half the distance from sigma to the nearest competing boundary fixed point."""
    D = f.domain
    sigma = ar.to_float(geo.as_point(sigma, D))
    if catalog is None:
        extra = [cls.point] if cls is not None and cls.boundary_wolff else []
        catalog = dyn.find_boundary_fixed_points(f, extra=extra)
    dists = [float(np.linalg.norm(q - sigma)) for q, est in catalog
             if np.linalg.norm(q - sigma) > 1e-6 and est.value <= beta * (1 + 1e-9)]
    if cls is not None and cls.boundary_wolff and np.linalg.norm(cls.point - sigma) > 1e-6:
        dists.append(float(np.linalg.norm(cls.point - sigma)))
    radius = min(dists) / 2 if dists else fallback
    return IsolationWindow(sigma, radius, beta), catalog


@dataclass(frozen=True)
class ConstructConfig:
    cluster_eps: float = 1e-4
    k_max: int = 40
    segment_points: int = 65
    slack: float = 0.05
    extend_tol: float = 1e-8
    extend_max: int = 2000
    max_forward: int = 100000
    extent_margin: float = 0.9
    backward: BackwardConfig = field(default_factory=BackwardConfig)


def _exit_chain(f, sigma, radius, r, cfg):
    """Iterate the segment [r, f(r)] until it meets J = {|z - sigma| = radius}.

    Returns the chain (f^n(y), ..., f(y), y) for the first crossing parameter y.
    """
    s = np.linspace(0.0, 1.0, cfg.segment_points)
    fr = f.eval(r)

    def seg(x):
        return r[None, :] + np.asarray(x)[:, None] * (fr - r)[None, :]

    X = seg(s)
    for n in range(cfg.max_forward):
        out = np.linalg.norm(X - sigma[None, :], axis=1) >= radius
        if out.any():
            i = int(np.argmax(out))
            lo, hi = s[i - 1], s[i]
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                x = seg([mid])
                for _ in range(n):
                    x = f.eval(x)
                if np.linalg.norm(x[0] - sigma) >= radius:
                    hi = mid
                else:
                    lo = mid
            y = seg([lo])[0]
            chain = [y]
            for _ in range(n):
                chain.append(f.eval(chain[-1]))
            return chain[::-1], n
        X = f.eval(X)
    raise IsolationViolation("segment orbit never left the window", cluster=None)


def construct_backward_orbit_at(f, sigma, window=None, cfg=None, cls=None, p=None):
    """Backward orbit converging to the repelling boundary fixed point sigma with step near 1/2 log beta.

    Follows the horosphere scheme: points r_k = phi(t_k) on the horospheres
    of level beta^-(n0+k) are pushed forward until the segment [r_k, f(r_k)]
    first meets J = boundary of the window; the chains of preimages are
    clustered until three consecutive k agree, then polished by
    nearest-preimage steps and extended toward sigma.
    """
    cfg = cfg or ConstructConfig()
    D = f.domain
    p = D.center if p is None else ar.to_float(geo.as_point(p, D))
    sigma = ar.to_float(geo.as_point(sigma, D))
    fixed, est = dyn.is_boundary_fixed_point(f, sigma, p=p)
    if not fixed or est is None or not est.value > 1 + 1e-9:
        raise ContradictionError("sigma is not a repelling boundary fixed point",
                                 witness={"fixed": fixed, "beta": None if est is None else est.value})
    beta = est.value
    if cls is not None and cls.boundary_wolff and np.linalg.norm(cls.point - sigma) < 1e-6:
        raise ContradictionError("sigma coincides with the Wolff point", witness=sigma)
    catalog = None
    if window is None:
        window, catalog = default_window(f, sigma, beta, cls)
    radius = window.radius

    n0 = 0
    while geo.horosphere_extent(D, sigma, p, beta ** -n0) > cfg.extent_margin * radius:
        n0 += 1
    geod = geo.geodesic_through(D, p, sigma)

    heads, chain = [], None
    for k in range(cfg.k_max):
        R = beta ** -(n0 + k)
        t = (1 - R) / (1 + R)
        r = geod.eval(t)
        chain, nk = _exit_chain(f, sigma, radius, r, cfg)
        heads.append(chain[0])
        if len(heads) >= 3 and all(np.linalg.norm(heads[-i] - heads[-i - 1]) < cfg.cluster_eps
                                   for i in (1, 2)):
            break
    else:
        H = np.array(heads)
        raise IsolationViolation("chain heads did not stabilize after %d horospheres" % cfg.k_max,
                                 cluster={"heads": H, "boundary_dist": [geo.boundary_dist(D, h) for h in H]})

    a_max = 0.5 * np.log(beta) + cfg.slack
    pts = [chain[0]]
    steps, res = [], []
    for cand in chain[1:]:
        w, st, r_ = backward_step(f, pts[-1], NEAREST, a_max, cand, cfg.backward.newton)
        pts.append(w)
        steps.append(st)
        res.append(r_)
    # continue toward sigma until the orbit is close to it
    z = pts[-1]
    prev_bd = None
    for _ in range(cfg.extend_max):
        if float(ar.sqrt(ar.abs2(ar.to_float(z) - sigma))) < cfg.extend_tol:
            break
        z, prev_bd = _maybe_hp(f, z, prev_bd, cfg.backward)
        w, st, r_ = backward_step(f, z, TOWARD, a_max, sigma, cfg.backward.newton)
        pts.append(w)
        steps.append(st)
        res.append(r_)
        z = w
    orb = OrbitRecord(pts, np.array(steps), np.array(res), "backward")
    orb.meta.update(beta=beta, beta_err=est.error_bar, n0=n0, horospheres=len(heads), window_radius=radius,
                    chain_length=len(chain), heads=[h for h in heads])
    tau = cls.point if cls is not None and cls.boundary_wolff else None
    return _finish(orb, f, p, tau, sigma, cfg.backward)


# ---------------------------------------------------------------------------
# checks


def step_limit_check(f, sigma, p=None, tol=1e-3, exponents=range(2, 9)):
    """k(phi(t), f(phi(t))) along the geodesic into sigma tends to 1/2 |log beta_sigma|."""
    D = f.domain
    p = D.center if p is None else geo.as_point(p, D)
    sigma = ar.to_float(geo.as_point(sigma, D))
    rep = Report("step_limit_check")
    est = dyn.dilation_coefficient(f, sigma, p)
    target = 0.5 * abs(np.log(est.value))
    geod = geo.geodesic_through(D, p, sigma)
    vals = []
    truncated = False
    for k in exponents:
        t = 1 - 10.0 ** -k
        z = geod.eval(t)
        v, capped = dyn.safe_distance(D, z, f.eval(z))
        if capped:
            truncated = True
            break
        vals.append((t, float(v)))
    if len(vals) >= 2:
        lim, err = geo.richardson([v for _, v in vals], ratio=10.0)
    else:
        lim, err = (vals[-1][1] if vals else np.nan), np.inf
    dev = abs(lim - target)
    rep.add("limit_equals_half_log_beta", dev <= tol, lim, target, tol,
            witness=None if dev <= tol else {"samples": vals})
    rep.data.update(samples=vals, beta=est.value, beta_err=est.error_bar, deviation=dev,
                    extrapolation_error=err, truncated=truncated)
    return rep


def limsup_step(steps):
    """Estimate of limsup of a step sequence: max of the tail maximum and the Aitken limit."""
    steps = np.asarray(steps, dtype=float)
    if len(steps) == 0:
        return 0.0
    tail = steps[len(steps) // 2:]
    best = float(tail.max())
    if len(steps) >= 3:
        a, b, c = steps[-3:]
        den = (c - b) - (b - a)
        if abs(den) > 1e-300 and (c - b) * (b - a) > 0:
            best = max(best, float(c - (c - b) ** 2 / den))
    return best


def limsup_step_fixedpoint_check(f, orbit, tol=1e-6):
    """Orbit limit sigma is a boundary fixed point with beta_sigma <= alpha, 1/2 log alpha = limsup step."""
    rep = Report("limsup_step_fixedpoint_check")
    D = f.domain
    if orbit.limit is None:
        rep.add("precondition_boundary_limit", True, False, None,
                note="vacuous: orbit has no boundary limit")
        return rep
    sigma = orbit.limit
    ls = limsup_step(orbit.steps)
    alpha = float(np.exp(2 * ls))
    fixed, est = dyn.is_boundary_fixed_point(f, sigma)
    rep.add("boundary_fixed_point", fixed, fixed, True, witness={"sigma": sigma})
    beta = est.value if est is not None else np.inf
    berr = est.error_bar if est is not None else 0.0
    bound = alpha * (1 + tol) + berr
    rep.add("beta_le_alpha", beta <= bound, beta, bound, tol, witness={"sigma": sigma, "limsup_step": ls})
    rep.data.update(sigma=sigma, alpha=alpha, limsup_step=ls, beta=beta, beta_err=berr)
    return rep


def theorem01_suite(f, orbit, p=None, cls=None, tol=1e-6):
    """The four conclusions about a backward orbit with bounded step.

    Boundary limit sigma with beta_sigma >= 1; repelling when f is
    strongly elliptic or hyperbolic; sigma = tau only for parabolic f;
    finite K-region gauge along the orbit (empirical supremum and its
    growth rate reported).
    """
    D = f.domain
    p = D.center if p is None else ar.to_float(geo.as_point(p, D))
    cls = cls or dyn.classify(f)
    rep = Report("theorem01_suite", data={"kind": cls.kind, "step_sup": orbit.step_sup})
    sigma = orbit.limit
    bd = float(geo.boundary_dist(D, orbit.points[-1]))
    if sigma is None:
        rep.add("boundary_limit", False, bd, tol, tol, witness={"index": orbit.n})
        return rep
    est = dyn.dilation_coefficient(f, sigma, p)
    beta, berr = est.value, est.error_bar
    rep.add("boundary_limit", bd < tol, bd, tol, tol, witness={"index": orbit.n, "sigma": sigma})
    rep.add("beta_ge_1", beta >= 1 - tol - berr, beta, 1.0, tol, witness={"sigma": sigma})
    if cls.kind in (dyn.HYPERBOLIC, dyn.STRONGLY_ELLIPTIC):
        rep.add("repelling", beta > 1 + tol, beta, 1.0, tol, witness={"sigma": sigma})
    else:
        rep.add("repelling", True, beta, None, note="vacuous for %s maps" % cls.kind)
    same = cls.boundary_wolff and float(np.linalg.norm(sigma - cls.point)) <= tol
    rep.add("sigma_tau", (not same) or cls.kind == dyn.PARABOLIC,
            "sigma_eq_tau" if same else "sigma_ne_tau", None, tol,
            note="sigma = tau is allowed only for parabolic maps")
    g = orbit.gauge if orbit.gauge is not None else annotate(orbit, f, p, sigma=sigma).gauge
    finite = g[np.isfinite(g)]
    sup = float(finite.max()) if len(finite) else np.inf
    ok = len(finite) > 0 and np.all(np.isfinite(g[1:]) | np.isnan(g[1:]))
    rep.add("gauge_bounded", bool(ok and np.isfinite(sup)), sup, None,
            note="M = exp(sup gauge) fitted over the computed orbit")
    rep.data.update(sigma=sigma, beta_sigma=beta, beta_err=berr, gauge_sup=sup, M_fit=float(np.exp(sup)),
                    gauge_growth=_gauge_growth(g), sigma_eq_tau=bool(same))
    return rep


def _gauge_growth(g):
    """Slope of the gauge against log n over the second half of the orbit (0 if bounded)."""
    g = np.asarray(g, dtype=float)
    n = np.arange(len(g))
    m = (n >= max(2, len(g) // 2)) & np.isfinite(g)
    if m.sum() < 3:
        return None
    return float(np.polyfit(np.log(n[m]), g[m], 1)[0])


def inequality_battery(f, orbit, p=None, cls=None, c=None, rel=1e-9):
    """Per-step inequalities along a backward orbit.

    Boundary Wolff point: t_{n+1} >= t_n / beta_tau.  Strongly elliptic:
    s_{n+1} <= c s_n with the contraction constant c.  Both: the smallest C
    with |z_n - z_{n+1}| <= C / sqrt(1 - a_hat^2) sqrt(d(z_n, bD)) and the
    geometric decay of the resulting Cauchy bound.
    """
    D = f.domain
    p = D.center if p is None else ar.to_float(geo.as_point(p, D))
    cls = cls or dyn.classify(f)
    rep = Report("inequality_battery", data={"kind": cls.kind})
    if orbit.n < 2:
        rep.add("precondition_orbit_length", True, orbit.n, note="vacuous: orbit too short")
        return rep
    if cls.kind == dyn.ELLIPTIC_NON_STRONG:
        rep.add("precondition_type", True, cls.kind, note="vacuous: no attracting point or boundary Wolff point")
        return rep

    # relative rounding floor of h and exp(-2k) at double-precision points near the boundary
    floor = np.array([0.0 if ar.is_hp(z) else 16 * np.finfo(float).eps / max(float(geo.boundary_dist(D, z)), 1e-300)
                      for z in orbit.points])
    tol_n = rel + floor[1:] + floor[:-1]
    rep.data["rounding_floor_max"] = float(tol_n.max())

    if cls.boundary_wolff:
        if orbit.t is None or np.all(np.isnan(orbit.t)):
            annotate(orbit, f, p, tau=cls.point, sigma=orbit.limit)
        t = orbit.t
        bt = cls.beta + (cls.beta_err or 0.0)
        ratio = t[1:] * bt / t[:-1]
        i = int(np.nanargmin(ratio + tol_n))
        rep.add("t_growth", bool(np.all(ratio >= 1 - tol_n)), float(ratio[i]), float(1 - tol_n[i]), rel,
                witness={"index": i})
        rep.data["t_ratio_min"] = float(ratio[i])
    else:
        k = np.array([float(dyn.safe_distance(D, p, z)[0]) for z in orbit.points])
        R0 = float(k[1:].min())
        if c is None:
            c = dyn.contraction_constant(f, p, R0).c
        s = orbit.s
        ratio = s[1:] / s[:-1]
        i = int(np.argmax(ratio - c * tol_n))
        rep.add("s_contraction", bool(np.all(ratio <= c * (1 + tol_n))), float(ratio[i]),
                float(c * (1 + tol_n[i])), rel, witness={"index": i})
        rep.data.update(c=c, R0=R0)

    Z = orbit.array()
    inc = np.linalg.norm(Z[1:] - Z[:-1], axis=1)
    dist = np.array([float(geo.boundary_dist(D, z)) for z in orbit.points[:-1]])
    ahat = orbit.a_hat
    with np.errstate(divide="ignore", invalid="ignore"):
        Cn = inc * np.sqrt(1 - ahat ** 2) / np.sqrt(dist)
    Cn = Cn[np.isfinite(Cn)]
    C = float(Cn.max()) if len(Cn) else np.nan
    rep.data.update(C_fit=C, a_hat=ahat)
    tail = slice(len(dist) // 2, None)
    m = np.isfinite(np.log(dist[tail])) & (dist[tail] > 0)
    if m.sum() >= 3:
        q = float(np.exp(np.polyfit(np.arange(m.sum()), 0.5 * np.log(dist[tail][m]), 1)[0]))
    else:
        q = np.nan
    rep.data["sqrt_dist_ratio"] = q
    if cls.kind == dyn.PARABOLIC:
        rep.add("cauchy_geometric", True, q, None, note="not applicable: parabolic orbits approach slowly")
    else:
        rep.add("cauchy_geometric", bool(q < 1 - 1e-3), q, 1.0, 1e-3)
    return rep
