"""Experiment configs, task dispatch and deterministic result emission.

A config is a JSON object::

    {"schema_version": 1, "name": "...", "seed": 7, "task": "classify",
     "domain": {"type": "disk"}, "map": {"type": "disk_mobius", "a": 0.5},
     "params": {...}, "expect": {...}}

``params`` feed the module operations; ``expect`` lists reference values
that become pass/fail checks.  Every number in a report comes from a module
operation; the harness only compares.
"""

import json
import logging
import os
import tempfile
import zlib
from pathlib import Path

import numpy as np

from . import _arith as ar
from . import backward as bw
from . import dynamics as dyn
from . import geometry as geo
from .errors import ConfigError, KobdynError
from .holomap import map_from_spec, parse_complex, parse_point
from .orbit import jnum
from .report import Check, Report, _jsonable

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
TASKS = ("classify", "forward", "backward", "construct", "verify-theorem01", "verify-lemmas", "distance-bench")

EXIT_OK = 0
EXIT_CHECKS_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


class Streams:
    """Named deterministic random streams derived from one seed."""

    def __init__(self, seed):
        self.seed = int(seed)

    def rng(self, name):
        key = zlib.crc32(name.encode("utf-8"))
        return np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=(key,)))

    def child_seed(self, name):
        return int(self.rng(name).integers(0, 2 ** 31 - 1))


# ---------------------------------------------------------------------------
# schema


def domain_from_spec(spec, path="/domain"):
    if not isinstance(spec, dict) or "type" not in spec:
        raise ConfigError("domain must be an object with a 'type'", path)
    t = spec["type"]
    if t == "disk":
        return geo.unit_disk()
    if t == "ball":
        d = spec.get("dim")
        if isinstance(d, bool) or not isinstance(d, int) or d < 1:
            raise ConfigError("ball needs a positive integer 'dim'", path + "/dim")
        return geo.unit_ball(d)
    if t == "linear_image":
        M = spec.get("matrix")
        if not isinstance(M, list) or not M or any(not isinstance(r, list) or len(r) != len(M) for r in M):
            raise ConfigError("expected a square matrix", path + "/matrix")
        T = np.array([[parse_complex(x, "%s/matrix/%d/%d" % (path, i, j)) for j, x in enumerate(r)]
                      for i, r in enumerate(M)])
        try:
            return geo.linear_image(T)
        except ValueError as e:
            raise ConfigError(str(e), path + "/matrix")
    if t == "general":
        if spec.get("rho") != "ellipsoid":
            raise ConfigError("only the built-in 'ellipsoid' defining function is available", path + "/rho")
        w = spec.get("weights")
        if not isinstance(w, list) or not w or any(isinstance(x, bool) or not isinstance(x, (int, float))
                                                     or x <= 0 for x in w):
            raise ConfigError("weights must be positive numbers", path + "/weights")
        return geo.weighted_ellipsoid(w)
    raise ConfigError("unknown domain type %r" % (t,), path + "/type")


def _num(params, key, default=None, kind=float, path="/params"):
    if key not in params:
        if default is None:
            raise ConfigError("missing field", "%s/%s" % (path, key))
        return default
    v = params[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError("expected a number", "%s/%s" % (path, key))
    if kind is int:
        if int(v) != v:
            raise ConfigError("expected an integer", "%s/%s" % (path, key))
        return int(v)
    return float(v)


def _point(params, key, D, default=None, path="/params"):
    if key not in params:
        if default is None:
            raise ConfigError("missing field", "%s/%s" % (path, key))
        return default
    z = parse_point(params[key], D.dim, "%s/%s" % (path, key))
    if not D.contains(z):
        raise ConfigError("point must lie inside the domain", "%s/%s" % (path, key))
    return z


def _boundary_point(params, key, D, path="/params"):
    if key not in params:
        raise ConfigError("missing field", "%s/%s" % (path, key))
    z = parse_point(params[key], D.dim, "%s/%s" % (path, key))
    if not geo.on_boundary(D, z, 1e-10):
        raise ConfigError("boundary point must lie on the boundary to 1e-10", "%s/%s" % (path, key))
    return z


def validate(config):
    """Check the top-level structure; returns the parsed (domain, map) pair."""
    if not isinstance(config, dict):
        raise ConfigError("config must be a JSON object", "/")
    v = config.get("schema_version", SCHEMA_VERSION)
    if v != SCHEMA_VERSION:
        raise ConfigError("unsupported schema_version %r" % (v,), "/schema_version")
    if "seed" not in config:
        raise ConfigError("seed is mandatory", "/seed")
    s = config["seed"]
    if isinstance(s, bool) or not isinstance(s, int) or not 0 <= s < 2 ** 64:
        raise ConfigError("seed must be a 64-bit unsigned integer", "/seed")
    task = config.get("task")
    if task not in TASKS:
        raise ConfigError("task must be one of %s" % ", ".join(TASKS), "/task")
    for key in ("params", "expect"):
        if key in config and not isinstance(config[key], dict):
            raise ConfigError("expected an object", "/" + key)
    D = domain_from_spec(config.get("domain"))
    f = None
    if task != "distance-bench":
        if "map" not in config:
            raise ConfigError("missing field", "/map")
        try:
            f = map_from_spec(config["map"], D)
        except ValueError as e:
            if isinstance(e, KobdynError):
                raise
            raise ConfigError(str(e), "/map")
    return D, f


# ---------------------------------------------------------------------------
# expectations


def _expect_close(rep, name, observed, expected, tol, rel=False, witness=None):
    if observed is None:
        rep.add(name, False, None, expected, tol, witness=witness or {"reason": "not computed"})
        return
    obs = np.asarray(ar.to_float(np.asarray(observed)) if np.iscomplexobj(observed) or ar.is_hp(observed)
                     else observed)
    exp = np.asarray(expected)
    dev = float(np.max(np.abs(obs - exp)))
    if rel:
        dev = dev / float(np.max(np.abs(exp)))
    rep.add(name, dev <= tol, _jsonable(observed), _jsonable(expected), tol,
            witness=witness if dev > tol else None, note="deviation %s" % repr(dev))


def _expect_scalar(exp, key, path="/expect"):
    v = exp[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError("expected a number", "%s/%s" % (path, key))
    return float(v)


def _tol(exp, key, default):
    return _expect_scalar(exp, key + "_tol") if key + "_tol" in exp else default


def _classification_expectations(rep, cls, exp, D):
    if "kind" in exp:
        rep.add("expect_kind", cls.kind == exp["kind"], cls.kind, exp["kind"])
    if "wolff" in exp:
        _expect_close(rep, "expect_wolff", cls.point, parse_point(exp["wolff"], D.dim, "/expect/wolff"),
                      _tol(exp, "wolff", 1e-6))
    if "beta_tau" in exp:
        _expect_close(rep, "expect_beta_tau", cls.beta, _expect_scalar(exp, "beta_tau"), _tol(exp, "beta_tau", 1e-6))
    if "spectral_radius" in exp:
        _expect_close(rep, "expect_spectral_radius", cls.spectral_radius, _expect_scalar(exp, "spectral_radius"),
                      _tol(exp, "spectral_radius", 1e-9))


def _orbit_expectations(rep, f, orbit, exp, cls=None):
    D = f.domain
    if "residual_max" in exp:
        r = float(np.max(orbit.residuals)) if len(orbit.residuals) else 0.0
        i = int(np.argmax(orbit.residuals)) if len(orbit.residuals) else 0
        lim = _expect_scalar(exp, "residual_max")
        rep.add("expect_residuals", r <= lim, r, lim, witness={"index": i})
    if "step" in exp:
        st = orbit.steps
        target = _expect_scalar(exp, "step")
        dev = np.abs(st - target)
        i = int(np.argmax(dev))
        tol = _tol(exp, "step", 1e-9)
        rep.add("expect_constant_step", bool(dev[i] <= tol), float(st[i]), target, tol, witness={"index": i})
    if "step_sup_max" in exp:
        lim = _expect_scalar(exp, "step_sup_max")
        rep.add("expect_step_sup", orbit.step_sup <= lim, orbit.step_sup, lim,
                witness={"index": int(np.argmax(orbit.steps))})
    if "limit" in exp:
        target = parse_point(exp["limit"], D.dim, "/expect/limit")
        tol = _tol(exp, "limit", 1e-6)
        _expect_close(rep, "expect_limit", orbit.limit, target, tol)
        last = orbit.array()[-1]
        _expect_close(rep, "expect_final_point", last, target, tol, witness={"index": orbit.n})
    if "final_dist_max" in exp and "sigma" in exp:
        sigma = parse_point(exp["sigma"], D.dim, "/expect/sigma")
        dist = float(np.linalg.norm(orbit.array()[-1] - sigma))
        lim = _expect_scalar(exp, "final_dist_max")
        rep.add("expect_final_distance", dist <= lim, dist, lim, witness={"index": orbit.n})
    if "t_geometric" in exp and orbit.t is not None:
        q = _expect_scalar(exp, "t_geometric")
        n = np.arange(len(orbit.t))
        dev = np.abs(orbit.t / (orbit.t[0] * q ** n) - 1)
        i = int(np.argmax(dev))
        tol = _tol(exp, "t_geometric", 1e-8)
        rep.add("expect_t_geometric", bool(dev[i] <= tol), float(dev[i]), tol, tol, witness={"index": i})
    if "constant_rows" in exp:
        Z = orbit.array()
        same = bool(np.all(Z == Z[0]))
        rep.add("expect_constant_orbit", same == bool(exp["constant_rows"]), same, bool(exp["constant_rows"]))


# ---------------------------------------------------------------------------
# plot data


def plot_data(D, orbit=None, center=None, pole=None, levels=(0.25, 1.0, 4.0), log_m=(1.0, 2.0, 4.0), grid=161):
    """Polylines of horosphere and K-region level sets on the first-coordinate slice, plus the orbit."""
    import contourpy

    out = {"projection": "first coordinate, other coordinates 0"}
    if orbit is not None:
        Z = orbit.array()
        out["orbit"] = [[jnum(z.real), jnum(z.imag)] for z in Z[:, 0]]
    if center is None or not D.closed_form:
        return out
    pole = D.center if pole is None else pole
    ext = 1.0
    if D.kind == geo.LINEAR_IMAGE:
        ext = float(np.max(np.abs(D.matrix[0])) * np.sqrt(D.dim))
    xs = np.linspace(-ext, ext, grid)
    X, Y = np.meshgrid(xs, xs)
    P = np.zeros(X.shape + (D.dim,), dtype=complex)
    P[..., 0] = X + 1j * Y
    inside = D.rho(P) < -1e-9
    H = np.full(X.shape, np.nan)
    G = np.full(X.shape, np.nan)
    pts = P[inside]
    H[inside] = geo.horofunction(D, center, pole, pts)
    G[inside] = geo.kregion_gauge(D, center, pole, pts)
    def lines(F, lv):
        gen = contourpy.contour_generator(X, Y, np.ma.masked_invalid(F))
        return [[[jnum(a), jnum(b)] for a, b in seg] for seg in gen.lines(lv)]
    out["horospheres"] = {repr(float(R)): lines(H, R) for R in levels}
    out["kregions"] = {repr(float(m)): lines(G, m) for m in log_m}
    return out


# ---------------------------------------------------------------------------
# tasks


def _classify(f, params, streams):
    return dyn.classify(f, dyn.ClassifyConfig(seed=streams.child_seed("classify"),
                                              margin=_num(params, "margin", 1e-3)))


def task_classify(D, f, params, exp, streams):
    cls = _classify(f, params, streams)
    rep = Report("classify", data={"classification": cls.to_json()})
    rep.add("classified", True, cls.kind)
    _classification_expectations(rep, cls, exp, D)
    center = cls.point if cls.boundary_wolff else None
    return rep, None, plot_data(D, None, center)


def task_forward(D, f, params, exp, streams):
    z0 = _point(params, "z0", D, D.center)
    n = _num(params, "n", 50, int)
    orbit = dyn.iterate_forward(f, z0, n)
    rep = Report("forward", data={"orbit": orbit.to_json()})
    st = orbit.steps
    if n:
        # rounding in 1-|z|^2 costs ~eps/boundary_dist per distance
        bd = np.array([geo.boundary_dist(D, z) for z in orbit.array()[1:]])
        tol = 1e-9 + 16 * np.finfo(float).eps / bd
        excess = st - st[0] - tol
        i = int(np.argmax(excess))
        rep.add("steps_bounded_by_first", bool(excess[i] <= 0), float(st[i] - st[0]), 0.0, float(tol[i]),
                witness={"index": i})
    if "final_point" in exp:
        _expect_close(rep, "expect_final_point", orbit.array()[-1],
                      parse_point(exp["final_point"], D.dim, "/expect/final_point"), _tol(exp, "final_point", 1e-9))
    return rep, orbit, plot_data(D, orbit)


def _backward_from_params(D, f, params, streams, cls):
    z0 = _point(params, "z0", D, D.center)
    n = _num(params, "n", 40, int)
    a_max = _num(params, "a_max", np.inf)
    policy = params.get("policy", bw.MIN_STEP)
    if policy not in (bw.MIN_STEP, bw.TOWARD):
        raise ConfigError("policy must be 'min_step' or 'toward'", "/params/policy")
    target = _boundary_point(params, "target", D) if policy == bw.TOWARD else None
    tau = cls.point if cls is not None and cls.boundary_wolff else None
    return bw.backward_orbit(f, z0, n, a_max, policy, target, tau=tau)


def task_backward(D, f, params, exp, streams):
    cls = _classify(f, params, streams) if params.get("classify", True) else None
    orbit = _backward_from_params(D, f, params, streams, cls)
    rep = Report("backward", data={"orbit": orbit.to_json(), "classification": cls})
    rep.add("residuals", bool(np.all(orbit.residuals <= 1e-10)),
            float(orbit.residuals.max()) if orbit.n else 0.0, 1e-10,
            witness={"index": int(np.argmax(orbit.residuals))} if orbit.n else None)
    if cls is not None:
        _classification_expectations(rep, cls, exp, D)
    _orbit_expectations(rep, f, orbit, exp, cls)
    return rep, orbit, plot_data(D, orbit, _plot_center(orbit, cls))


def _plot_center(orbit, cls):
    if orbit.limit is not None:
        return orbit.limit
    return cls.point if cls is not None and cls.boundary_wolff else None


def task_construct(D, f, params, exp, streams):
    sigma = _boundary_point(params, "sigma", D)
    cls = _classify(f, params, streams)
    window = None
    if "window_radius" in params:
        r = _num(params, "window_radius")
        if not r > 0:
            raise ConfigError("window radius must be positive", "/params/window_radius")
        window = bw.IsolationWindow(sigma, r, np.inf)
    cfg = bw.ConstructConfig(slack=_num(params, "slack", 0.05), cluster_eps=_num(params, "cluster_eps", 1e-4))
    orbit = bw.construct_backward_orbit_at(f, sigma, window, cfg, cls=cls)
    beta = orbit.meta["beta"]
    rep = Report("construct", data={"orbit": orbit.to_json(), "beta_sigma": beta,
                                    "meta": {k: v for k, v in orbit.meta.items() if k != "heads"}})
    rep.add("residuals", bool(np.all(orbit.residuals <= 1e-10)), float(orbit.residuals.max()), 1e-10,
            witness={"index": int(np.argmax(orbit.residuals))})
    bound = 0.5 * np.log(beta) + cfg.slack
    rep.add("step_bound", orbit.step_sup <= bound, orbit.step_sup, bound, cfg.slack,
            witness={"index": int(np.argmax(orbit.steps))})
    dist = float(np.linalg.norm(orbit.array()[-1] - sigma))
    rep.add("converges_to_sigma", dist < _num(params, "final_tol", 1e-4), dist, _num(params, "final_tol", 1e-4),
            witness={"index": orbit.n})
    rep.extend(bw.step_limit_check(f, sigma, tol=_num(params, "step_limit_tol", 1e-3)), "step_limit_")
    if "beta_sigma" in exp:
        _expect_close(rep, "expect_beta_sigma", beta, _expect_scalar(exp, "beta_sigma"), _tol(exp, "beta_sigma", 1e-3))
    _orbit_expectations(rep, f, orbit, dict(exp, sigma=params["sigma"]) if "final_dist_max" in exp else exp, cls)
    return rep, orbit, plot_data(D, orbit, sigma)


def task_theorem01(D, f, params, exp, streams):
    cls = _classify(f, params, streams)
    orbit = _backward_from_params(D, f, params, streams, cls)
    rep = Report("verify-theorem01", data={"classification": cls, "orbit": orbit.to_json()})
    rep.add("residuals", bool(np.all(orbit.residuals <= 1e-10)), float(orbit.residuals.max()), 1e-10,
            witness={"index": int(np.argmax(orbit.residuals))})
    _classification_expectations(rep, cls, exp, D)
    _orbit_expectations(rep, f, orbit, exp, cls)
    t01 = bw.theorem01_suite(f, orbit, cls=cls)
    rep.extend(t01, "orbit_")
    rep.data["theorem01"] = t01.data
    c = None
    if cls.kind == dyn.STRONGLY_ELLIPTIC and "contraction_R0" in params:
        est = dyn.contraction_constant(f, cls.point, _num(params, "contraction_R0"),
                                       seed=streams.child_seed("contraction"))
        c = est.c
        rep.add("contraction_lt_1", est.c < 1, est.c, 1.0, witness={"point": est.witness})
        rep.data["contraction"] = {"c": est.c, "R0": _num(params, "contraction_R0")}
    battery = bw.inequality_battery(f, orbit, cls=cls, c=c)
    rep.extend(battery, "ineq_")
    rep.data["inequalities"] = battery.data
    ls = bw.limsup_step_fixedpoint_check(f, orbit)
    rep.extend(ls, "limsup_")
    rep.data["limsup"] = ls.data
    if "beta_sigma" in exp:
        _expect_close(rep, "expect_beta_sigma", t01.data.get("beta_sigma"), _expect_scalar(exp, "beta_sigma"),
                      _tol(exp, "beta_sigma", 1e-3))
    if "beta_product" in exp and cls.beta is not None and t01.data.get("beta_sigma") is not None:
        _expect_close(rep, "expect_beta_product", t01.data["beta_sigma"] * cls.beta,
                      _expect_scalar(exp, "beta_product"), _tol(exp, "beta_product", 1e-6))
    if "sigma_eq_tau" in exp:
        rep.add("expect_sigma_eq_tau", t01.data.get("sigma_eq_tau") == bool(exp["sigma_eq_tau"]),
                t01.data.get("sigma_eq_tau"), bool(exp["sigma_eq_tau"]))
    if "julia_trials" in params and cls.boundary_wolff:
        jr = dyn.julia_check(f, cls.point, cls.point, trials=_num(params, "julia_trials", kind=int),
                             seed=streams.child_seed("julia"))
        rep.extend(jr, "")
        rep.data["julia"] = jr.data
    return rep, orbit, plot_data(D, orbit, _plot_center(orbit, cls))


def task_lemmas(D, f, params, exp, streams):
    rep = Report("verify-lemmas")
    which = params.get("checks", ["pole_independence", "pole_change"])
    if not isinstance(which, list):
        raise ConfigError("expected a list of check names", "/params/checks")
    rng = streams.rng("lemmas")
    for name in which:
        if name == "pole_independence":
            sigma = _boundary_point(params, "sigma", D)
            pairs = params.get("pole_pairs")
            if not isinstance(pairs, list) or not pairs:
                raise ConfigError("expected a list of [p, q] pole pairs", "/params/pole_pairs")
            for i, pr in enumerate(pairs):
                if not isinstance(pr, list) or len(pr) != 2:
                    raise ConfigError("expected a [p, q] pair", "/params/pole_pairs/%d" % i)
                p = _point({"p": pr[0]}, "p", D, path="/params/pole_pairs/%d" % i)
                q = _point({"q": pr[1]}, "q", D, path="/params/pole_pairs/%d" % i)
                bp = dyn.dilation_coefficient(f, sigma, p)
                bq = dyn.dilation_coefficient(f, sigma, q)
                tol = bp.error_bar + bq.error_bar
                rep.add("pole_independence_%d" % i, abs(bp.value - bq.value) <= tol,
                        abs(bp.value - bq.value), tol, witness={"p": p, "q": q},
                        note="beta_p=%r beta_q=%r" % (bp.value, bq.value))
        elif name == "pole_change":
            tau = _boundary_point(params, "tau", D)
            n = _num(params, "samples", 200, int)
            worst, wit = 0.0, None
            for _ in range(n):
                p, q, z = (_random_point(D, rng) for _ in range(3))
                lhs = geo.horofunction(D, tau, q, z) * geo.horofunction(D, tau, p, q)
                rhs = geo.horofunction(D, tau, p, z)
                dev = abs(lhs - rhs) / abs(rhs)
                if dev > worst:
                    worst, wit = float(dev), {"p": p, "q": q, "z": z}
            rep.add("pole_change_identity", worst <= 1e-10, worst, 1e-10, 1e-10,
                    witness=wit if worst > 1e-10 else None)
        elif name == "julia":
            sigma = _boundary_point(params, "sigma", D)
            tau = _boundary_point(params, "tau", D)
            jr = dyn.julia_check(f, sigma, tau, trials=_num(params, "julia_trials", 1000, int),
                                 seed=streams.child_seed("julia"))
            rep.extend(jr)
            rep.data["julia"] = jr.data
        elif name == "wolff":
            wr = dyn.wolff_consistency(f, samples=_num(params, "samples", 1000, int),
                                       seed=streams.child_seed("wolff"))
            rep.extend(wr, "wolff_")
        elif name == "step_limit":
            sigma = _boundary_point(params, "sigma", D)
            rep.extend(bw.step_limit_check(f, sigma), "step_limit_")
        elif name == "automorphism_product":
            pts = params.get("fixed_points")
            if not isinstance(pts, list) or len(pts) != 2:
                raise ConfigError("expected two boundary fixed points", "/params/fixed_points")
            b = [dyn.dilation_coefficient(f, _boundary_point({"x": x}, "x", D)) for x in pts]
            prod = b[0].value * b[1].value
            rep.add("beta_product", abs(prod - 1) <= 1e-6, prod, 1.0, 1e-6)
        else:
            raise ConfigError("unknown check %r" % (name,), "/params/checks")
    return rep, None, None


def _random_point(D, rng, scale=0.9):
    d = D.dim
    g = rng.normal(size=2 * d)
    g = g / np.linalg.norm(g) * scale * rng.uniform() ** (1 / (2 * d))
    v = g[:d] + 1j * g[d:]
    return D.from_ball(v)


def task_distance(D, f, params, exp, streams):
    rep = Report("distance-bench")
    if "poincare" in exp:
        ent = exp["poincare"]
        if not isinstance(ent, list) or len(ent) != 3:
            raise ConfigError("expected [zeta, eta, value]", "/expect/poincare")
        zeta = parse_complex(ent[0], "/expect/poincare/0")
        eta = parse_complex(ent[1], "/expect/poincare/1")
        v = geo.poincare_dist(zeta, eta)
        _expect_close(rep, "poincare_value", float(v), float(ent[2]), _tol(exp, "poincare", 1e-12))
    pairs = _num(params, "pairs", 100, int)
    cfg = geo.LempertConfig(degree=_num(params, "degree", 6, int))
    rng = streams.rng("pairs")
    if D.closed_form:
        oracle, numeric = D, D
    elif D.spec.get("rho") == "ellipsoid":
        oracle = geo.linear_image(np.diag(1 / np.sqrt(np.asarray(D.spec["weights"]))))
        numeric = D
    else:
        raise ConfigError("distance-bench needs a closed-form oracle", "/domain")
    errs, gaps, below = [], [], []
    worst, wit = 0.0, None
    for i in range(pairs):
        z = _random_point(oracle, rng)
        w = _random_point(oracle, rng, scale=0.95)
        res = geo.lempert_numeric(numeric, z, w, cfg)
        true = float(geo.distance(oracle, z, w))
        e = res.value - true
        errs.append(e)
        gaps.append(res.feasibility_gap)
        if abs(e) > worst:
            worst, wit = abs(e), {"index": i, "z": z, "w": w, "numeric": res.value, "oracle": true}
    tol = _num(params, "tol", 1e-3)
    gap_tol = _num(params, "gap_tol", 1e-6)
    errs = np.array(errs)
    rep.add("lempert_agreement", worst <= tol, worst, tol, tol, witness=wit if worst > tol else None)
    rep.add("lempert_upper_bound", float(errs.min()) >= -1e-9, float(errs.min()), -1e-9, 1e-9,
            witness={"index": int(np.argmin(errs))} if errs.min() < -1e-9 else None)
    rep.add("feasibility_gap", max(gaps) <= gap_tol, max(gaps), gap_tol, witness={"index": int(np.argmax(gaps))})
    rep.data.update(pairs=pairs, degree=cfg.degree, max_error=worst, min_error=float(errs.min()),
                    mean_error=float(np.mean(np.abs(errs))))
    return rep, None, None


TASK_FUNCS = {
    "classify": task_classify,
    "forward": task_forward,
    "backward": task_backward,
    "construct": task_construct,
    "verify-theorem01": task_theorem01,
    "verify-lemmas": task_lemmas,
    "distance-bench": task_distance,
}


# ---------------------------------------------------------------------------
# running and emission


def dumps(obj):
    return json.dumps(_jsonable(obj), indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def write_atomic(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix="." + path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def run(config, out_dir=None, seed=None):
    """Execute one config; returns (exit_code, report_dict) and writes files when out_dir is set.

    Files: ``report.json`` always; ``orbit.csv`` and ``orbit.json`` for orbit
    tasks; ``plot.json`` with polylines when available.
    """
    name = config.get("name", "experiment") if isinstance(config, dict) else "experiment"
    try:
        if seed is not None:
            config = dict(config, seed=int(seed))
        D, f = validate(config)
        streams = Streams(config["seed"])
        params = config.get("params", {})
        exp = config.get("expect", {})
        rep, orbit, plot = TASK_FUNCS[config["task"]](D, f, params, exp, streams)
        code = EXIT_OK if rep.passed else EXIT_CHECKS_FAILED
        body = {"schema_version": SCHEMA_VERSION, "name": name, "task": config["task"],
                "seed": config["seed"], "status": "pass" if rep.passed else "fail", "exit_code": code,
                "report": rep.to_json()}
    except ConfigError as e:
        orbit = plot = None
        code = EXIT_CONFIG
        body = {"schema_version": SCHEMA_VERSION, "name": name, "status": "config_error", "exit_code": code,
                "error": {"type": "ConfigError", "message": str(e), "field": e.field}}
    except KobdynError as e:
        orbit = plot = None
        code = EXIT_NUMERIC
        body = {"schema_version": SCHEMA_VERSION, "name": name, "status": "numeric_error", "exit_code": code,
                "error": {"type": type(e).__name__, "message": str(e),
                          "detail": _jsonable(getattr(e, "partial", None) or getattr(e, "witness", None)
                                              or getattr(e, "cluster", None))}}
    if out_dir is not None:
        out = Path(out_dir)
        write_atomic(out / "report.json", dumps(body))
        if orbit is not None:
            write_atomic(out / "orbit.csv", orbit.to_csv())
            write_atomic(out / "orbit.json", dumps(orbit.to_json()))
        if plot is not None:
            write_atomic(out / "plot.json", dumps(plot))
    return code, body


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as e:
        raise ConfigError("invalid JSON: %s" % e, "/")


def suite(config_dir, out_dir=None, seed=None):
    """Run every *.json config in a directory in sorted order; returns (worst exit code, summary)."""
    paths = sorted(Path(config_dir).glob("*.json"))
    rows, worst = [], EXIT_OK
    for p in paths:
        sub = None if out_dir is None else Path(out_dir) / p.stem
        try:
            cfg = load_config(p)
            code, body = run(cfg, sub, seed)
        except ConfigError as e:
            code, body = EXIT_CONFIG, {"status": "config_error", "error": {"message": str(e), "field": e.field}}
            if sub is not None:
                write_atomic(sub / "report.json", dumps(body))
        worst = max(worst, code)
        checks = body.get("report", {}).get("checks", [])
        rows.append({"config": p.name, "status": body["status"], "exit_code": code,
                     "checks": len(checks), "failed": sum(not c["passed"] for c in checks)})
    summary = {"schema_version": SCHEMA_VERSION, "configs": len(rows), "exit_code": worst, "results": rows}
    if out_dir is not None:
        write_atomic(Path(out_dir) / "suite.json", dumps(summary))
    return worst, summary


def summary_table(summary):
    lines = ["%-40s %-14s %6s %6s" % ("config", "status", "checks", "failed")]
    for r in summary["results"]:
        lines.append("%-40s %-14s %6d %6d" % (r["config"], r["status"], r["checks"], r["failed"]))
    lines.append("%d configs, exit code %d" % (summary["configs"], summary["exit_code"]))
    return "\n".join(lines)
