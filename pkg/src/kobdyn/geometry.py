"""Domains and Kobayashi geometry.

Closed forms are used on the unit disk, the unit ball and complex-linear
images of the ball; a domain given only by a convex defining function goes
through a numerical Lempert optimization over polynomial analytic disks.

All distances use the normalization k(0, r) = artanh(r).
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq, linprog, minimize

from . import _arith as ar
from .errors import DomainError, EstimationError, UnsupportedOperation

DISK = "disk"
BALL = "ball"
LINEAR_IMAGE = "linear_image"
GENERAL = "general"


@dataclass(frozen=True, eq=False)
class Domain:
    """A bounded convex domain in C^d.

    Use the constructors :func:`unit_disk`, :func:`unit_ball`,
    :func:`linear_image` and :func:`general_domain` rather than building
    instances directly.
    """

    kind: str
    dim: int
    matrix: Optional[np.ndarray] = None
    rho_fn: Optional[Callable] = None
    grad_fn: Optional[Callable] = None
    center: Optional[np.ndarray] = None
    convexity_radius: Optional[float] = None
    spec: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind == LINEAR_IMAGE:
            T = np.asarray(self.matrix, dtype=complex)
            if T.shape != (self.dim, self.dim):
                raise ValueError("matrix must be %d x %d" % (self.dim, self.dim))
            if np.linalg.cond(T) > 1e12:
                raise ValueError("linear image matrix is not invertible")
            object.__setattr__(self, "matrix", T)
            object.__setattr__(self, "_inv", np.linalg.inv(T))
        if self.center is None:
            object.__setattr__(self, "center", np.zeros(self.dim, dtype=complex))

    @property
    def closed_form(self):
        return self.kind != GENERAL

    def rho(self, x):
        """Defining function, negative exactly on the domain; vectorized on the last axis."""
        x = np.asarray(x)
        if self.kind == GENERAL:
            return self.rho_fn(x)
        return ar.abs2(self.to_ball(x)) - 1

    def grad_rho(self, x):
        """Real gradient of rho packed as a complex vector (d/dx + i d/dy)."""
        x = np.asarray(x, dtype=complex)
        if self.kind == GENERAL:
            if self.grad_fn is not None:
                return np.asarray(self.grad_fn(x), dtype=complex)
            h = 1e-7
            g = np.zeros(self.dim, dtype=complex)
            for i in range(self.dim):
                e = np.zeros(self.dim, dtype=complex)
                e[i] = h
                g[i] = (self.rho_fn(x + e) - self.rho_fn(x - e)) / (2 * h)
                g[i] += 1j * (self.rho_fn(x + 1j * e) - self.rho_fn(x - 1j * e)) / (2 * h)
            return g
        u = self.to_ball(x)
        return 2 * (self._inv.conj().T @ u) if self.kind == LINEAR_IMAGE else 2 * u

    def contains(self, z):
        z = np.asarray(z)
        if z.shape[-1] != self.dim:
            return False
        return bool(self.rho(z) < 0)

    def to_ball(self, z):
        if self.kind in (DISK, BALL):
            return z
        if self.kind == LINEAR_IMAGE:
            return np.asarray(z) @ self._inv.T
        raise UnsupportedOperation("general domains have no ball chart")

    def from_ball(self, u):
        if self.kind in (DISK, BALL):
            return u
        if self.kind == LINEAR_IMAGE:
            return np.asarray(u) @ self.matrix.T
        raise UnsupportedOperation("general domains have no ball chart")

    def __repr__(self):
        return "Domain(%s, dim=%d)" % (self.kind, self.dim)


def unit_disk():
    return Domain(DISK, 1, spec={"type": DISK})


def unit_ball(d):
    if d == 1:
        return unit_disk()
    return Domain(BALL, int(d), spec={"type": BALL, "dim": int(d)})


def linear_image(T):
    T = np.atleast_2d(np.asarray(T, dtype=complex))
    return Domain(LINEAR_IMAGE, T.shape[0], matrix=T,
                  spec={"type": LINEAR_IMAGE, "matrix": T.tolist()})


def general_domain(rho, dim, grad=None, center=None, convexity_radius=None, spec=None):
    """Domain {rho < 0} for a user-supplied convex defining function.

    ``center`` must be an interior point; it anchors ray searches.
    """
    c = np.zeros(dim, dtype=complex) if center is None else np.asarray(center, dtype=complex)
    D = Domain(GENERAL, int(dim), rho_fn=rho, grad_fn=grad, center=c,
               convexity_radius=convexity_radius, spec=spec or {"type": GENERAL})
    if not rho(c) < 0:
        raise DomainError("center is not inside the domain")
    return D


def weighted_ellipsoid(weights):
    """{sum w_i |z_i|^2 < 1} as a general (defining-function) domain."""
    w = np.asarray(weights, dtype=float)

    def rho(x):
        x = np.asarray(x)
        return np.sum(w * (x.real ** 2 + x.imag ** 2), axis=-1) - 1

    def grad(x):
        return 2 * w * np.asarray(x)

    return general_domain(rho, len(w), grad=grad,
                          convexity_radius=1 / np.sqrt(w.max()),
                          spec={"type": GENERAL, "rho": "ellipsoid", "weights": w.tolist()})


def as_point(z, D=None):
    """Validate and normalize a point to a 1-D complex (or high-precision) array."""
    if ar.is_hp(z):
        z = np.atleast_1d(np.asarray(z, dtype=object))
    else:
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        if not np.all(np.isfinite(z)):
            raise DomainError("point has non-finite coordinates")
    if z.ndim != 1:
        raise DomainError("a point is a 1-D coordinate vector")
    if D is not None and z.shape[0] != D.dim:
        raise DomainError("point has dimension %d, domain has %d" % (z.shape[0], D.dim))
    return z


def _require_inside(D, *points):
    for z in points:
        if not D.contains(z):
            raise DomainError("point %s is not inside %r" % (np.asarray(ar.to_float(z)), D))


# ---------------------------------------------------------------------------
# closed-form distances


def _ball_dist_raw(z, w):
    """Kobayashi distance of the unit ball; z, w in the open ball.

    Computed as artanh(s) = 1/2 log((1+s)^2 / x) with x = 1 - s^2 taken from
    the product form, which keeps both z ~ w and z, w ~ boundary accurate.
    """
    ip = ar.inner(z, w)
    d1 = 1 - ar.abs2(z)
    d2 = 1 - ar.abs2(w)
    den = (1 - ip)
    den = den.real ** 2 + den.imag ** 2
    diff = ar.abs2(z - w)
    wedge = 0
    n = z.shape[-1]
    for i in range(n):
        for j in range(i + 1, n):
            c = z[..., i] * w[..., j] - z[..., j] * w[..., i]
            wedge = wedge + c.real ** 2 + c.imag ** 2
    s2 = (diff - wedge) / den
    x = d1 * d2 / den
    if isinstance(s2, np.ndarray) and s2.dtype != object:
        s2 = np.maximum(s2, 0.0)
    elif s2 < 0:
        s2 = 0 * s2
    s = ar.sqrt(s2)
    return ar.log((1 + s) ** 2 / x) / 2


def poincare_dist(zeta, eta):
    """Poincare distance on the unit disk, normalized so k(0, r) = artanh r."""
    z = as_point(zeta)
    w = as_point(eta)
    if z.shape != (1,) or w.shape != (1,):
        raise DomainError("poincare_dist takes two complex scalars")
    if not (abs(z[0]) < 1 and abs(w[0]) < 1):
        raise DomainError("poincare_dist arguments must lie in the open unit disk")
    return _ball_dist_raw(z, w)


def ball_dist(z, w):
    """Kobayashi (= Bergman, suitably normalized) distance of the unit ball."""
    z = as_point(z)
    w = as_point(w)
    if z.shape != w.shape:
        raise DomainError("points have different dimensions")
    if not (ar.abs2(z) < 1 and ar.abs2(w) < 1):
        raise DomainError("ball_dist arguments must lie in the open unit ball")
    return _ball_dist_raw(z, w)


def distance(D, z, w, cfg=None):
    """Kobayashi distance k_D(z, w)."""
    z = as_point(z, D)
    w = as_point(w, D)
    _require_inside(D, z, w)
    if z.dtype == w.dtype and np.array_equal(z, w):
        return 0.0 * ar.abs2(z)
    if D.closed_form:
        return _ball_dist_raw(D.to_ball(z), D.to_ball(w))
    return lempert_numeric(D, z, w, cfg).value


# ---------------------------------------------------------------------------
# numerical Lempert function


@dataclass(frozen=True)
class LempertConfig:
    degree: int = 6
    samples: int = 64
    margin: float = 1e-6
    maxiter: int = 500
    dense_samples: int = 4096


@dataclass(frozen=True)
class LempertResult:
    value: float
    feasibility_gap: float
    fallback: bool = False
    coeffs: Optional[np.ndarray] = None
    nodes: tuple = ()

    def __iter__(self):
        # allow ``value, gap = lempert_numeric(...)``
        return iter((self.value, self.feasibility_gap))


def _ray_hits(rho, base, dirs, margin=0.0):
    """Largest t with rho(base + t*dir) < -margin, for each direction (convex domain)."""
    n = len(dirs)
    lo = np.zeros(n)
    hi = np.ones(n)
    for _ in range(60):
        out = rho(base[None, :] + hi[:, None] * dirs) + margin >= 0
        if out.all():
            break
        hi = np.where(out, hi, 2 * hi)
    for _ in range(64):
        mid = 0.5 * (lo + hi)
        inside = rho(base[None, :] + mid[:, None] * dirs) + margin < 0
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
    return lo


def _section_disk(D, z, u, margin):
    """A round disk {z + lam*u : |lam - lam_c| < R} inside D, in the complex line through z.

    Exact on closed-form domains (the section is itself a disk); on general
    domains the largest disk inscribed in a sampled polygon of the section.
    """
    if D.closed_form:
        zb, ub = D.to_ball(z), D.to_ball(u)
        nu = np.real(np.vdot(ub, ub))
        c = np.vdot(ub, zb) / nu
        r2 = (1 - margin - np.real(np.vdot(zb, zb)) + abs(c) ** 2 * nu) / nu
        return -c, np.sqrt(max(r2, 0.0))
    K = 128
    ang = np.exp(2j * np.pi * np.arange(K) / K)
    r = _ray_hits(D.rho, z, ang[:, None] * u[None, :], margin)
    P = np.c_[(r * ang).real, (r * ang).imag]
    A, b = [], []
    for i in range(K):
        p, q = P[i], P[(i + 1) % K]
        e = q - p
        nrm = np.array([e[1], -e[0]]) / np.hypot(*e)
        if nrm @ (-p) < 0:
            nrm = -nrm
        A.append([-nrm[0], -nrm[1], 1.0])
        b.append(-nrm @ p)
    res = linprog([0, 0, -1], A_ub=A, b_ub=b, bounds=[(None, None), (None, None), (0, None)])
    cx, cy, R = res.x
    lam_c = cx + 1j * cy
    # grow the radius to the sampled containment limit around the LP centre
    ring = np.exp(2j * np.pi * np.arange(D_SAMPLES) / D_SAMPLES)
    lo, hi = R, 2 * R + 1e-12
    while np.max(D.rho(z + (lam_c + hi * ring)[:, None] * u)) + margin < 0:
        hi *= 2
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if np.max(D.rho(z + (lam_c + mid * ring)[:, None] * u)) + margin < 0:
            lo = mid
        else:
            hi = mid
    return lam_c, lo


D_SAMPLES = 256


def lempert_numeric(D, z, w, cfg=None):
    """Upper bound for the Lempert function by optimizing polynomial disks.

    Disks are phi(xi) = sum_k c_k xi^k of degree ``cfg.degree`` with free
    interpolation nodes phi(a) = z, phi(b) = w; c_0 and c_1 are eliminated
    through the two interpolation conditions.  The objective is the Poincare
    distance between the nodes, containment is imposed on ``cfg.samples``
    points of the unit circle with margin ``cfg.margin``, and the returned
    feasibility gap is the worst violation on a dense circle.
    """
    cfg = cfg or LempertConfig()
    z = ar.to_float(as_point(z, D))
    w = ar.to_float(as_point(w, D))
    _require_inside(D, z, w)
    if np.array_equal(z, w):
        return LempertResult(0.0, 0.0)
    d = D.dim
    N = max(int(cfg.degree), 1)
    u = (w - z) / np.linalg.norm(w - z)
    L = np.linalg.norm(w - z)

    lam_c, R = _section_disk(D, z, u, cfg.margin)
    a0 = (0 - lam_c) / R
    b0 = (L - lam_c) / R
    seed_ok = R > 0 and abs(a0) < 1 and abs(b0) < 1

    ks = np.arange(2, N + 1)

    def unpack(x):
        a = x[0] + 1j * x[1] - x[2]
        b = x[0] + 1j * x[1] + x[2]
        H = x[3:].reshape(N - 1, d, 2) @ np.array([1, 1j])
        Ha = (a ** ks) @ H
        Hb = (b ** ks) @ H
        c1 = (w - z - (Hb - Ha)) / (b - a)
        c0 = z - c1 * a - Ha
        return a, b, np.vstack([c0[None], c1[None], H])

    def objective(x):
        a, b, _ = unpack(x)
        return abs((a - b) / (1 - np.conj(a) * b))

    def make_constraints(samples):
        circle = np.exp(2j * np.pi * np.arange(samples) / samples)
        pw = circle[:, None] ** np.arange(N + 1)[None, :]

        def constraints(x):
            a, b, co = unpack(x)
            return np.r_[-cfg.margin - D.rho(pw @ co), 1 - 1e-12 - abs(a) ** 2, 1 - 1e-12 - abs(b) ** 2]
        return constraints

    def dense_gap(co):
        th = np.exp(2j * np.pi * np.arange(cfg.dense_samples) / cfg.dense_samples)
        vals = D.rho((th[:, None] ** np.arange(co.shape[0])[None, :]) @ co)
        return float(max(0.0, vals.max()))

    if not seed_ok:
        return LempertResult(np.inf, np.inf, fallback=True)

    # rotate the node plane so that b - a is real and positive
    rot = (b0 - a0) / abs(b0 - a0)
    m0 = (a0 + b0) / 2 / rot
    x0 = np.r_[m0.real, m0.imag, abs(b0 - a0) / 2, np.zeros(2 * d * (N - 1))]
    seed_val = objective(x0)

    best = None
    x_start = x0
    samples = cfg.samples
    # refine the boundary sampling until the dense check certifies containment
    for _ in range(3):
        cons = make_constraints(samples)
        res = minimize(objective, x_start, method="SLSQP",
                       constraints=[{"type": "ineq", "fun": cons}],
                       options={"maxiter": cfg.maxiter, "ftol": 1e-15})
        x = res.x
        if np.all(np.isfinite(x)) and cons(x).min() >= -1e-12 and objective(x) <= seed_val:
            gap = dense_gap(unpack(x)[2])
            best = (x, gap)
            if gap <= cfg.margin / 10:
                break
            x_start = x
        samples *= 4
    if best is None or best[1] > cfg.margin:
        a, b, co = unpack(x0)
        return LempertResult(float(np.arctanh(seed_val)), dense_gap(co), fallback=True,
                             coeffs=co, nodes=(a, b))
    x, gap = best
    a, b, co = unpack(x)
    return LempertResult(float(np.arctanh(objective(x))), gap, coeffs=co, nodes=(a, b))


# ---------------------------------------------------------------------------
# ball automorphisms and geodesics


def ball_automorphism(a, x):
    """The involutive automorphism of the ball exchanging a and 0.

    phi_a(x) = (a - P_a x - sqrt(1-|a|^2) Q_a x) / (1 - <x, a>); works on
    batches (..., d) and on high-precision arrays.
    """
    aa = ar.abs2(a)
    if aa == 0:
        return -x
    ip = ar.inner(x, np.broadcast_to(a, np.shape(x)) if not ar.is_hp(x) else _bcast_hp(a, x))
    ip_e = ip[..., None] if isinstance(ip, np.ndarray) else ip
    Px = ip_e * a / aa
    s = ar.sqrt(1 - aa)
    return (a - Px - s * (x - Px)) / (1 - ip_e)


def _bcast_hp(a, x):
    a = ar.to_hp(a)
    return np.broadcast_to(a, x.shape)


@dataclass(frozen=True, eq=False)
class Geodesic:
    """Complex geodesic phi: Delta -> D with phi(0) = basepoint.

    ``eval`` accepts scalar or array parameters; ``left_inverse`` maps points
    of D back to the disk, and ``retraction`` is eval after left_inverse.
    """

    domain: Domain
    basepoint: np.ndarray
    target: np.ndarray
    target_param: complex
    _base_ball: np.ndarray
    _dir: np.ndarray

    def eval(self, zeta):
        zeta = np.asarray(zeta)
        pts = ball_automorphism(self._base_ball, zeta[..., None] * self._dir)
        return self.domain.from_ball(pts)

    __call__ = eval

    def left_inverse(self, x):
        x = np.asarray(x)
        y = ball_automorphism(self._base_ball, self.domain.to_ball(x))
        return ar.inner(y, np.broadcast_to(self._dir, np.shape(y)) if not ar.is_hp(y) else _bcast_hp(self._dir, y))

    def retraction(self, x):
        return self.eval(self.left_inverse(x))


def _check_geodesic_domain(D):
    if not D.closed_form:
        raise UnsupportedOperation("complex geodesics are only available on disk, ball and linear images")


def geodesic_through(D, z, target):
    """Geodesic with phi(0) = z and phi(r) = target (r = tanh k_D(z, target)) or phi(1) = target on the boundary."""
    _check_geodesic_domain(D)
    z = ar.to_float(as_point(z, D))
    target = ar.to_float(as_point(target, D))
    _require_inside(D, z)
    zb, tb = D.to_ball(z), D.to_ball(target)
    nt = np.linalg.norm(tb)
    if nt > 1 + 1e-10:
        raise DomainError("target lies outside the closed domain")
    v = ball_automorphism(zb, tb)
    r = np.linalg.norm(v)
    if r < 1e-15:
        raise DomainError("target coincides with the basepoint")
    on_boundary = abs(nt - 1) <= 1e-10
    v = v / r
    param = 1.0 if on_boundary else float(r)
    return Geodesic(D, z, target, param, zb, v)


def geodesic_between(D, sigma, tau):
    """Geodesic with phi(-1) = sigma and phi(1) = tau for distinct boundary points."""
    _check_geodesic_domain(D)
    sb = D.to_ball(ar.to_float(as_point(sigma, D)))
    tb = D.to_ball(ar.to_float(as_point(tau, D)))
    sb, tb = sb / np.linalg.norm(sb), tb / np.linalg.norm(tb)
    L = np.linalg.norm(tb - sb)
    if L < 1e-12:
        raise DomainError("boundary points must be distinct")
    u = (tb - sb) / L
    lam_c = -np.vdot(u, sb)
    R = abs(lam_c)
    om_s = (0 - lam_c) / R
    om_t = (L - lam_c) / R
    da = np.angle(om_t / om_s)
    if da >= np.pi:
        da -= 2 * np.pi
    half = abs(da) / 2
    mid = om_s * np.exp(1j * da / 2) * (1 - np.sin(half)) / np.cos(half) if half < np.pi / 2 else 0.0
    p0 = D.from_ball(sb + (lam_c + R * mid) * u)
    return geodesic_through(D, p0, D.from_ball(tb))


def project_to_boundary(D, z):
    """Radial projection (in the ball chart) onto the boundary."""
    z = ar.to_float(as_point(z, D))
    if not D.closed_form:
        c = D.center
        u = (z - c) / np.linalg.norm(z - c)
        t = _ray_hits(D.rho, c, u[None, :])[0]
        return c + t * u
    zb = D.to_ball(z)
    return D.from_ball(zb / np.linalg.norm(zb))


def on_boundary(D, xi, tol=1e-10):
    xi = ar.to_float(as_point(xi, D))
    if D.closed_form:
        return abs(np.linalg.norm(D.to_ball(xi)) - 1) <= tol
    return abs(D.rho(xi)) <= tol


def inward_normal(D, xi):
    """Unit inward normal at a boundary point, as a complex vector of R^{2d}."""
    g = D.grad_rho(ar.to_float(as_point(xi, D)))
    return -g / np.linalg.norm(g)


# ---------------------------------------------------------------------------
# horofunctions and K-regions


def _h0(xb, tb):
    one_minus = 1 - ar.inner(xb, np.broadcast_to(tb, np.shape(xb)) if not ar.is_hp(xb) else _bcast_hp(tb, xb))
    num = one_minus.real ** 2 + one_minus.imag ** 2
    return num / (1 - ar.abs2(xb))


def horofunction(D, tau, p, z, method="auto", tol=1e-6, levels=8, dist=None):
    """h_{tau,p}(z), the horofunction with centre tau and pole p.

    Closed form on disk, ball and linear images; on general domains (or with
    ``method='extrapolate'``) the limit of k(z, w_k) - k(p, w_k) along
    w_k = tau - 2^-k (tau - p) is Richardson-extrapolated.  ``z`` may be a
    batch of points (..., d) on closed-form domains.
    """
    p = as_point(p, D)
    tau = ar.to_float(as_point(tau, D))
    if np.linalg.norm(ar.to_float(p) - tau) < 1e-12:
        raise DomainError("pole is within 1e-12 of the horosphere centre")
    use_closed = D.closed_form and method in ("auto", "closed")
    if use_closed:
        tb = D.to_ball(tau)
        tb = tb / np.linalg.norm(tb)
        z = np.asarray(z) if ar.is_hp(z) else np.asarray(z, dtype=complex)
        return _h0(D.to_ball(z), tb) / _h0(D.to_ball(p), tb)
    if method == "closed":
        raise UnsupportedOperation("no closed-form horofunction for general domains")
    z = as_point(z, D)
    dist = dist or (lambda a, b: distance(D, a, b))
    pf, zf = ar.to_float(p), ar.to_float(z)
    g = []
    for k in range(1, levels + 1):
        wk = tau - 2.0 ** (-k) * (tau - pf)
        g.append(float(dist(zf, wk)) - float(dist(pf, wk)))
    limit, err = richardson(np.array(g), ratio=2.0)
    if not err <= tol:
        raise EstimationError("horofunction limit did not settle (error %.3g)" % err,
                              partial={"samples": g, "estimate": limit, "error": err})
    return float(np.exp(2 * limit))


def kregion_gauge(D, tau, p, z):
    """1/2 log h_{tau,p}(z) + k_D(p, z); z lies in K_p(tau, M) iff the gauge is < log M.

    A 2-D ``z`` is a batch of points (closed-form domains only).
    """
    h = horofunction(D, tau, p, z)
    if np.ndim(z) == 2 and not ar.is_hp(z):
        if not D.closed_form:
            raise UnsupportedOperation("batched gauge needs a closed-form domain")
        p = as_point(p, D)
        return np.log(h) / 2 + _ball_dist_raw(D.to_ball(np.asarray(z)), D.to_ball(p)[None, :])
    return ar.log(h) / 2 + distance(D, p, z)


def kregion_pole_constant(D, tau, p, q):
    """Explicit L with K_p(tau, M/L) in K_q(tau, M) in K_p(tau, M L)."""
    return float(np.exp(float(distance(D, p, q)) + abs(float(ar.log(horofunction(D, tau, p, q))) / 2)))


def richardson(seq, ratio=2.0, max_order=4, noise=None):
    """Richardson extrapolation of a sequence whose error expands in powers of 1/ratio^k.

    Returns (estimate, error) where the error is the gap between the two
    best extrapolants.  ``noise`` gives per-term absolute error bounds
    (e.g. rounding); they are propagated through the table and added.
    """
    seq = np.asarray(seq, dtype=float)
    n = len(seq)
    if n < 2:
        return float(seq[-1]), np.inf
    order = min(max_order, n - 1)
    tail = seq[n - order - 1:]
    table = [tail]
    nz = [np.zeros(order + 1) if noise is None else np.abs(np.asarray(noise, dtype=float))[n - order - 1:]]
    for j in range(1, order + 1):
        prev, pn = table[-1], nz[-1]
        f = ratio ** j
        table.append((f * prev[1:] - prev[:-1]) / (f - 1))
        nz.append((f * pn[1:] + pn[:-1]) / (f - 1))
    best = table[-1][-1]
    second = table[-2][-1]
    err = abs(best - second) + nz[-1][-1]
    return float(best), float(err)


# ---------------------------------------------------------------------------
# Euclidean boundary distance


def _ellipsoid_dist(axes, y):
    """Distance from an interior point y to the boundary of the axis-aligned ellipsoid."""
    axes = np.asarray(axes, dtype=float)
    y = np.abs(np.asarray(y, dtype=float))
    amin = axes.min()
    is_min = np.isclose(axes, amin, rtol=0, atol=1e-14)

    def F(t):
        return np.sum((axes * y / (t + axes ** 2)) ** 2) - 1

    lo = -amin ** 2
    left = lo * (1 - 1e-15)
    if np.all(y[is_min] == 0) or F(left) < 0:
        rest = ~is_min
        x = np.zeros_like(y)
        x[rest] = axes[rest] ** 2 * y[rest] / (axes[rest] ** 2 - amin ** 2)
        s = 1 - np.sum((x[rest] / axes[rest]) ** 2)
        if s >= 0:
            k = np.flatnonzero(is_min)[0]
            x[k] = amin * np.sqrt(s)
            return float(np.linalg.norm(x - y))
    t = brentq(F, left, 0.0, xtol=1e-300, rtol=1e-15, maxiter=500)
    x = axes ** 2 * y / (t + axes ** 2)
    return float(np.linalg.norm(x - y))


def boundary_dist(D, z):
    """Euclidean distance from z to the boundary of D (0 on the boundary)."""
    z = as_point(z, D)
    if D.kind in (DISK, BALL):
        r = ar.sqrt(ar.abs2(z))
        return max(1 - r, 0 * r)
    z = ar.to_float(z)
    if D.kind == LINEAR_IMAGE:
        if not D.contains(z):
            return 0.0
        U, s, _ = np.linalg.svd(D.matrix)
        y = U.conj().T @ z
        return _ellipsoid_dist(np.r_[s, s], np.r_[y.real, y.imag])
    if D.rho(z) >= 0:
        return 0.0
    return _general_boundary_dist(D, z)


def _general_boundary_dist(D, z):
    d = D.dim
    rng = np.random.default_rng(12345)
    dirs = rng.normal(size=(512, 2 * d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    cdirs = dirs[:, :d] + 1j * dirs[:, d:]
    t = _ray_hits(D.rho, z, cdirs)
    x0 = z + t.min() * cdirs[np.argmin(t)]
    zr = np.r_[z.real, z.imag]

    def to_c(x):
        return x[:d] + 1j * x[d:]

    def cons(x):
        return float(D.rho(to_c(x)))

    def cons_jac(x):
        g = D.grad_rho(to_c(x))
        return np.r_[g.real, g.imag]

    res = minimize(lambda x: np.sum((x - zr) ** 2), np.r_[x0.real, x0.imag],
                   jac=lambda x: 2 * (x - zr), method="SLSQP",
                   constraints=[{"type": "eq", "fun": cons, "jac": cons_jac}],
                   options={"ftol": 1e-16, "maxiter": 200})
    best = float(t.min())
    if res.success and abs(cons(res.x)) < 1e-10:
        best = min(best, float(np.sqrt(np.sum((res.x - zr) ** 2))))
    return best


def check_strong_convexity(D, samples=64, seed=0):
    """Sampled test that the tangential real Hessian of rho is positive definite.

    Returns (ok, smallest tangential eigenvalue); heuristic only.
    """
    d = D.dim
    rng = np.random.default_rng(seed)
    dirs = rng.normal(size=(samples, 2 * d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    cdirs = dirs[:, :d] + 1j * dirs[:, d:]
    t = _ray_hits(D.rho, D.center, cdirs)
    worst = np.inf
    h = 1e-4

    def f(x):
        return float(D.rho(x[:d] + 1j * x[d:]))

    for xb in D.center + t[:, None] * cdirs:
        x = np.r_[xb.real, xb.imag]
        n = 2 * d
        H = np.zeros((n, n))
        E = np.eye(n) * h
        for i in range(n):
            for j in range(i, n):
                H[i, j] = H[j, i] = (f(x + E[i] + E[j]) - f(x + E[i] - E[j])
                                     - f(x - E[i] + E[j]) + f(x - E[i] - E[j])) / (4 * h * h)
        g = D.grad_rho(xb)
        g = np.r_[g.real, g.imag]
        Q, _ = np.linalg.qr(np.c_[g, np.eye(n)])
        tang = Q[:, 1:n]
        worst = min(worst, np.linalg.eigvalsh(tang.T @ H @ tang).min())
    return bool(worst > 0), float(worst)


# ---------------------------------------------------------------------------
# horosphere sampling (closed-form domains)


def _frame(sb):
    """Unitary matrix whose first column is the unit vector sb."""
    d = len(sb)
    M = np.eye(d, dtype=complex)
    M[:, 0] = sb
    Q, _ = np.linalg.qr(M)
    Q[:, 0] *= sb[0] / Q[0, 0] if abs(Q[0, 0]) > 1e-12 else np.vdot(Q[:, 0], sb)
    return Q


def _horo_ellipsoid(D, sigma, p, R):
    sb = D.to_ball(ar.to_float(as_point(sigma, D)))
    sb = sb / np.linalg.norm(sb)
    R0 = R * _h0(D.to_ball(ar.to_float(as_point(p, D))), sb)
    return sb, _frame(sb), 1 / (1 + R0), R0 / (1 + R0), np.sqrt(R0 / (1 + R0))


def sample_horosphere(D, sigma, p, R, n, rng):
    """n points uniformly distributed (in the ball chart) in the horosphere E_p(sigma, R)."""
    _check_geodesic_domain(D)
    sb, W, c, r1, r2 = _horo_ellipsoid(D, sigma, p, R)
    d = D.dim
    g = rng.normal(size=(n, 2 * d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    g *= rng.uniform(size=(n, 1)) ** (1 / (2 * d))
    v = g[:, :d] + 1j * g[:, d:]
    v[:, 0] = c + r1 * v[:, 0]
    v[:, 1:] *= r2
    pts = v @ W.T
    return D.from_ball(pts)


def horosphere_extent(D, sigma, p, R, n=4000):
    """Largest Euclidean distance from sigma to the closure of E_p(sigma, R) (sampled boundary)."""
    _check_geodesic_domain(D)
    sb, W, c, r1, r2 = _horo_ellipsoid(D, sigma, p, R)
    d = D.dim
    rng = np.random.default_rng(7)
    g = rng.normal(size=(n, 2 * d))
    th = np.linspace(0, 2 * np.pi, 721)
    g = np.r_[g, np.c_[np.cos(th), np.sin(th), np.zeros((len(th), 2 * d - 2))]]
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    v = g[:, :d] + 1j * g[:, d:]
    v[:, 0] = c + r1 * v[:, 0]
    v[:, 1:] *= r2
    pts = D.from_ball(v @ W.T)
    sigma = D.from_ball(sb)
    return float(np.max(np.linalg.norm(pts - sigma, axis=1)))
