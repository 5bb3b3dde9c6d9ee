"""Domains, distances, geodesics and horospheres against closed forms."""

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kobdyn import geometry as geo
from kobdyn import _arith as ar
from kobdyn.errors import DomainError

B2 = geo.unit_ball(2)
DISK = geo.unit_disk()


def oracle_poincare(z, w):
    # artanh of the pseudo-hyperbolic distance
    return np.arctanh(abs((z - w) / (1 - np.conj(w) * z)))


def oracle_ball(z, w):
    z, w = np.asarray(z, complex), np.asarray(w, complex)
    x = (1 - np.vdot(z, z).real) * (1 - np.vdot(w, w).real) / abs(1 - np.vdot(w, z)) ** 2
    return np.arctanh(np.sqrt(1 - x))


def rand_ball(rng, d, scale=0.95):
    g = rng.normal(size=2 * d)
    g *= scale * rng.uniform() ** (1 / (2 * d)) / np.linalg.norm(g)
    return g[:d] + 1j * g[d:]


def _into_ball(t):
    v = np.array([t[0] + 1j * t[1], t[2] + 1j * t[3]])
    return v * 0.97 / max(1.0, np.linalg.norm(v))


coord = st.floats(-1, 1, allow_nan=False)
ball_pt = st.tuples(coord, coord, coord, coord).map(_into_ball)


def test_poincare_half():
    assert abs(geo.poincare_dist(0, 0.5) - 0.5 * np.log(3)) < 1e-12


def test_poincare_matches_pseudohyperbolic_form():
    rng = np.random.default_rng(1)
    for _ in range(50):
        z, w = (complex(*rng.uniform(-0.7, 0.7, 2)) for _ in range(2))
        assert abs(geo.poincare_dist(z, w) - oracle_poincare(z, w)) < 1e-12


def test_ball_distance_matches_closed_form():
    rng = np.random.default_rng(2)
    for _ in range(50):
        z, w = rand_ball(rng, 2), rand_ball(rng, 2)
        assert abs(float(geo.ball_dist(z, w)) - oracle_ball(z, w)) < 1e-10


def test_ball_distance_near_boundary_against_mpmath():
    # 1 - |z| = 1e-12: the naive formula loses everything, the stable one should not
    z = np.array([1 - 1e-12, 0], complex)
    w = np.array([0.3, 0.2j])
    mpmath.mp.dps = 50
    zz = [mpmath.mpf(z[0].real), 0]  # the exact binary values, not the decimals
    ww = [mpmath.mpf(0.3), mpmath.mpc(0, 0.2)]
    inner = sum(a * mpmath.conj(b) for a, b in zip(ww, zz))
    x = (1 - sum(abs(a) ** 2 for a in zz)) * (1 - sum(abs(a) ** 2 for a in ww)) / abs(1 - inner) ** 2
    ref = mpmath.atanh(mpmath.sqrt(1 - x))
    assert abs(float(geo.ball_dist(z, w)) - float(ref)) < 1e-8


def test_hp_distance_agrees_with_float():
    z = np.array([0.3 + 0.1j, -0.2j])
    w = np.array([-0.5, 0.4])
    hp = geo.ball_dist(ar.to_hp(z), ar.to_hp(w))
    assert ar.is_hp(hp)
    assert abs(float(hp) - float(geo.ball_dist(z, w))) < 1e-14


def test_distance_rejects_outside_points():
    with pytest.raises(DomainError):
        geo.distance(B2, [1.1, 0], [0, 0])


def test_distance_zero_on_diagonal():
    z = np.array([0.4, 0.1j])
    assert geo.distance(B2, z, z) == 0


@settings(max_examples=60, deadline=None)
@given(ball_pt, ball_pt, ball_pt)
def test_metric_axioms(z, w, u):
    dzw = float(geo.distance(B2, z, w))
    assert dzw >= 0
    assert abs(dzw - float(geo.distance(B2, w, z))) < 1e-12
    assert dzw <= float(geo.distance(B2, z, u)) + float(geo.distance(B2, u, w)) + 1e-10


@settings(max_examples=40, deadline=None)
@given(ball_pt, ball_pt, st.floats(0, 2 * np.pi), st.floats(0, 2 * np.pi), st.floats(0, np.pi / 2))
def test_unitary_invariance(z, w, a, b, c):
    U = np.array([[np.cos(c) * np.exp(1j * a), -np.sin(c) * np.exp(-1j * b)],
                  [np.sin(c) * np.exp(1j * b), np.cos(c) * np.exp(-1j * a)]])
    assert np.allclose(U.conj().T @ U, np.eye(2))
    assert abs(float(geo.distance(B2, U @ z, U @ w)) - float(geo.distance(B2, z, w))) < 1e-10


@settings(max_examples=40, deadline=None)
@given(ball_pt, ball_pt, ball_pt)
def test_automorphisms_preserve_distance(a, z, w):
    fz, fw = geo.ball_automorphism(a, z), geo.ball_automorphism(a, w)
    assert abs(float(geo.distance(B2, fz, fw)) - float(geo.distance(B2, z, w))) < 1e-8


def test_ball_automorphism_swaps_a_and_zero():
    a = np.array([0.3, -0.4j])
    assert np.allclose(geo.ball_automorphism(a, a), 0, atol=1e-15)
    assert np.allclose(geo.ball_automorphism(a, np.zeros(2)), a, atol=1e-15)


def test_linear_image_distance_is_pullback():
    T = np.array([[2.0, 0.5j], [0, 1.0]])
    D = geo.linear_image(T)
    rng = np.random.default_rng(3)
    for _ in range(20):
        u, v = rand_ball(rng, 2), rand_ball(rng, 2)
        assert abs(float(geo.distance(D, T @ u, T @ v)) - oracle_ball(u, v)) < 1e-10


def test_lempert_on_ball_pairs():
    rng = np.random.default_rng(4)
    for _ in range(5):
        z, w = rand_ball(rng, 2, 0.9), rand_ball(rng, 2, 0.9)
        res = geo.lempert_numeric(B2, z, w)
        val, gap = res
        assert abs(val - oracle_ball(z, w)) < 1e-3
        assert gap <= 1e-6
        assert val >= oracle_ball(z, w) - 1e-9  # a feasible disk can only overestimate


def test_lempert_on_ellipsoid_matches_linear_pullback():
    E = geo.weighted_ellipsoid([1.0, 2.0])
    T = np.diag([1.0, 1 / np.sqrt(2)])
    rng = np.random.default_rng(5)
    for _ in range(3):
        u, v = rand_ball(rng, 2, 0.85), rand_ball(rng, 2, 0.85)
        res = geo.lempert_numeric(E, T @ u, T @ v)
        assert abs(res.value - oracle_ball(u, v)) < 1e-3
        assert res.feasibility_gap <= 1e-6


def test_lempert_same_point():
    assert geo.lempert_numeric(B2, [0.1, 0.2], [0.1, 0.2]).value == 0


def test_geodesic_is_isometry():
    z = np.array([0.2, 0.1j])
    g = geo.geodesic_through(B2, z, [0.6, -0.3])
    assert np.allclose(g(0.0), z, atol=1e-14)
    s, t = -0.3 + 0.2j, 0.7
    assert abs(float(geo.distance(B2, g(s), g(t))) - oracle_poincare(s, t)) < 1e-10
    assert abs(g.left_inverse(g(t)) - t) < 1e-12
    assert np.allclose(g(g.target_param), [0.6, -0.3], atol=1e-10)


def test_geodesic_to_boundary_point():
    sigma = np.array([0.6, 0.8j])
    g = geo.geodesic_through(B2, np.zeros(2), sigma)
    assert np.linalg.norm(g(1 - 1e-9) - sigma) < 1e-8


def test_geodesic_between_boundary_points():
    sigma, tau = np.array([1.0, 0]), np.array([0, 1.0])
    g = geo.geodesic_between(B2, sigma, tau)
    ends = {tuple(np.round(g(r), 6)) for r in (-1 + 1e-12, 1 - 1e-12)}
    assert ends == {(1 + 0j, 0j), (0j, 1 + 0j)}


def test_horofunction_disk_closed_form():
    rng = np.random.default_rng(6)
    for _ in range(20):
        z = complex(*rng.uniform(-0.6, 0.6, 2))
        h = geo.horofunction(DISK, [1], [0], [z])
        assert abs(h - abs(1 - z) ** 2 / (1 - abs(z) ** 2)) < 1e-12


@settings(max_examples=50, deadline=None)
@given(ball_pt, ball_pt, ball_pt, st.floats(0, 2 * np.pi))
def test_pole_change_identity(p, q, z, th):
    tau = np.array([np.cos(th), 1j * np.sin(th)])
    lhs = geo.horofunction(B2, tau, q, z) * geo.horofunction(B2, tau, p, q)
    rhs = geo.horofunction(B2, tau, p, z)
    assert abs(lhs - rhs) <= 1e-10 * rhs


def test_horofunction_general_domain_converges_to_closed_form():
    ball_as_general = geo.general_domain(lambda z: np.sum(np.abs(z) ** 2, axis=-1) - 1, 2)
    tau = np.array([1.0, 0])
    z = np.array([0.2, 0.3j])
    h = geo.horofunction(ball_as_general, tau, np.zeros(2), z)
    assert abs(h - geo.horofunction(B2, tau, np.zeros(2), z)) < 1e-4 * h


def test_kregion_pole_comparability():
    tau = np.array([1.0, 0])
    p, q = np.zeros(2), np.array([0.4, -0.3j])
    L = geo.kregion_pole_constant(B2, tau, p, q)
    rng = np.random.default_rng(7)
    for _ in range(200):
        z = rand_ball(rng, 2, 0.99)
        gp, gq = geo.kregion_gauge(B2, tau, p, z), geo.kregion_gauge(B2, tau, q, z)
        assert abs(gp - gq) <= np.log(L) + 1e-9


def test_boundary_dist():
    assert abs(geo.boundary_dist(B2, [0.3, 0.4]) - 0.5) < 1e-15
    D = geo.linear_image(np.diag([1.0, 0.5]))
    assert abs(geo.boundary_dist(D, [0, 0]) - 0.5) < 1e-12
    assert abs(geo.boundary_dist(D, [0.8, 0]) - geo.boundary_dist(D, [0.8, 0])) == 0
    E = geo.weighted_ellipsoid([1.0, 4.0])
    assert abs(geo.boundary_dist(E, [0, 0]) - 0.5) < 1e-6


def test_boundary_helpers():
    z = np.array([0.3, 0.4j])
    xi = geo.project_to_boundary(B2, z)
    assert np.allclose(xi, z / np.linalg.norm(z))
    assert geo.on_boundary(B2, xi)
    assert not geo.on_boundary(B2, z)
    assert np.allclose(geo.inward_normal(B2, xi), -xi)


def test_strong_convexity():
    ok, lam = geo.check_strong_convexity(geo.weighted_ellipsoid([1.0, 3.0]))
    assert ok and lam > 0


def test_horosphere_samples_lie_in_horoball():
    rng = np.random.default_rng(8)
    sigma = np.array([1.0, 0])
    pts = geo.sample_horosphere(B2, sigma, np.zeros(2), 0.5, 200, rng)
    h = geo.horofunction(B2, sigma, np.zeros(2), pts)
    assert np.all(h < 0.5 * (1 + 1e-12))
    assert h.max() > 0.4  # fills the horoball, not a shrunken copy
    ext = geo.horosphere_extent(B2, sigma, np.zeros(2), 0.5)
    # |1-x|^2 + |z2|^2 on the boundary of {|1-z1|^2 < R(1-|z|^2)}: max of 2x - 2x^2 at R = 1/2
    assert abs(ext - np.sqrt(0.5)) < 1e-3


def test_richardson_exact_on_geometric_error():
    k = np.arange(1, 8)
    est, err = geo.richardson(1 + 3 * 2.0 ** -k + 2 * 4.0 ** -k)
    assert abs(est - 1) < 1e-13 and err < 1e-12
