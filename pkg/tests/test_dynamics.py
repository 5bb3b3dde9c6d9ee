"""Classification, dilation coefficients, boundary fixed points, Julia and contraction checks."""

import numpy as np
import pytest

from kobdyn import dynamics as dyn
from kobdyn import geometry as geo
from kobdyn import holomap as hm
from kobdyn.errors import ContradictionError

B2 = geo.unit_ball(2)


def angular_derivative_mobius(a, sigma):
    # f(z) = (z+a)/(1+az): f'(z) = (1-a^2)/(1+az)^2, real at the fixed points +-1
    return (1 - a * a) / (1 + a * sigma) ** 2


@pytest.mark.parametrize("sigma", [1.0, -1.0])
def test_dilation_matches_angular_derivative(sigma):
    est = dyn.dilation_coefficient(hm.DiskMobius(0.5), [sigma])
    assert abs(est.value - angular_derivative_mobius(0.5, sigma)) < 1e-6
    assert est.error_bar < 1e-6


def test_dilation_blaschke_at_one():
    # B(z) = z(z+a)/(1+az): B'(1) = 1 + (1-a)/(1+a)
    est = dyn.dilation_coefficient(hm.DiskBlaschkeQuad(0.5), [1.0])
    assert abs(est.value - 4 / 3) < 1e-6


def test_dilation_diverges_away_from_fixed_points():
    est = dyn.dilation_coefficient(hm.Scale(0.5), [1.0])
    assert est.diverges and est.value == np.inf


def test_dilation_pole_independence_on_ball():
    f = hm.BallMobiusAxis(0.5, 2)
    a = dyn.dilation_coefficient(f, [-1, 0], [0, 0])
    b = dyn.dilation_coefficient(f, [-1, 0], [0.3j, -0.4])
    assert abs(a.value - b.value) <= a.error_bar + b.error_bar
    assert abs(a.value - 3) < 1e-6


def test_boundary_fixed_point_test():
    f = hm.DiskBlaschkeQuad(0.5)
    ok, est = dyn.is_boundary_fixed_point(f, [1.0])
    assert ok and abs(est.value - 4 / 3) < 1e-6
    ok, _ = dyn.is_boundary_fixed_point(f, [1j])
    assert not ok


def test_find_boundary_fixed_points_of_mobius():
    found = dyn.find_boundary_fixed_points(hm.DiskMobius(0.5), samples=2000)
    pts = sorted(complex(p[0]).real for p, _ in found)
    assert len(pts) == 2
    assert np.allclose(pts, [-1, 1], atol=1e-6)


@pytest.mark.parametrize("f,kind,point", [
    (hm.DiskMobius(0.5), dyn.HYPERBOLIC, [1.0]),
    (hm.DiskBlaschkeQuad(0.5), dyn.STRONGLY_ELLIPTIC, [0.0]),
    (hm.DiskParabolic(1.0), dyn.PARABOLIC, [1.0]),
    (hm.Unitary(np.diag([np.exp(0.3j), np.exp(-1j)]), B2), dyn.ELLIPTIC_NON_STRONG, [0.0, 0.0]),
    (hm.BallMobiusAxis(0.5, 2), dyn.HYPERBOLIC, [1.0, 0.0]),
])
def test_classify(f, kind, point):
    c = dyn.classify(f)
    assert c.kind == kind
    assert np.allclose(c.point, point, atol=1e-6)


def test_classification_details():
    c = dyn.classify(hm.DiskMobius(0.5))
    assert abs(c.beta - 1 / 3) < 1e-6
    e = dyn.classify(hm.DiskBlaschkeQuad(0.5))
    assert abs(e.spectral_radius - 0.5) < 1e-9
    p = dyn.classify(hm.DiskParabolic(1.0))
    assert abs(p.beta - 1) < 1e-3


def test_julia_check_hyperbolic_ball():
    f = hm.BallMobiusAxis(0.5, 2)
    rep = dyn.julia_check(f, [1, 0], [1, 0], trials=300)
    assert rep.passed
    assert rep.data["max_ratio"] <= 1 / 3 + 1e-9


def test_julia_check_detects_wrong_beta():
    # claiming a smaller dilation than the true one must produce a witness
    rep = dyn.julia_check(hm.DiskMobius(0.5), [1.0], [1.0], trials=200, beta=0.2)
    assert not rep.passed
    assert rep.failures()[0].witness is not None


def test_wolff_consistency():
    assert dyn.wolff_consistency(hm.DiskMobius(0.5), samples=200).passed


def test_contraction_constant():
    est = dyn.contraction_constant(hm.DiskBlaschkeQuad(0.5), [0.0], 0.5, samples=500)
    # max of |B| on |z| = r is r(r+a)/(1+ar), attained at z = r
    r = np.tanh(np.linspace(0.5, 12, 200001))
    gap = np.arctanh(r * (r + 0.5) / (1 + 0.5 * r)) - np.arctanh(r)
    assert abs(est.c - np.exp(2 * gap.max())) < 1e-6
    assert est.c < 1


def test_contraction_constant_rejects_isometries():
    with pytest.raises(ContradictionError):
        dyn.contraction_constant(hm.Unitary(np.diag([np.exp(0.3j)]), geo.unit_disk()), [0.0], 0.5, samples=200)


def test_forward_orbit_converges_to_wolff_point():
    orb = dyn.iterate_forward(hm.DiskMobius(0.5), [0.0], 40)
    assert abs(orb.array()[-1, 0] - 1) < 1e-12
