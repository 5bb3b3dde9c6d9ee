"""Backward orbits, the construction at a repelling point, and the verification suites."""

import csv
import io

import numpy as np
import pytest

from kobdyn import backward as bw
from kobdyn import dynamics as dyn
from kobdyn import geometry as geo
from kobdyn import holomap as hm
from kobdyn import _arith as ar
from kobdyn.errors import BoundedStepError, IsolationViolation

MOB = hm.DiskMobius(0.5)
BLA = hm.DiskBlaschkeQuad(0.5)


def test_backward_step_min_step():
    w, step, res = bw.backward_step(BLA, np.array([0.3 + 0.1j]))
    assert abs(BLA(w)[0] - (0.3 + 0.1j)) < 1e-13
    # the chosen preimage is the closer of the two
    others = [q for q in BLA.preimages([0.3 + 0.1j]).points]
    assert step <= min(float(geo.distance(BLA.domain, q, [0.3 + 0.1j])) for q in others) + 1e-12
    assert res < 1e-13


def test_backward_step_toward_target():
    z = np.array([0.3 + 0.1j])
    w, _, _ = bw.backward_step(BLA, z, bw.TOWARD, target=np.array([1.0]))
    pts = BLA.preimages(z).points
    assert abs(w[0] - 1) == pytest.approx(min(abs(complex(q[0]) - 1) for q in pts))


def test_mobius_backward_orbit_matches_inverse_iteration():
    orb = bw.backward_orbit(MOB, [0.0], 30, tau=np.array([1.0]))
    inv = MOB.inverse()
    z = np.array([0.0 + 0j])
    for n in range(1, 31):
        z = inv(z)
        assert abs(complex(orb.points[n][0]) - z[0]) < 1e-12 * max(1, n)
    assert np.allclose(orb.steps, 0.5 * np.log(3), atol=1e-9)
    assert orb.converged and abs(complex(orb.limit[0]) + 1) < 1e-6
    # t_n = 3^n t_0 exactly for this automorphism
    assert np.allclose(orb.t / 3.0 ** np.arange(31), orb.t[0], rtol=1e-8)


def test_high_precision_switch():
    orb = bw.backward_orbit(MOB, [0.0], 40, tau=np.array([1.0]))
    assert "high_precision" in orb.flags
    assert ar.is_hp(orb.points[-1])
    assert abs(complex(orb.points[-1][0]) + 1) < 1e-15


def test_step_cap_raises_with_partial_orbit():
    with pytest.raises(BoundedStepError) as e:
        bw.backward_orbit(MOB, [0.0], 10, a_max=0.3)
    assert e.value.orbit.n == 0


def test_construct_at_repelling_point():
    orb = bw.construct_backward_orbit_at(BLA, [1.0])
    assert np.all(orb.residuals <= 1e-10)
    assert orb.step_sup <= 0.5 * np.log(4 / 3) + 0.05
    assert abs(complex(orb.points[-1][0]) - 1) < 1e-4
    for a, b in zip(orb.points[1:], orb.points[:-1]):
        assert abs(complex(BLA(np.asarray(a))[0]) - complex(b[0])) < 1e-10


def test_construct_rejects_contaminated_window():
    # the Wolff point 1 of the Mobius map lies in a window of radius 3 about -1
    w = bw.IsolationWindow(np.array([-1.0 + 0j]), 3.0, np.inf)
    with pytest.raises(IsolationViolation):
        bw.construct_backward_orbit_at(MOB, [-1.0], w)


def test_window_violations():
    w = bw.IsolationWindow(np.array([1.0 + 0j]), 0.5, 2.0)
    est = dyn.DilationEstimate(1.5, np.zeros(1), 1e-9, [])
    assert len(w.violations([(np.array([np.exp(0.3j)]), est)])) == 1  # |e^{0.3i} - 1| ~ 0.3
    assert w.violations([(np.array([-1.0 + 0j]), est)]) == []
    with pytest.raises(ValueError):
        bw.IsolationWindow(np.array([1.0]), 0.0, 1.0)


def test_step_limit_check():
    rep = bw.step_limit_check(BLA, [1.0])
    assert rep.passed
    assert abs(rep.data["beta"] - 4 / 3) < 1e-6


def test_limsup_step():
    assert bw.limsup_step([1.0] * 5) == 1.0
    n = np.arange(1, 30)
    s = 2 - 0.5 ** n
    assert abs(bw.limsup_step(s) - 2) < 1e-12


def test_theorem01_and_battery_hyperbolic():
    orb = bw.backward_orbit(MOB, [0.0], 40, tau=np.array([1.0]))
    cls = dyn.classify(MOB)
    rep = bw.theorem01_suite(MOB, orb, cls=cls)
    assert rep.passed, rep.summary()
    assert rep.data["sigma_eq_tau"] is False
    assert abs(rep.data["beta_sigma"] - 3) < 1e-6
    bat = bw.inequality_battery(MOB, orb, cls=cls)
    assert bat.passed, bat.summary()
    assert bw.limsup_step_fixedpoint_check(MOB, orb).passed


def test_theorem01_rejects_forward_orbit():
    # a forward orbit converges to the attracting point (beta < 1), not a repelling one
    orb = dyn.iterate_forward(MOB, [0.0], 30)
    orb.limit = orb.points[-1]
    rep = bw.theorem01_suite(MOB, orb, cls=dyn.classify(MOB))
    assert not rep.passed
    assert not rep.check("beta_ge_1").passed


def test_elliptic_battery_uses_contraction():
    cls = dyn.classify(BLA)
    c = dyn.contraction_constant(BLA, [0.0], 0.5).c
    orb = bw.backward_orbit(BLA, [0.9], 200, policy=bw.TOWARD, target=np.array([1.0]))
    bat = bw.inequality_battery(BLA, orb, cls=cls, c=c)
    assert bat.passed, bat.summary()
    assert bat.check("s_contraction").passed


def test_csv_layout():
    orb = bw.backward_orbit(MOB, [0.0], 5, tau=np.array([1.0]))
    text = orb.to_csv()
    assert "\r\n" in text
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["n", "re_z1", "im_z1", "step", "residual", "t_n", "s_n", "gauge"]
    assert len(rows) == 7
    assert float(rows[3][1]) == complex(orb.points[2][0]).real  # repr round-trips exactly
