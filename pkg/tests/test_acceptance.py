"""Acceptance criteria, each run through its golden config(s) and re-checked against closed forms.

Every test prints one ``CRITERION n: PASS|FAIL`` line (collected again in the
terminal summary) and enforces its runtime budget.
"""

import json
import time
from pathlib import Path

import numpy as np

from kobdyn import geometry as geo
from kobdyn import harness

GOLDEN = Path(__file__).resolve().parent.parent / "configs" / "golden"


def run_golden(*names):
    out, t0 = [], time.perf_counter()
    for n in names:
        cfg = json.loads((GOLDEN / n).read_text())
        code, body = harness.run(cfg)
        out.append((code, body))
    return out, time.perf_counter() - t0


def failed(body):
    return [c["name"] for c in body.get("report", {}).get("checks", []) if not c["passed"]] or body.get("error")


def judge(verdict, label, checks, elapsed, budget):
    checks = dict(checks, runtime=elapsed <= budget)
    bad = [k for k, ok in checks.items() if not ok]
    verdict(label, not bad, "%.1fs/%gs%s" % (elapsed, budget, "  failed: %s" % bad if bad else ""))
    assert not bad


def test_criterion_1_distance(verdict):
    (r_ball, r_ell), dt = run_golden("c1_distance_ball.json", "c1_distance_ellipsoid.json")
    ball, ell = r_ball[1], r_ell[1]
    judge(verdict, "CRITERION 1 distance oracles", {
        "poincare_half": abs(geo.poincare_dist(0, 0.5) - 0.5 * np.log(3)) < 1e-12,
        "ball_config": r_ball[0] == 0 and not failed(ball),
        "ball_100_pairs": ball["report"]["data"]["pairs"] == 100 and ball["report"]["data"]["max_error"] <= 1e-3,
        "ellipsoid_config": r_ell[0] == 0 and ell["report"]["data"]["max_error"] <= 1e-3,
    }, dt, 60)


def test_criterion_2_hyperbolic_disk(verdict):
    ((code, body),), dt = run_golden("c2_mobius_hyperbolic.json")
    d = body["report"]["data"]
    pts = d["orbit"]["points"]
    z40 = complex(*pts[40][0])
    cls = d["classification"]
    judge(verdict, "CRITERION 2 hyperbolic disk", {
        "config": code == 0 and not failed(body),
        "kind": cls["kind"] == "hyperbolic" and abs(complex(*cls["point"][0]) - 1) < 1e-6,
        "beta_tau": abs(cls["beta"] - 1 / 3) <= 1e-6,
        "z40": abs(z40 + 1) < 1e-6,
        "steps": np.allclose(d["orbit"]["steps"], 0.5 * np.log(3), rtol=0, atol=1e-9),
        "beta_sigma": abs(d["theorem01"]["beta_sigma"] - 3) <= 1e-3,
        "product": abs(d["theorem01"]["beta_sigma"] * cls["beta"] - 1) <= 1e-6,
        "t_n": np.allclose(np.array(d["orbit"]["t_n"]) / 3.0 ** np.arange(41), d["orbit"]["t_n"][0], rtol=1e-8),
        "sigma_ne_tau": d["theorem01"]["sigma_eq_tau"] is False,
    }, dt, 5)


def test_criterion_3_strongly_elliptic(verdict):
    ((code, body),), dt = run_golden("c3_blaschke_elliptic.json")
    d = body["report"]["data"]
    cls = d["classification"]
    judge(verdict, "CRITERION 3 strongly elliptic", {
        "config": code == 0 and not failed(body),
        "kind": cls["kind"] == "strongly_elliptic" and abs(complex(*cls["point"][0])) < 1e-9,
        "spectral": abs(cls["spectral_radius"] - 0.5) < 1e-9,
        "c_lt_1": d["contraction"]["c"] < 1,
        "beta_1": abs(d["theorem01"]["beta_sigma"] - 4 / 3) <= 1e-3,
        "s_contraction": any(c["name"] == "ineq_s_contraction" and c["passed"] for c in body["report"]["checks"]),
        "gauge_bounded": np.isfinite(d["theorem01"]["gauge_sup"]),
    }, dt, 10)


def test_criterion_4_construction(verdict):
    ((code, body),), dt = run_golden("c4_construct.json")
    d = body["report"]["data"]
    orb = d["orbit"]
    last = complex(*orb["points"][-1][0])
    lim = [c for c in body["report"]["checks"] if c["name"].startswith("step_limit_")]
    judge(verdict, "CRITERION 4 construction", {
        "config": code == 0 and not failed(body),
        "residuals": max(orb["residuals"]) <= 1e-10,
        "step_sup": max(orb["steps"]) <= 0.5 * np.log(4 / 3) + 0.05,
        "endpoint": abs(last - 1) < 1e-4,
        "step_limit": bool(lim) and all(c["passed"] for c in lim),
    }, dt, 60)


def test_criterion_5_ball(verdict):
    ((code, body),), dt = run_golden("c5_ball_hyperbolic.json")
    d = body["report"]["data"]
    last = np.array([complex(*c) for c in d["orbit"]["points"][-1]])
    wolff = np.array([complex(*c) for c in d["classification"]["point"]])
    beta = d["classification"]["beta"]
    judge(verdict, "CRITERION 5 ball", {
        "config": code == 0 and not failed(body),
        "wolff": np.allclose(wolff, [1, 0], atol=1e-6),
        "limit": np.max(np.abs(last - [-1, 0])) < 1e-5,
        "gauge_reported": np.isfinite(d["theorem01"]["gauge_sup"]),
        "julia": d["julia"]["max_ratio"] <= beta + 1e-9,
    }, dt, 30)


def test_criterion_6_parabolic(verdict):
    ((code, body),), dt = run_golden("c6_parabolic.json")
    d = body["report"]["data"]
    cls = d["classification"]
    judge(verdict, "CRITERION 6 parabolic", {
        "config": code == 0 and not failed(body),
        "kind": cls["kind"] == "parabolic",
        "beta_tau": abs(cls["beta"] - 1) <= 1e-3,
        "bounded_step": np.isfinite(max(d["orbit"]["steps"])),
        "sigma_eq_tau": d["theorem01"]["sigma_eq_tau"] is True,
        "iii": any(c["name"] == "orbit_sigma_tau" and c["passed"] for c in body["report"]["checks"]),
    }, dt, 10)


def test_criterion_7_poles(verdict):
    (disk, ball), dt = run_golden("c7_poles_disk.json", "c7_poles_ball.json")
    def names(body, prefix):
        return [c for c in body["report"]["checks"] if c["name"].startswith(prefix)]
    judge(verdict, "CRITERION 7 poles", {
        "disk": disk[0] == 0 and not failed(disk[1]),
        "ball": ball[0] == 0 and not failed(ball[1]),
        "three_pairs": len(names(disk[1], "pole_independence_")) == 3 and len(names(ball[1], "pole_independence_")) == 3,
        "pole_change": all(c["tolerance"] == 1e-10 for c in names(disk[1], "pole_change") + names(ball[1], "pole_change")),
    }, dt, 5)


def test_criterion_8_determinism(verdict, tmp_path):
    t0 = time.perf_counter()
    c1, _ = harness.suite(GOLDEN, tmp_path / "a")
    c2, _ = harness.suite(GOLDEN, tmp_path / "b")
    dt = time.perf_counter() - t0
    files_a = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*") if p.is_file())
    files_b = sorted(p.relative_to(tmp_path / "b") for p in (tmp_path / "b").rglob("*") if p.is_file())
    same = files_a == files_b and all((tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
                                      for f in files_a)
    judge(verdict, "CRITERION 8 determinism", {
        "suite_passes": c1 == 0 and c2 == 0,
        "covers_all": len([f for f in files_a if f.name == "report.json"]) == len(list(GOLDEN.glob("*.json"))),
        "byte_identical": same,
    }, dt, 600)
