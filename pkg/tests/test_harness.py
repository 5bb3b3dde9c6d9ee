"""Config validation, exit codes, emitted files and the command line."""

import json
import os
import subprocess
import sys

import pytest

from kobdyn import cli, harness

MOBIUS = {"schema_version": 1, "name": "m", "seed": 3, "task": "backward", "domain": {"type": "disk"},
          "map": {"type": "disk_mobius", "a": 0.5}, "params": {"z0": [0], "n": 10}}


def cfg(**over):
    c = json.loads(json.dumps(MOBIUS))
    c.update(over)
    return c


@pytest.mark.parametrize("config,field", [
    ({k: v for k, v in MOBIUS.items() if k != "seed"}, "/seed"),
    (cfg(seed=-1), "/seed"),
    (cfg(task="fly"), "/task"),
    (cfg(domain={"type": "ball"}), "/domain/dim"),
    (cfg(map={"type": "disk_mobius", "a": 2}), "/map/a"),
    (cfg(params={"z0": [1.5]}), "/params/z0"),
    (cfg(params={"policy": "toward", "target": [0.9]}), "/params/target"),
    (cfg(schema_version=99), "/schema_version"),
])
def test_config_errors_exit_2_with_field(config, field):
    code, body = harness.run(config)
    assert code == harness.EXIT_CONFIG
    assert body["error"]["field"] == field


def test_numeric_failure_exits_3():
    code, body = harness.run(cfg(params={"z0": [0], "n": 10, "a_max": 0.1}))
    assert code == harness.EXIT_NUMERIC
    assert body["error"]["type"] == "BoundedStepError"


def test_failed_expectation_exits_1():
    code, body = harness.run(cfg(expect={"kind": "parabolic"}))
    assert code == harness.EXIT_CHECKS_FAILED
    bad = [c for c in body["report"]["checks"] if not c["passed"]]
    assert [c["name"] for c in bad] == ["expect_kind"]
    assert bad[0]["witness"] is not None


def test_run_writes_files(tmp_path):
    code, _ = harness.run(cfg(), tmp_path)
    assert code == 0
    names = sorted(os.listdir(tmp_path))
    assert names == ["orbit.csv", "orbit.json", "plot.json", "report.json"]
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["schema_version"] == harness.SCHEMA_VERSION and rep["seed"] == 3
    plot = json.loads((tmp_path / "plot.json").read_text())
    assert len(plot["orbit"]) == 11
    assert all(len(v) >= 1 for v in plot["horospheres"].values())


def test_seed_override(tmp_path):
    _, body = harness.run(cfg(), None, seed=11)
    assert body["seed"] == 11


def test_reruns_are_byte_identical(tmp_path):
    harness.run(cfg(), tmp_path / "a")
    harness.run(cfg(), tmp_path / "b")
    for name in ("report.json", "orbit.csv", "plot.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_suite_empty_dir(tmp_path):
    code, summary = harness.suite(tmp_path)
    assert code == 0 and summary["configs"] == 0


def test_suite_order_and_worst_code(tmp_path):
    (tmp_path / "b.json").write_text(json.dumps(cfg()))
    (tmp_path / "a.json").write_text("{not json")
    code, summary = harness.suite(tmp_path, tmp_path / "out")
    assert [r["config"] for r in summary["results"]] == ["a.json", "b.json"]
    assert code == harness.EXIT_CONFIG
    assert (tmp_path / "out" / "suite.json").exists()
    assert not [p for p in (tmp_path / "out").rglob("*.tmp")]


def test_distance_bench_small():
    c = {"seed": 1, "task": "distance-bench", "domain": {"type": "ball", "dim": 2}, "params": {"pairs": 3}}
    code, body = harness.run(c)
    assert code == 0, body
    assert body["report"]["data"]["max_error"] < 1e-3


def test_cli_run_and_classify(tmp_path, capsys):
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg()))
    assert cli.main(["run", str(p), "--out", str(tmp_path / "o")]) == 0
    assert "PASS" in capsys.readouterr().out
    assert cli.main(["classify", "--map", '{"type": "disk_mobius", "a": 0.5}']) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["kind"] == "hyperbolic"
    assert cli.main(["classify", "--map", '{"type": "disk_mobius"}']) == harness.EXIT_CONFIG


def test_cli_subprocess_logging(tmp_path):
    env = dict(os.environ, KOBDYN_LOG="DEBUG")
    r = subprocess.run([sys.executable, "-m", "kobdyn.cli", "suite", str(tmp_path)], env=env,
                       capture_output=True, text=True)
    assert r.returncode == 0
    assert "0 configs" in r.stdout


def test_identity_backward_gives_constant_rows(tmp_path):
    c = cfg(map={"type": "identity"}, params={"z0": [0.3], "n": 6}, expect={"constant_rows": True})
    code, body = harness.run(c, tmp_path)
    assert code == 0, body
    rows = (tmp_path / "orbit.csv").read_bytes().decode().split("\r\n")[1:-1]
    assert len(rows) == 7
    assert len({tuple(r.split(",")[1:3]) for r in rows}) == 1


def test_classify_config():
    c = cfg(task="classify", params={},
            expect={"kind": "hyperbolic", "wolff": [1], "beta_tau": 1 / 3, "beta_tau_tol": 1e-6})
    code, body = harness.run(c)
    assert code == 0
    assert body["report"]["data"]["classification"]["kind"] == "hyperbolic"
