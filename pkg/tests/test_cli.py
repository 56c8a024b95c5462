import json
import subprocess
import sys

import numpy as np
import pytest

from freeflyer import checks, cli, kinematics, scenarios, sim
from freeflyer import _kernels


def _run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def short_reach(tmp_path):
    cfg = scenarios.reference_reach().replace(duration=0.2, name="short")
    path = tmp_path / "short.json"
    path.write_text(sim.dump_scenario(cfg))
    return path


def test_availability_output(capsys):
    assert _run(["availability", "--mtbf", "9", "--mttr", "0.5", "--mtfs", "0.5"], capsys)[1] == "0.900000\n"
    assert _run(["availability", "--mtbf", "1", "--mttr", "0", "--mtfs", "0"], capsys)[1] == "1.00000\n"
    code, _, err = _run(["availability", "--mtbf", "0", "--mttr", "0", "--mtfs", "0"], capsys)
    assert code == 2 and "must be > 0" in err


def test_simulate_writes_two_files(short_reach, tmp_path, capsys):
    out = tmp_path / "out"
    code, stdout, _ = _run(["simulate", str(short_reach), "-o", str(out)], capsys)
    assert code == 0
    assert sorted(p.name for p in out.iterdir()) == ["short.csv", "short.summary.json"]
    assert str(out / "short.csv") in stdout


def test_simulate_is_byte_identical(short_reach, tmp_path, capsys):
    for d in ("a", "b"):
        assert _run(["simulate", str(short_reach), "-o", str(tmp_path / d)], capsys)[0] == 0
    assert (tmp_path / "a" / "short.csv").read_bytes() == (tmp_path / "b" / "short.csv").read_bytes()


def test_override_dt_doubles_steps(short_reach, tmp_path, capsys):
    _run(["simulate", str(short_reach), "-o", str(tmp_path / "a")], capsys)
    _run(["simulate", str(short_reach), "-o", str(tmp_path / "b"), "--set", "run.dt=0.0005"], capsys)
    a = json.loads((tmp_path / "a" / "short.summary.json").read_text())
    b = json.loads((tmp_path / "b" / "short.summary.json").read_text())
    assert b["steps"] == 2 * a["steps"]


def test_output_dir_from_environment(short_reach, tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("FREEFLYER_OUT", str(tmp_path / "env"))
    assert _run(["simulate", str(short_reach)], capsys)[0] == 0
    assert (tmp_path / "env" / "short.csv").exists()


def test_jobs_runs_in_parallel(short_reach, tmp_path, capsys):
    other = tmp_path / "other.json"
    doc = json.loads(short_reach.read_text())
    doc["run"]["name"] = "other"
    other.write_text(json.dumps(doc))
    code, stdout, _ = _run(["simulate", str(short_reach), str(other), "--jobs", "2", "-o", str(tmp_path / "o")], capsys)
    assert code == 0
    assert len(stdout.split()) == 4


def test_malformed_file_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    doc = json.loads(sim.dump_scenario(scenarios.reference_reach()))
    doc["model"]["base"]["mass"] = "heavy"
    bad.write_text(json.dumps(doc))
    code, _, err = _run(["simulate", str(bad), "-o", str(tmp_path)], capsys)
    assert code == 2 and "model.base.mass" in err
    bad.write_text("{ not json")
    code, _, err = _run(["simulate", str(bad), "-o", str(tmp_path)], capsys)
    assert code == 2 and "line 1" in err
    code, _, err = _run(["simulate", str(tmp_path / "missing.json")], capsys)
    assert code == 2


def test_integration_failure_exits_3(short_reach, tmp_path, capsys):
    code, _, err = _run(["simulate", str(short_reach), "-o", str(tmp_path),
                         "--set", "initial_state.joint_rates=[1e300, 0]", "--set", "run.duration=0.01"], capsys)
    assert code == 3 and "t=" in err


def test_unknown_experiment_and_subcommand(capsys):
    assert _run(["experiment", "bogus"], capsys)[0] == 2
    assert _run(["launch"], capsys)[0] == 2


def test_describe_echoes_defaults(capsys):
    code, out, _ = _run(["describe", "esa-dextrous", "--set", "run.duration=2"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["run"]["duration"] == 2 and len(doc["model"]["links"]) == 7


def test_override_parsing():
    doc = {"a": {"b": [1, 2]}}
    cli.apply_overrides(doc, ["a.b.1=5", "a.c=hello", "a.d=[1,2]"])
    assert doc == {"a": {"b": [1, 5], "c": "hello", "d": [1, 2]}}
    with pytest.raises(sim.ScenarioError):
        cli.apply_overrides(doc, ["a.b.7=1"])
    with pytest.raises(sim.ScenarioError):
        cli.apply_overrides(doc, ["nonsense"])


def test_check_passes(capsys):
    code, out, _ = _run(["check"], capsys)
    assert code == 0
    assert out.count("PASS") == len(checks.CHECKS)


def test_check_names_corrupted_lambda(monkeypatch, capsys):
    real = kinematics.barycentric_vectors

    def flipped(model):
        b = real(model)
        return kinematics.BarycentricSet(-b.lambdas, b.payload, b.total_mass)

    monkeypatch.setattr(kinematics, "barycentric_vectors", flipped)
    code, out, err = _run(["check"], capsys)
    assert code == 1
    assert "FAIL kinematics.explicit_vs_barycentric" in out
    assert "kinematics.explicit_vs_barycentric" in err


def test_check_names_corrupted_integrator(monkeypatch, capsys):
    real = _kernels.rk4_free

    def leaky(*args):
        x1 = real(*args)
        x1[7] += 1e-7  # spurious base velocity kick
        return x1

    monkeypatch.setattr(_kernels, "rk4_free", leaky)
    code, out, err = _run(["check"], capsys)
    assert code == 1
    assert "FAIL dynamics.momentum_drift" in out
    assert "dynamics.momentum_drift" in err


def test_console_script_entry_point():
    r = subprocess.run([sys.executable, "-m", "freeflyer.cli", "availability", "--mtbf", "8760", "--mttr", "720",
                        "--mtfs", "1460"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout == "0.800731\n"
