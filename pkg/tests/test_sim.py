import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from freeflyer import scenarios, sim
from freeflyer.model import SystemState


@pytest.fixture(scope="module")
def reach_doc():
    return json.loads(sim.dump_scenario(scenarios.reference_reach()))


def _short(cfg, duration=0.5):
    return cfg.replace(duration=duration, goal=sim.Goal(cfg.goal.kind, cfg.goal.target, min(cfg.goal.duration, duration)))


def test_canned_esa_document():
    cfg = scenarios.canned("esa-dextrous")
    assert cfg.model.n == 7
    assert cfg.model.payload.mass == 500.0
    assert cfg.control_rate == 100.0
    assert cfg.gains.max_ee_speed == pytest.approx(0.1)


def test_canned_documents_match_builders():
    for name, build in scenarios.CANNED.items():
        assert sim.dump_scenario(scenarios.canned(name)) == sim.dump_scenario(build())
    with pytest.raises(KeyError):
        scenarios.canned("nope")


def test_shipped_copies_are_identical():
    from pathlib import Path
    root = Path(__file__).parents[1]
    for name in scenarios.CANNED:
        assert (root / "scenarios" / f"{name}.json").read_text() == \
            (root / "src" / "freeflyer" / "data" / f"{name}.json").read_text()


def test_round_trip_identity(reach_doc):
    text = json.dumps(reach_doc)
    once = sim.load_scenario(text)
    twice = sim.load_scenario(sim.dump_scenario(once))
    assert sim.scenario_to_dict(once) == sim.scenario_to_dict(twice)
    assert sim.dump_scenario(once) == sim.dump_scenario(twice)


def test_minimal_document_gets_defaults():
    doc = {"model": {"base": {"mass": 10.0, "inertia": [1, 1, 1]},
                     "links": [{"dh": {"a": 0.5}, "mass": 1.0, "inertia": [0.001, 0.02, 0.02]}]}}
    cfg = sim.load_scenario(doc)
    full = sim.scenario_to_dict(cfg)
    assert full["controller"]["type"] == "none"
    assert full["model"]["rate_limits"] == [None]
    assert full["model"]["links"][0]["com_offset"] == [0.25, 0.0, 0.0]
    assert sim.scenario_to_dict(sim.load_scenario(full)) == full


def test_missing_links_is_named(reach_doc):
    doc = json.loads(json.dumps(reach_doc))
    del doc["model"]["links"]
    with pytest.raises(sim.ScenarioError, match="links"):
        sim.load_scenario(doc)


def test_unknown_keys_rejected(reach_doc):
    doc = json.loads(json.dumps(reach_doc))
    doc["controller"]["gain"] = 3
    with pytest.raises(sim.ScenarioError) as info:
        sim.load_scenario(doc)
    assert info.value.path == "controller.gain"
    doc = json.loads(json.dumps(reach_doc))
    doc["extras"] = {}
    with pytest.raises(sim.ScenarioError, match="extras"):
        sim.load_scenario(doc)


def test_parse_error_has_line():
    with pytest.raises(sim.ScenarioError) as info:
        sim.load_scenario('{\n  "model": {\n    "base": ,\n  }\n}')
    assert info.value.line == 3


@pytest.mark.parametrize("path,value,fragment", [
    (("run", "dt"), 0.003, "run.dt"),
    (("run", "duration"), -1.0, "run.duration"),
    (("controller", "kp"), -5.0, "controller.kp"),
    (("attitude", "mode"), "magic", "attitude.mode"),
    (("goal", "target"), [1.0, 2.0], "goal.target"),
    (("initial_state", "joint_angles"), [0.1], "initial_state.joint_angles"),
])
def test_validation_errors_name_field(reach_doc, path, value, fragment):
    doc = json.loads(json.dumps(reach_doc))
    doc[path[0]][path[1]] = value
    with pytest.raises(sim.ScenarioError, match=fragment.replace(".", r"\.")):
        sim.load_scenario(doc)


def test_model_validation_runs_on_load(reach_doc):
    doc = json.loads(json.dumps(reach_doc))
    doc["model"]["links"][1]["mass"] = -2.0
    with pytest.raises(sim.ScenarioError, match=r"model\.links\[2\]\.mass"):
        sim.load_scenario(doc)


def test_controller_goal_mismatch(reach_doc):
    doc = json.loads(json.dumps(reach_doc))
    doc["controller"]["type"] = "computed_torque"
    with pytest.raises(sim.ScenarioError, match="joint goal"):
        sim.load_scenario(doc)


def test_zero_torque_rest_run_is_constant(planar):
    cfg = sim.ScenarioConfig(planar, SystemState.at_rest([0.3, 0.4]), duration=0.2)
    log = sim.run(cfg)
    assert np.all(log.states == log.states[0])
    np.testing.assert_allclose(log.t, np.arange(21) * 0.01, atol=0)


@pytest.mark.parametrize("duration,dt,dec", [(0.2, 1e-3, 10), (0.205, 1e-3, 10), (0.1, 5e-4, 7)])
def test_row_count(planar, duration, dt, dec):
    cfg = sim.ScenarioConfig(planar, SystemState.at_rest([0.3, 0.4]), duration=duration, dt=dt, log_decimation=dec)
    log = sim.run(cfg)
    assert log.columns.shape[0] == math.floor(round(duration / dt) / dec) + 1
    assert log.summary["rows"] == log.columns.shape[0]


def test_run_is_deterministic():
    cfg = _short(scenarios.reference_reach())
    a, b = sim.run(cfg), sim.run(cfg)
    assert a.same_as(b)
    assert a.to_csv() == b.to_csv()


def test_csv_format(tmp_path):
    log = sim.run(_short(scenarios.reference_reach(), 0.1))
    text = log.to_csv()
    lines = text.splitlines()
    assert lines[0] == ",".join(sim.CSV_HEADER)
    assert len(lines) == 12
    row = lines[5].split(",")
    assert len(row) == 17 and row[-1] in ("0", "1")
    assert float(row[1]) == log.columns[4, 1]
    assert "-0," not in text
    csv_path, json_path = log.write(tmp_path, "demo")
    assert csv_path.read_text() == text
    summary = json.loads(json_path.read_text())
    assert summary["rows"] == 11 and "wall_time" in summary
    assert summary["assumptions"]


def test_internal_torques_conserve_momentum():
    cfg = _short(scenarios.reference_reach(), 1.0).replace(attitude_mode="off")
    log = sim.run(cfg)
    assert log.summary["max_linear_momentum"] < 1e-9
    assert log.summary["max_angular_momentum"] < 1e-9
    assert log.summary["max_com_drift"] < 1e-6


def test_feedforward_history_matches_reaction_moment():
    cfg = _short(scenarios.reference_reach(), 0.3)
    log = sim.run(cfg)
    np.testing.assert_array_equal(log.ticks["feedforward"], -log.ticks["reaction_moment"])
    assert len(log.ticks["t"]) == 30


def test_availability_cases():
    A = lambda *v: sim.availability(sim.AvailabilityInputs(*v))
    assert A(1, 0, 0) == 1.0
    assert A(9, 0.5, 0.5) == pytest.approx(0.9, abs=1e-12)
    assert A(8760, 720, 1460) == pytest.approx(8760 / 10940, abs=1e-12)
    with pytest.raises(ValueError):
        A(0, 0, 0)
    with pytest.raises(ValueError):
        A(-1, 1, 1)


@settings(max_examples=200, deadline=None)
@given(st.tuples(*[st.floats(0.01, 1e5)] * 3), st.floats(0.01, 100.0))
def test_availability_monotone(triple, bump):
    base = sim.availability(sim.AvailabilityInputs(*triple))
    mtbf, mttr, mtfs = triple
    assert sim.availability(sim.AvailabilityInputs(mtbf + bump, mttr, mtfs)) >= base
    assert sim.availability(sim.AvailabilityInputs(mtbf, mttr + bump, mtfs)) <= base
    assert sim.availability(sim.AvailabilityInputs(mtbf, mttr, mtfs + bump)) <= base
    assert 0.0 <= base <= 1.0


def test_heavy_base_overshoot_peaks_coincide():
    cfg = _short(scenarios.reference_reach(), 1.0)
    heavy = cfg.replace(model=scenarios.heavy_base(cfg.model, 1e9))
    res = sim.experiment_overshoot(heavy)
    assert res["naive_peak"] == pytest.approx(res["generalized_peak"], rel=1e-6)


def test_stationary_arm_holds_attitude(planar):
    cfg = sim.ScenarioConfig(planar, SystemState.at_rest([0.3, 0.4]), duration=0.3)
    res = sim.experiment_attitude_compensation(cfg)
    assert res["pd_only_peak"] == 0.0 and res["feedforward_peak"] == 0.0


def test_torque_limit_sweep_flags_saturation():
    cfg = _short(scenarios.reference_reach(), 1.5)
    res = sim.experiment_attitude_compensation(cfg, torque_limits=(0.2, 50.0))
    low, high = res["sweep"]
    assert low["saturation_fraction"] > 0
    assert high["saturation_fraction"] == 0
    assert low["peak_attitude_error"] > high["peak_attitude_error"]


def test_cycle_spec_closes():
    c = scenarios.reference_cycle()
    th0, thd0, _ = c(0.0)
    th1, thd1, _ = c(c.total_time)
    np.testing.assert_allclose(th0, th1, atol=1e-12)
    assert not thd0.any() and not np.abs(thd1).max() > 1e-12
    r = scenarios.reference_cycle(reverse=True)
    for t in (0.7, 1.9, 3.3):
        np.testing.assert_allclose(r(2 * c.duration - t)[0], r(t)[0], atol=1e-12)
    h = 1e-6
    for t in (0.5, 2.2):
        np.testing.assert_allclose((c(t + h)[0] - c(t - h)[0]) / (2 * h), c(t)[1], atol=1e-7)
        np.testing.assert_allclose((c(t + h)[1] - c(t - h)[1]) / (2 * h), c(t)[2], atol=1e-6)
