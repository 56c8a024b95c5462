"""Scenario loading, closed-loop simulation, run logs and experiments."""
from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import control, dynamics
from .control import ControllerGains, TrajectorySetpoint
from .kinematics import ee_position_explicit, system_com
from .model import (BaseBody, DHParams, InertiaTensor, LinkParams, Payload, SystemModel, SystemState,
                    attitude_error_angle, validate_model)

__all__ = [
    "ScenarioError",
    "Goal",
    "ScenarioConfig",
    "RunLog",
    "AvailabilityInputs",
    "CycleSpec",
    "load_scenario",
    "scenario_to_dict",
    "dump_scenario",
    "run",
    "run_prescribed",
    "availability",
    "experiment_overshoot",
    "experiment_nonholonomy",
    "experiment_attitude_compensation",
    "CSV_HEADER",
    "CONTROLLERS",
    "ATTITUDE_MODES",
]

CONTROLLERS = ("rmrc_generalized", "rmrc_naive", "computed_torque", "none")
ATTITUDE_MODES = ("off", "pd", "pd+feedforward")
CSV_HEADER = ["t", "px", "py", "pz", "err", "Px", "Py", "Pz", "Lx", "Ly", "Lz", "KE",
              "Nrx", "Nry", "Nrz", "att_err", "sat"]
ASSUMPTIONS = ["microgravity: gravity, gravity gradient and orbital rate omitted"]


class ScenarioError(ValueError):
    """Invalid scenario document; ``path`` names the offending field."""

    def __init__(self, path: str, message: str, line: int | None = None):
        where = path if line is None else f"{path} (line {line})"
        super().__init__(f"{where}: {message}")
        self.path = path
        self.line = line


@dataclass(frozen=True, eq=False)
class Goal:
    kind: str = "none"              # task | joint | none
    target: np.ndarray | None = None
    duration: float = 1.0           # trajectory duration, s

    def __post_init__(self):
        if self.kind not in ("task", "joint", "none"):
            raise ScenarioError("goal.type", f"unknown goal type {self.kind!r}")
        if self.target is not None:
            object.__setattr__(self, "target", np.array(self.target, dtype=float))


@dataclass(frozen=True, eq=False)
class ScenarioConfig:
    model: SystemModel
    initial_state: SystemState
    controller: str = "none"
    gains: ControllerGains = field(default_factory=ControllerGains)
    attitude_mode: str = "off"
    attitude_target: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0, 0.0]))
    goal: Goal = field(default_factory=Goal)
    duration: float = 1.0
    dt: float = 1e-3
    control_rate: float = 100.0
    log_decimation: int = 10
    enforce_limits: bool = True
    name: str = "scenario"

    @property
    def steps(self) -> int:
        return int(round(self.duration / self.dt))

    @property
    def steps_per_tick(self) -> int:
        return int(round(1.0 / (self.control_rate * self.dt)))

    def replace(self, **changes) -> "ScenarioConfig":
        return replace(self, **changes)


# -- serialization -----------------------------------------------------------

def _num(x):
    x = float(x)
    return None if math.isinf(x) else x


def _vec(a):
    return [_num(v) for v in np.asarray(a, dtype=float).reshape(-1)]


def _limits_out(a):
    return [_num(v) for v in np.asarray(a, dtype=float)]


def scenario_to_dict(cfg: ScenarioConfig) -> dict:
    """Full JSON-ready document with every default made explicit."""
    m = cfg.model
    links = []
    for l in m.links:
        links.append({
            "dh": {"a": l.dh.a, "alpha": l.dh.alpha, "d": l.dh.d, "theta_offset": l.dh.theta_offset},
            "mass": l.mass,
            "inertia": l.inertia.matrix.tolist(),
            "com_offset": _vec(l.com_offset),
            "link_vector": _vec(l.link_vector),
            "com_to_tip": _vec(l.com_to_tip),
        })
    s = cfg.initial_state
    g = cfg.gains
    return {
        "model": {
            "base": {"mass": m.base.mass, "inertia": m.base.inertia.matrix.tolist(),
                     "mount_offset": _vec(m.base.mount_offset)},
            "links": links,
            "payload": {"mass": m.payload.mass, "inertia": m.payload.inertia.matrix.tolist(),
                        "grasp_offset": _vec(m.payload.grasp_offset)},
            "joint_limits": m.joint_limits.tolist(),
            "rate_limits": _limits_out(m.rate_limits),
            "torque_limits": _limits_out(m.torque_limits),
            "metadata": dict(m.metadata),
        },
        "initial_state": {
            "t": s.t,
            "base_position": _vec(s.base_position),
            "base_attitude": _vec(s.base_attitude),
            "base_velocity": _vec(s.base_velocity),
            "base_angular_velocity": _vec(s.base_angular_velocity),
            "joint_angles": _vec(s.joint_angles),
            "joint_rates": _vec(s.joint_rates),
        },
        "controller": {"type": cfg.controller, "task_gain": g.task_gain, "kp": g.kp, "kd": g.kd,
                       "dls_damping": g.dls_damping, "max_ee_speed": _num(g.max_ee_speed)},
        "attitude": {"mode": cfg.attitude_mode, "kp": g.attitude_kp, "kd": g.attitude_kd,
                     "torque_limit": _num(g.attitude_torque_limit), "target": _vec(cfg.attitude_target)},
        "goal": {"type": cfg.goal.kind,
                 "target": None if cfg.goal.target is None else _vec(cfg.goal.target),
                 "duration": cfg.goal.duration},
        "run": {"name": cfg.name, "duration": cfg.duration, "dt": cfg.dt, "control_rate": cfg.control_rate,
                "log_decimation": cfg.log_decimation, "enforce_limits": cfg.enforce_limits},
    }


def dump_scenario(cfg: ScenarioConfig) -> str:
    return json.dumps(scenario_to_dict(cfg), indent=2) + "\n"


class _Reader:
    """Strict accessor over one JSON object; unknown keys are rejected on ``done()``."""

    def __init__(self, obj, path: str):
        if not isinstance(obj, dict):
            raise ScenarioError(path, f"expected an object, got {type(obj).__name__}")
        self.obj = obj
        self.path = path
        self.used: set[str] = set()

    def _p(self, key):
        return f"{self.path}.{key}" if self.path else key

    def has(self, key):
        return key in self.obj

    def raw(self, key, default: Any = ..., required=False):
        self.used.add(key)
        if key not in self.obj:
            if required or default is ...:
                raise ScenarioError(self._p(key), "missing mandatory field")
            return default
        return self.obj[key]

    def number(self, key, default: Any = ..., positive=False, nonneg=False, allow_inf=False):
        v = self.raw(key, default)
        if v is None and allow_inf:
            return math.inf
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ScenarioError(self._p(key), f"expected a finite number, got {v!r}")
        if positive and not v > 0:
            raise ScenarioError(self._p(key), f"must be > 0, got {v!r}")
        if nonneg and not v >= 0:
            raise ScenarioError(self._p(key), f"must be >= 0, got {v!r}")
        return float(v)

    def array(self, key, shape, default: Any = ..., allow_inf=False):
        v = self.raw(key, default)
        if v is default and default is not ...:
            return None if v is None else np.array(v, dtype=float)
        try:
            arr = np.array([[math.inf if (x is None and allow_inf) else x for x in row] if isinstance(row, list)
                            else (math.inf if (row is None and allow_inf) else row) for row in v], dtype=float)
        except (TypeError, ValueError):
            raise ScenarioError(self._p(key), f"expected a numeric array, got {v!r}") from None
        if shape is not None and arr.shape != shape:
            raise ScenarioError(self._p(key), f"expected shape {shape}, got {arr.shape}")
        if not allow_inf and not np.all(np.isfinite(arr)):
            raise ScenarioError(self._p(key), "entries must be finite")
        return arr

    def inertia(self, key, default: Any = ...):
        v = self.raw(key, default)
        arr = np.array(v, dtype=float) if v is not None else None
        if arr is None or arr.shape not in ((3,), (3, 3)):
            raise ScenarioError(self._p(key), "inertia must be 3x3 or 3 principal moments")
        return InertiaTensor(arr)

    def sub(self, key, required=False):
        v = self.raw(key, {} if not required else ..., required=required)
        return _Reader(v, self._p(key))

    def choice(self, key, options, default):
        v = self.raw(key, default)
        if v not in options:
            raise ScenarioError(self._p(key), f"expected one of {options}, got {v!r}")
        return v

    def done(self):
        extra = sorted(set(self.obj) - self.used)
        if extra:
            raise ScenarioError(self._p(extra[0]), "unknown key")


def _read_model(r: _Reader) -> SystemModel:
    b = r.sub("base", required=True)
    base = BaseBody(b.number("mass"), b.inertia("inertia"), b.array("mount_offset", (3,), [0, 0, 0]))
    b.done()
    raw_links = r.raw("links", required=True)
    if not isinstance(raw_links, list) or not raw_links:
        raise ScenarioError("model.links", "expected a non-empty list of links")
    links = []
    for i, obj in enumerate(raw_links):
        lr = _Reader(obj, f"model.links[{i}]")
        d = lr.sub("dh", required=True)
        dh = DHParams(d.number("a", 0.0), d.number("alpha", 0.0), d.number("d", 0.0),
                      d.number("theta_offset", 0.0))
        d.done()
        lvec = lr.array("link_vector", (3,), None)
        if lvec is None:
            lvec = dh.link_vector()
        com = lr.array("com_offset", (3,), None)
        if com is None:
            com = 0.5 * lvec
        tip = lr.array("com_to_tip", (3,), None)
        if tip is None:
            tip = lvec - com
        links.append(LinkParams(dh, lr.number("mass"), lr.inertia("inertia"), com, lvec, tip))
        lr.done()
    n = len(links)
    p = r.sub("payload")
    payload = Payload(p.number("mass", 0.0), p.inertia("inertia", np.eye(3).tolist()),
                      p.array("grasp_offset", (3,), [0, 0, 0]))
    p.done()
    jl = r.array("joint_limits", (n, 2), [[-4 * math.pi, 4 * math.pi]] * n)
    rl = r.array("rate_limits", (n,), [None] * n, allow_inf=True) if r.has("rate_limits") else np.full(n, np.inf)
    tl = r.array("torque_limits", (n,), [None] * n, allow_inf=True) if r.has("torque_limits") else np.full(n, np.inf)
    r.used.update({"rate_limits", "torque_limits"})
    meta = r.raw("metadata", {})
    if not isinstance(meta, dict):
        raise ScenarioError("model.metadata", "expected an object")
    r.done()
    model = SystemModel(base, links, payload, jl, rl, tl, dict(meta))
    problems = validate_model(model)
    if problems:
        raise ScenarioError(f"model.{problems[0].field}", f"{problems[0].message} ({problems[0].value!r})")
    return model


def _read_state(r: _Reader, n: int) -> SystemState:
    th = r.array("joint_angles", (n,), [0.0] * n)
    try:
        state = SystemState(r.number("t", 0.0), r.array("base_position", (3,), [0, 0, 0]),
                            r.array("base_attitude", (4,), [1, 0, 0, 0]), r.array("base_velocity", (3,), [0, 0, 0]),
                            r.array("base_angular_velocity", (3,), [0, 0, 0]), th,
                            r.array("joint_rates", (n,), [0.0] * n))
    except ValueError as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError("initial_state", str(exc)) from None
    r.done()
    return state


def load_scenario(source, name: str | None = None) -> ScenarioConfig:
    """Parse and validate a scenario from a JSON string, a path, or a dict."""
    if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
        path = Path(source)
        name = name or path.name.removesuffix(".json")
        source = path.read_text(encoding="utf-8")
    if isinstance(source, str):
        try:
            doc = json.loads(source)
        except json.JSONDecodeError as exc:
            raise ScenarioError("<document>", exc.msg, exc.lineno) from None
    else:
        doc = source
    top = _Reader(doc, "")
    model = _read_model(top.sub("model", required=True))
    n = model.n
    state = _read_state(top.sub("initial_state"), n)

    c = top.sub("controller")
    ctrl = c.choice("type", CONTROLLERS, "none")
    a = top.sub("attitude")
    mode = a.choice("mode", ATTITUDE_MODES, "off")
    defaults = ControllerGains()
    gains = ControllerGains(
        task_gain=c.number("task_gain", defaults.task_gain, nonneg=True),
        kp=c.number("kp", defaults.kp, nonneg=True),
        kd=c.number("kd", defaults.kd, nonneg=True),
        dls_damping=c.number("dls_damping", defaults.dls_damping, positive=True),
        max_ee_speed=c.number("max_ee_speed", None, positive=True, allow_inf=True),
        attitude_kp=a.number("kp", defaults.attitude_kp, nonneg=True),
        attitude_kd=a.number("kd", defaults.attitude_kd, nonneg=True),
        attitude_torque_limit=a.number("torque_limit", None, positive=True, allow_inf=True),
    )
    target = a.array("target", (4,), [1.0, 0.0, 0.0, 0.0])
    if abs(np.linalg.norm(target) - 1.0) > 1e-9:
        raise ScenarioError("attitude.target", "must be a unit quaternion")
    c.done()
    a.done()

    g = top.sub("goal")
    kind = g.choice("type", ("task", "joint", "none"), "none")
    gshape = {"task": (3,), "joint": (n,), "none": None}[kind]
    gtarget = g.array("target", gshape, None) if kind != "none" else g.raw("target", None)
    if kind != "none" and gtarget is None:
        raise ScenarioError("goal.target", "missing mandatory field")
    goal = Goal(kind, gtarget if kind != "none" else None, g.number("duration", 1.0, positive=True))
    g.done()

    rr = top.sub("run")
    cfg = ScenarioConfig(
        model=model, initial_state=state, controller=ctrl, gains=gains, attitude_mode=mode,
        attitude_target=target, goal=goal,
        duration=rr.number("duration", 1.0, positive=True),
        dt=rr.number("dt", 1e-3, positive=True),
        control_rate=rr.number("control_rate", 100.0, positive=True),
        log_decimation=int(rr.number("log_decimation", 10, positive=True)),
        enforce_limits=bool(rr.raw("enforce_limits", True)),
        name=str(rr.raw("name", name or "scenario")),
    )
    rr.done()
    top.done()
    if ctrl in ("rmrc_generalized", "rmrc_naive") and goal.kind != "task":
        raise ScenarioError("goal.type", f"controller {ctrl} needs a task goal")
    if ctrl == "computed_torque" and goal.kind != "joint":
        raise ScenarioError("goal.type", "controller computed_torque needs a joint goal")
    ticks = 1.0 / (cfg.control_rate * cfg.dt)
    if abs(ticks - round(ticks)) > 1e-9 * ticks or round(ticks) < 1:
        raise ScenarioError("run.dt", f"dt={cfg.dt} does not divide the control period {1 / cfg.control_rate}")
    return cfg


# -- run logs ----------------------------------------------------------------

@dataclass(eq=False)
class RunLog:
    """Time series sampled every ``log_decimation`` steps plus a summary."""

    columns: np.ndarray            # rows x len(CSV_HEADER)
    states: np.ndarray             # rows x state-vector length
    summary: dict
    ticks: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return self.columns[:, CSV_HEADER.index(name)]

    @property
    def t(self) -> np.ndarray:
        return self.column("t")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        sat_idx = CSV_HEADER.index("sat")
        for row in self.columns:
            # + 0.0 folds negative zeros
            w.writerow([str(int(v)) if i == sat_idx else format(v + 0.0, ".17g") for i, v in enumerate(row)])
        return buf.getvalue()

    def write(self, directory, name: str) -> tuple[Path, Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        csv_path = directory / f"{name}.csv"
        json_path = directory / f"{name}.summary.json"
        csv_path.write_text(self.to_csv(), encoding="utf-8")
        json_path.write_text(json.dumps(self.summary, indent=2, default=_json_default) + "\n", encoding="utf-8")
        return csv_path, json_path

    def same_as(self, other: "RunLog") -> bool:
        return bool(np.array_equal(self.columns, other.columns) and np.array_equal(self.states, other.states))


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    raise TypeError(type(o))


class _Recorder:
    def __init__(self, model, com0, rows_hint=0):
        self.model = model
        self.com0 = com0
        self.rows: list[np.ndarray] = []
        self.states: list[np.ndarray] = []
        self.max_drift = 0.0

    def record(self, state, err, reaction_moment, att_err, sat):
        mom = dynamics.momentum(self.model, state)
        p = ee_position_explicit(self.model, state)
        drift = float(np.linalg.norm(system_com(self.model, state) - self.com0))
        self.max_drift = max(self.max_drift, drift)
        self.rows.append(np.concatenate([[state.t], p, [err], mom.linear, mom.angular, [mom.kinetic_energy],
                                         reaction_moment, [att_err, 1.0 if sat else 0.0]]))
        self.states.append(state.to_vector())

    def log(self, summary, ticks=None) -> RunLog:
        cols = np.array(self.rows)
        P = np.linalg.norm(cols[:, 5:8], axis=1)
        L = np.linalg.norm(cols[:, 8:11], axis=1)
        summary.update(max_linear_momentum=float(P.max()), max_angular_momentum=float(L.max()),
                       max_com_drift=self.max_drift, rows=len(self.rows), assumptions=list(ASSUMPTIONS))
        return RunLog(cols, np.array(self.states), summary, ticks or {})


def _commanded(cfg: ScenarioConfig, state, theta_ref, p_start, th_start):
    """One control tick: joint torques, commanded joint accelerations, tracking data."""
    model, gains, goal = cfg.model, cfg.gains, cfg.goal
    info = {"rate_clamped": False, "singular": False}
    if cfg.controller in ("rmrc_generalized", "rmrc_naive"):
        sp = control.interpolate(p_start, goal.target, goal.duration, state.t)
        law = control.rmrc_generalized if cfg.controller == "rmrc_generalized" else control.rmrc_naive
        cmd = law(model, state, sp, gains, cfg.enforce_limits)
        info.update(rate_clamped=cmd.clamped, singular=cmd.singular, setpoint=sp.position)
        tick = 1.0 / cfg.control_rate
        joint_sp = TrajectorySetpoint(theta_ref, cmd.rates, np.zeros(model.n), state.t)
        tq = control.computed_torque(model, state, joint_sp, gains)
        theta_ref = theta_ref + cmd.rates * tick
        if cfg.enforce_limits:
            theta_ref = np.clip(theta_ref, model.joint_limits[:, 0], model.joint_limits[:, 1])
        return tq.torques, tq.joint_accels, tq.clamped, theta_ref, info
    if cfg.controller == "computed_torque":
        sp = control.interpolate(th_start, goal.target, goal.duration, state.t)
        tq = control.computed_torque(model, state, sp, gains)
        info.update(setpoint=sp.position)
        return tq.torques, tq.joint_accels, tq.clamped, theta_ref, info
    zero = np.zeros(model.n)
    acc = dynamics.forward_dynamics_free(model, state, zero).joint_accels
    return zero, acc, False, theta_ref, info


def _tracking_error(cfg, state, info):
    if cfg.controller in ("rmrc_generalized", "rmrc_naive"):
        return float(np.linalg.norm(ee_position_explicit(cfg.model, state) - info["setpoint"]))
    if cfg.controller == "computed_torque":
        return float(np.linalg.norm(state.joint_angles - info["setpoint"]))
    return 0.0


def _goal_error(cfg, state):
    if cfg.goal.kind == "task":
        return float(np.linalg.norm(ee_position_explicit(cfg.model, state) - cfg.goal.target))
    if cfg.goal.kind == "joint":
        return float(np.linalg.norm(state.joint_angles - cfg.goal.target))
    return 0.0


def run(cfg: ScenarioConfig) -> RunLog:
    """Closed-loop simulation: RK4 plant at ``dt``, controllers at ``control_rate``.

    Deterministic: identical configs give identical logs.
    """
    wall = time.perf_counter()
    model = cfg.model
    state = cfg.initial_state
    steps, per_tick = cfg.steps, cfg.steps_per_tick
    t0 = state.t
    p_start = ee_position_explicit(model, state)
    th_start = state.joint_angles.copy()
    theta_ref = th_start.copy()
    rec = _Recorder(model, system_com(model, state))
    ticks = {"t": [], "state": [], "joint_accels": [], "feedforward": [], "reaction_moment": [],
             "attitude_torque": [], "attitude_saturated": [], "torque_clamped": []}
    tau = np.zeros(model.n)
    att = np.zeros(3)
    qdd_cmd = np.zeros(model.n)
    sat = False
    info: dict = {}
    peak_goal_err = 0.0
    overshoot = 0.0
    for k in range(steps + 1):
        if k % per_tick == 0 and k < steps or k == 0:
            try:
                tau, qdd_cmd, clamped, theta_ref, info = _commanded(cfg, state, theta_ref, p_start, th_start)
                nr = dynamics.reaction_wrench(model, state, qdd_cmd).moment
            except (ValueError, np.linalg.LinAlgError, dynamics.DynamicsError) as exc:
                # overflowed state: report it like any other integration blow-up
                raise dynamics.IntegrationError(state.t, "control tick", math.nan) from exc
            att = np.zeros(3)
            ff = np.zeros(3)
            if cfg.attitude_mode != "off":
                att = control.attitude_pd(state, cfg.gains, cfg.attitude_target)
            if cfg.attitude_mode == "pd+feedforward":
                ff = -nr
                att = att + ff
            att, att_sat = dynamics.saturate(att, cfg.gains.attitude_torque_limit)
            sat = att_sat or clamped
            for key, val in (("t", state.t), ("state", state.to_vector()), ("joint_accels", qdd_cmd),
                             ("feedforward", ff), ("reaction_moment", nr),
                             ("attitude_torque", att), ("attitude_saturated", att_sat), ("torque_clamped", clamped)):
                ticks[key].append(val)
        if k % cfg.log_decimation == 0:
            if k % per_tick == 0 and k < steps or k == 0:
                nr_log = nr
            else:
                nr_log = dynamics.reaction_wrench(model, state, qdd_cmd).moment
            if cfg.controller != "none" and "setpoint" in info:
                info["setpoint"] = _setpoint_at(cfg, state.t, p_start, th_start)
            rec.record(state, _tracking_error(cfg, state, info), nr_log,
                       attitude_error_angle(state.base_attitude, cfg.attitude_target), sat)
        if cfg.goal.kind == "task":
            e = ee_position_explicit(model, state) - cfg.goal.target
            peak_goal_err = max(peak_goal_err, float(np.linalg.norm(e)))
            direction = cfg.goal.target - p_start
            dist = np.linalg.norm(direction)
            if dist > 0:
                overshoot = max(overshoot, float(e @ direction / dist))
        if k == steps:
            break
        state = dynamics.step(model, state, tau, att, cfg.dt)
        # keep the clock on the grid instead of accumulating dt
        state = state.replace(t=t0 + (k + 1) * cfg.dt)

    cols = np.array(rec.rows)
    sat_ticks = np.array(ticks["attitude_saturated"], dtype=bool)
    summary = {
        "name": cfg.name,
        "controller": cfg.controller,
        "attitude_mode": cfg.attitude_mode,
        "steps": steps,
        "dt": cfg.dt,
        "duration": cfg.duration,
        "control_ticks": len(ticks["t"]),
        "peak_error": float(cols[:, CSV_HEADER.index("err")].max()),
        "final_tracking_error": float(cols[-1, CSV_HEADER.index("err")]),
        "final_error": _goal_error(cfg, state),
        "peak_goal_error": peak_goal_err,
        "peak_overshoot": overshoot,
        "peak_attitude_error": float(cols[:, CSV_HEADER.index("att_err")].max()),
        "final_attitude_error": float(cols[-1, CSV_HEADER.index("att_err")]),
        "saturation_fraction": float(sat_ticks.mean()) if sat_ticks.size else 0.0,
        "torque_clamp_fraction": float(np.mean(ticks["torque_clamped"])) if ticks["t"] else 0.0,
    }
    out = rec.log(summary, {k: np.array(v) for k, v in ticks.items()})
    out.summary["wall_time"] = time.perf_counter() - wall
    return out


def _setpoint_at(cfg, t, p_start, th_start):
    start = p_start if cfg.goal.kind == "task" else th_start
    return control.interpolate(start, cfg.goal.target, cfg.goal.duration, t).position


# -- availability --------------------------------------------------------------

@dataclass(frozen=True)
class AvailabilityInputs:
    mtbf: float  # mean time between failures, h
    mttr: float  # mean time to repair, h
    mtfs: float  # mean time for supply, h


def availability(inputs: AvailabilityInputs) -> float:
    """Fraction of time operational: MTBF / (MTBF + MTTR + MTFS)."""
    values = (inputs.mtbf, inputs.mttr, inputs.mtfs)
    if any(not (math.isfinite(v) and v >= 0) for v in values):
        raise ValueError(f"availability inputs must be finite and >= 0, got {values}")
    total = inputs.mtbf + inputs.mttr + inputs.mtfs
    if total <= 0:
        raise ValueError("MTBF + MTTR + MTFS must be > 0")
    return inputs.mtbf / total


# -- experiments ----------------------------------------------------------------

def experiment_overshoot(cfg: ScenarioConfig) -> dict:
    """Run the naive and generalized rate controllers on the same scenario."""
    naive = run(cfg.replace(controller="rmrc_naive", name=f"{cfg.name}-naive"))
    gen = run(cfg.replace(controller="rmrc_generalized", name=f"{cfg.name}-generalized"))
    s_n, s_g = naive.summary, gen.summary
    return {
        "logs": {"naive": naive, "generalized": gen},
        "naive_peak": s_n["peak_error"],
        "generalized_peak": s_g["peak_error"],
        "naive_overshoot": s_n["peak_overshoot"],
        "generalized_overshoot": s_g["peak_overshoot"],
        "naive_final": s_n["final_error"],
        "generalized_final": s_g["final_error"],
        "ordering_holds": s_n["peak_error"] > s_g["peak_error"],
        "accuracy_met": s_g["final_error"] < 0.3e-3,
    }


@dataclass(frozen=True, eq=False)
class CycleSpec:
    """Closed joint-space loop ``start + amplitude * (1 - cos 2 pi s, sin 2 pi s)``.

    ``s`` follows a rest-to-rest quintic over ``duration``.  With ``reverse``
    the loop is traced forward and then back along the same path.
    """

    start: np.ndarray
    amplitude: np.ndarray
    duration: float = 4.0
    joints: tuple[int, int] = (0, 1)
    reverse: bool = False

    def __post_init__(self):
        object.__setattr__(self, "start", np.array(self.start, dtype=float))
        object.__setattr__(self, "amplitude", np.array(self.amplitude, dtype=float))

    @property
    def total_time(self) -> float:
        return 2 * self.duration if self.reverse else self.duration

    def _phase(self, t):
        T = self.duration
        sign = 1.0
        if self.reverse and t > T:
            t = 2 * T - t
            sign = -1.0
        tau = min(max(t / T, 0.0), 1.0)
        s = tau**3 * (10 - 15 * tau + 6 * tau**2)
        ds = 30 * tau**2 * (1 - tau) ** 2 / T * sign
        dds = 60 * tau * (1 - 3 * tau + 2 * tau**2) / T**2
        return s, ds, dds

    def __call__(self, t: float):
        """Joint angles, rates and accelerations at time ``t``."""
        s, ds, dds = self._phase(t)
        i, j = self.joints
        w = 2 * np.pi
        c, sn = np.cos(w * s), np.sin(w * s)
        amp = self.amplitude
        th = self.start.copy()
        thd = np.zeros_like(th)
        thdd = np.zeros_like(th)
        d1 = np.array([amp[0] * w * sn, amp[1] * w * c])
        d2 = np.array([amp[0] * w * w * c, -amp[1] * w * w * sn])
        th[[i, j]] += [amp[0] * (1 - c), amp[1] * sn]
        thd[[i, j]] = d1 * ds
        thdd[[i, j]] = d2 * ds * ds + d1 * dds
        return th, thd, thdd


def run_prescribed(model: SystemModel, state: SystemState, path: Callable, duration: float, dt: float = 1e-3,
                   log_decimation: int = 10) -> RunLog:
    """Integrate with joint motion prescribed by ``path(t) -> (theta, theta_dot, theta_ddot)``."""
    wall = time.perf_counter()
    steps = int(round(duration / dt))
    rec = _Recorder(model, system_com(model, state))
    q0 = state.base_attitude
    t0 = state.t
    for k in range(steps + 1):
        if k % log_decimation == 0:
            _, _, qdd = path(state.t)
            nr = dynamics.reaction_wrench(model, state, qdd).moment
            track = float(np.linalg.norm(state.joint_angles - path(state.t)[0]))
            rec.record(state, track, nr, attitude_error_angle(state.base_attitude, q0), False)
        if k == steps:
            break
        state = dynamics.step_prescribed(model, state, lambda t: path(t)[2], dt)
        state = state.replace(t=t0 + (k + 1) * dt)
    out = rec.log({"steps": steps, "dt": dt, "duration": duration})
    out.summary["wall_time"] = time.perf_counter() - wall
    return out


def experiment_nonholonomy(model: SystemModel, cycle: CycleSpec, dt: float = 1e-3,
                           base_state: SystemState | None = None) -> dict:
    """Trace a closed joint loop from rest at zero momentum; report the net base rotation."""
    th0, thd0, _ = cycle(0.0)
    if base_state is None:
        state = SystemState.at_rest(th0)
    else:
        state = base_state.replace(joint_angles=th0, joint_rates=thd0)
    log = run_prescribed(model, state, cycle, cycle.total_time, dt)
    final = SystemState.from_vector(cycle.total_time, log.states[-1])
    th_end, thd_end, _ = cycle(cycle.total_time)
    from .model import quat_conjugate, quat_multiply
    rel = quat_multiply(quat_conjugate(state.base_attitude), final.base_attitude)
    if rel[0] < 0:
        rel = -rel
    angle = attitude_error_angle(final.base_attitude, state.base_attitude)
    axis = rel[1:] / np.linalg.norm(rel[1:]) if np.linalg.norm(rel[1:]) > 0 else np.zeros(3)
    return {
        "log": log,
        "net_rotation": angle,
        "rotation_vector": angle * axis,
        "com_drift": log.summary["max_com_drift"],
        "joint_closure_error": float(np.linalg.norm(final.joint_angles - th_end)),
        "max_linear_momentum": log.summary["max_linear_momentum"],
        "max_angular_momentum": log.summary["max_angular_momentum"],
    }


def experiment_attitude_compensation(cfg: ScenarioConfig, torque_limits=(np.inf,)) -> dict:
    """Compare attitude PD alone with PD plus reaction feedforward; sweep the actuator limit."""
    pd = run(cfg.replace(attitude_mode="pd", name=f"{cfg.name}-pd"))
    ff = run(cfg.replace(attitude_mode="pd+feedforward", name=f"{cfg.name}-feedforward"))
    sweep = []
    for lim in torque_limits:
        if math.isinf(lim):
            continue
        g = replace(cfg.gains, attitude_torque_limit=float(lim))
        log = run(cfg.replace(attitude_mode="pd+feedforward", gains=g, name=f"{cfg.name}-limit-{lim:g}"))
        sweep.append({"torque_limit": float(lim), "saturation_fraction": log.summary["saturation_fraction"],
                      "peak_attitude_error": log.summary["peak_attitude_error"]})
    return {
        "logs": {"pd": pd, "feedforward": ff},
        "pd_only_peak": pd.summary["peak_attitude_error"],
        "feedforward_peak": ff.summary["peak_attitude_error"],
        "pd_only_saturation": pd.summary["saturation_fraction"],
        "feedforward_saturation": ff.summary["saturation_fraction"],
        "sweep": sweep,
        "ordering_holds": ff.summary["peak_attitude_error"] < pd.summary["peak_attitude_error"],
    }
