"""Canned system models.

``planar_two_link`` is the three-body planar system (base + two links)
used by the reference reach, attitude and non-holonomy runs.
``esa_dextrous`` is a 7-DOF dextrous arm sized to a published servicer
requirement list: 3-DOF shoulder, 1-DOF elbow, 3-DOF spherical wrist,
1 m reach, 500 kg payload, on a 1.5 t base.
"""
from __future__ import annotations

import numpy as np

from importlib import resources

from .control import ControllerGains
from .kinematics import ee_position_explicit
from .model import BaseBody, DHParams, InertiaTensor, LinkParams, Payload, SystemModel, SystemState
from .sim import CycleSpec, Goal, ScenarioConfig, load_scenario

__all__ = ["planar_two_link", "esa_dextrous", "heavy_base", "reference_reach", "esa_dextrous_reach",
           "reference_cycle", "CANNED", "canned"]

# published requirement values for the dextrous servicer arm
ESA_REQUIREMENTS = dict(
    dof=7,
    control_rate_hz=100.0,
    reach_m=1.0,
    position_accuracy_m=0.3e-3,
    orientation_accuracy_rad=np.deg2rad(0.1),
    max_ee_speed=0.1,
    max_ee_angular_speed=0.1,
    max_force=200.0,
    max_torque=20.0,
    payload_kg=500.0,
    linear_compliance=1e6,
    rotational_compliance=5e4,
    servicer_mass_kg=1500.0,
)


def planar_two_link(base_mass: float = 40.0, payload_mass: float = 0.0) -> SystemModel:
    """Base + two links moving in the base x-y plane (all joint axes along z)."""
    scale = base_mass / 40.0
    base = BaseBody(base_mass, InertiaTensor.diagonal(3.0 * scale, 3.0 * scale, 4.0 * scale), [0.5, 0.1, 0.0])
    links = [
        LinkParams.from_dh(DHParams(a=0.6), 6.0, InertiaTensor.diagonal(0.01, 0.19, 0.19), [0.3, 0.02, 0.0]),
        LinkParams.from_dh(DHParams(a=0.5), 4.0, InertiaTensor.diagonal(0.006, 0.09, 0.09), [0.25, -0.01, 0.0]),
    ]
    payload = Payload(payload_mass, InertiaTensor.diagonal(0.004, 0.004, 0.004), [0.05, 0.0, 0.0])
    return SystemModel(base, links, payload,
                       joint_limits=[[-np.pi, np.pi], [-np.pi, np.pi]],
                       rate_limits=[1.0, 1.0],
                       torque_limits=[20.0, 20.0],
                       metadata={"name": "planar-2link"})


def esa_dextrous(payload_mass: float = ESA_REQUIREMENTS["payload_kg"]) -> SystemModel:
    req = ESA_REQUIREMENTS
    half = np.pi / 2
    upper, fore, tool = 0.45, 0.45, 0.10
    rows = [
        DHParams(alpha=-half),
        DHParams(alpha=half),
        DHParams(alpha=-half, d=upper),
        DHParams(alpha=half),
        DHParams(alpha=-half, d=fore),
        DHParams(alpha=half),
        DHParams(d=tool),
    ]
    links = []
    for dh in rows:
        length = max(abs(dh.d), 0.1)
        inertia = InertiaTensor.rod(20.0, length, axis=1 if dh.alpha else 2, radius=0.05)
        links.append(LinkParams.from_dh(dh, 20.0, inertia))
    base = BaseBody(req["servicer_mass_kg"], InertiaTensor.box(req["servicer_mass_kg"], (1.6, 1.4, 1.2)),
                    [0.8, 0.0, 0.0])
    payload = Payload(payload_mass, InertiaTensor.box(max(payload_mass, 1e-9), (0.6, 0.6, 0.6)), [0.0, 0.0, 0.3])
    return SystemModel(base, links, payload,
                       joint_limits=np.tile([-np.pi, np.pi], (7, 1)),
                       rate_limits=np.full(7, 0.5),
                       torque_limits=np.full(7, 50.0),
                       metadata={"name": "esa-dextrous", "control_rate_hz": req["control_rate_hz"],
                                 "max_ee_speed": req["max_ee_speed"],
                                 "linear_compliance": req["linear_compliance"],
                                 "rotational_compliance": req["rotational_compliance"]})


def heavy_base(model: SystemModel, ratio: float = 1e9) -> SystemModel:
    """Same arm on a base scaled so that its mass is ``ratio`` times the heaviest link."""
    heaviest = max(l.mass for l in model.links)
    return model.with_masses(base_scale=ratio * heaviest / model.base.mass)


def reference_reach() -> ScenarioConfig:
    """Planar reach of 0.25 m in 3 s with the attitude held by PD + feedforward."""
    model = planar_two_link()
    state = SystemState.at_rest([0.5, 1.0])
    start = ee_position_explicit(model, state)
    goal = Goal("task", np.round(start + [-0.2, 0.15, 0.0], 12), 3.0)
    return ScenarioConfig(model, state, controller="rmrc_generalized", gains=ControllerGains(),
                          attitude_mode="pd+feedforward", goal=goal, duration=6.0, name="reference-reach")


def esa_dextrous_reach() -> ScenarioConfig:
    """7-DOF arm with a 500 kg payload, end-effector speed capped at 0.1 m/s."""
    model = esa_dextrous()
    state = SystemState.at_rest([0.0, 0.6, 0.0, -1.2, 0.0, 0.8, 0.0])
    start = ee_position_explicit(model, state)
    goal = Goal("task", np.round(start + [0.1, 0.1, -0.05], 12), 4.0)
    gains = ControllerGains(max_ee_speed=ESA_REQUIREMENTS["max_ee_speed"], attitude_kp=2e4, attitude_kd=6e3)
    return ScenarioConfig(model, state, controller="rmrc_generalized", gains=gains,
                          attitude_mode="pd+feedforward", goal=goal, duration=8.0,
                          control_rate=ESA_REQUIREMENTS["control_rate_hz"], name="esa-dextrous")


def reference_cycle(reverse: bool = False) -> CycleSpec:
    """Closed two-joint loop for the planar non-holonomy run."""
    return CycleSpec(start=[0.5, 1.0], amplitude=[0.6, 0.6], duration=4.0, reverse=reverse)


CANNED = {"reference-reach": reference_reach, "esa-dextrous": esa_dextrous_reach}


def canned(name: str) -> ScenarioConfig:
    """Load a shipped scenario document by name."""
    if name not in CANNED:
        raise KeyError(f"unknown scenario {name!r}; known: {sorted(CANNED)}")
    text = resources.files("freeflyer").joinpath("data", f"{name}.json").read_text(encoding="utf-8")
    return load_scenario(text, name)
