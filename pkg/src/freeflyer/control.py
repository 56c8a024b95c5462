"""Controllers for the free-floating arm.

All controllers are pure functions of ``(model, state, setpoint, gains)``.
Attitude torques are returned in the inertial frame, about the base CoM.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import base_response, clamp_torques, newton_euler, reaction_wrench
from .kinematics import ee_position_explicit, fixed_base_jacobian, generalized_jacobian
from .model import SystemModel, SystemState, Wrench, quat_conjugate, quat_multiply

__all__ = [
    "ControllerGains",
    "TrajectorySetpoint",
    "RateCommand",
    "TorqueCommand",
    "interpolate",
    "dls_solve",
    "rmrc_generalized",
    "rmrc_naive",
    "computed_torque",
    "attitude_pd",
    "attitude_feedforward",
    "SINGULAR_THRESHOLD",
]

SINGULAR_THRESHOLD = 1e-8


@dataclass(frozen=True)
class ControllerGains:
    task_gain: float = 2.0            # 1/s
    kp: float = 100.0                 # 1/s^2
    kd: float = 20.0                  # 1/s
    dls_damping: float = 1e-4         # m^2
    attitude_kp: float = 200.0        # N m / rad
    attitude_kd: float = 100.0        # N m s / rad
    attitude_torque_limit: float = np.inf
    max_ee_speed: float = np.inf      # m/s, enforced on the task-space command

    def __post_init__(self):
        for name in ("task_gain", "kp", "kd", "attitude_kp", "attitude_kd", "attitude_torque_limit",
                     "max_ee_speed"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)!r}")
        if not self.dls_damping > 0:
            raise ValueError(f"dls_damping must be > 0, got {self.dls_damping!r}")


@dataclass(frozen=True, eq=False)
class TrajectorySetpoint:
    """Desired position/velocity/acceleration, task space (m) or joint space (rad)."""

    position: np.ndarray
    velocity: np.ndarray
    acceleration: np.ndarray
    t: float
    clamped: bool = False


@dataclass(frozen=True, eq=False)
class RateCommand:
    rates: np.ndarray
    min_singular_value: float
    singular: bool
    clamped: bool


@dataclass(frozen=True, eq=False)
class TorqueCommand:
    torques: np.ndarray
    joint_accels: np.ndarray  # commanded, before torque clamping
    clamped: bool


def interpolate(start, goal, duration: float, t: float) -> TrajectorySetpoint:
    """Straight-line path with quintic time scaling (rest-to-rest).

    ``t`` outside ``[0, duration]`` is clamped and flagged.
    """
    if not duration > 0:
        raise ValueError(f"duration must be > 0, got {duration!r}")
    start = np.asarray(start, dtype=float)
    delta = np.asarray(goal, dtype=float) - start
    clamped = not 0.0 <= t <= duration
    tau = min(max(t, 0.0), duration) / duration
    s = tau**3 * (10 - 15 * tau + 6 * tau**2)
    ds = 30 * tau**2 * (1 - tau) ** 2 / duration
    dds = 60 * tau * (1 - 3 * tau + 2 * tau**2) / duration**2
    return TrajectorySetpoint(start + s * delta, ds * delta, dds * delta, float(t), clamped)


def dls_solve(J: np.ndarray, v: np.ndarray, damping: float) -> np.ndarray:
    """Damped least squares: ``J^T (J J^T + damping I)^-1 v``."""
    m = J.shape[0]
    return J.T @ np.linalg.solve(J @ J.T + damping * np.eye(m), v)


def _rmrc(model, state, setpoint, gains, J, enforce_limits=True) -> RateCommand:
    p = ee_position_explicit(model, state)
    v = np.asarray(setpoint.velocity, dtype=float) + gains.task_gain * (np.asarray(setpoint.position) - p)
    speed = np.linalg.norm(v)
    if speed > gains.max_ee_speed:
        v = v * (gains.max_ee_speed / speed)
    sigma = np.linalg.svd(J, compute_uv=False)
    # rank-deficient directions (e.g. out of plane) count as singular only if the chain can use them
    sigma_min = float(sigma[min(J.shape) - 1])
    rates = dls_solve(J, v, gains.dls_damping)
    clamped = False
    if enforce_limits:
        ratio = np.max(np.abs(rates) / model.rate_limits)
        if ratio > 1.0:
            rates = rates / ratio
            clamped = True
    return RateCommand(rates, sigma_min, sigma_min < SINGULAR_THRESHOLD, clamped)


def rmrc_generalized(model: SystemModel, state: SystemState, setpoint: TrajectorySetpoint,
                     gains: ControllerGains, enforce_limits: bool = True) -> RateCommand:
    """Resolved-motion rate command through the generalized Jacobian.

    ``theta_dot = DLS(J_gen) (v_des + K (p_des - p))``; joint rates are scaled
    uniformly into the model's rate limits.
    """
    J = generalized_jacobian(model, state).matrix
    return _rmrc(model, state, setpoint, gains, J, enforce_limits)


def rmrc_naive(model: SystemModel, state: SystemState, setpoint: TrajectorySetpoint,
               gains: ControllerGains, enforce_limits: bool = True) -> RateCommand:
    """Same law with the fixed-base Jacobian, i.e. ignoring base recoil."""
    J = fixed_base_jacobian(model, state).linear
    return _rmrc(model, state, setpoint, gains, J, enforce_limits)


def computed_torque(model: SystemModel, state: SystemState, setpoint: TrajectorySetpoint,
                    gains: ControllerGains, external_base_wrench: Wrench | None = None) -> TorqueCommand:
    """Feedback-linearizing joint torques on the free-floating plant.

    The inverse dynamics uses the base accelerations that momentum balance
    implies for the commanded joint accelerations.
    """
    th_err = np.asarray(setpoint.position, dtype=float) - state.joint_angles
    thd_err = np.asarray(setpoint.velocity, dtype=float) - state.joint_rates
    qdd = np.asarray(setpoint.acceleration, dtype=float) + gains.kd * thd_err + gains.kp * th_err
    base = base_response(model, state, qdd, external_base_wrench)
    tau = newton_euler(model, state, qdd, base).joint_torques
    tau, clamped = clamp_torques(model, tau)
    return TorqueCommand(tau, qdd, clamped)


def attitude_pd(state: SystemState, gains: ControllerGains, target=(1.0, 0.0, 0.0, 0.0)) -> np.ndarray:
    """PD torque driving the base attitude to ``target``, inertial frame."""
    e = quat_multiply(quat_conjugate(np.asarray(target, dtype=float)), state.base_attitude)
    if e[0] < 0:
        e = -e
    # vector part of the error quaternion ~ half the rotation vector, in the base frame
    torque_body = -2.0 * gains.attitude_kp * e[1:] - gains.attitude_kd * state.base_angular_velocity
    return state.base_rotation @ torque_body


def attitude_feedforward(model: SystemModel, state: SystemState, joint_accels) -> np.ndarray:
    """Torque cancelling the arm's reaction moment at the mount: ``-N_r``."""
    return -reaction_wrench(model, state, joint_accels).moment
