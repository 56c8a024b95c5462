"""Fast self-check suite run by ``freeflyer check``.

Each check returns a :class:`CheckResult` named ``<module>.<invariant>`` so a
failure points at the broken layer.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import dynamics, kinematics
from .model import SystemModel, SystemState, quat_multiply

__all__ = ["CheckResult", "random_state", "run_checks", "CHECKS"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    tolerance: float
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: {self.value:.3e} (tol {self.tolerance:.1e}, {self.seconds:.2f} s)"


def random_state(model: SystemModel, rng: np.random.Generator, velocities: bool = True,
                 com_at_origin: bool = False) -> SystemState:
    """Random configuration within the joint limits; random attitude and velocities."""
    n = model.n
    lim = np.clip(model.joint_limits, -np.pi, np.pi)
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    scale = 1.0 if velocities else 0.0
    state = SystemState(0.0, rng.normal(size=3), q, scale * rng.normal(size=3), scale * rng.normal(size=3),
                        rng.uniform(lim[:, 0], lim[:, 1]), scale * rng.normal(size=n))
    if com_at_origin:
        com = kinematics.system_com(model, state)
        state = state.replace(base_position=state.base_position - com)
    return state


def _planar():
    from .scenarios import planar_two_link
    return planar_two_link(payload_mass=2.0)


def _spatial():
    from .scenarios import esa_dextrous
    return esa_dextrous()


def check_explicit_vs_barycentric(samples: int = 200, seed: int = 1) -> tuple[float, float]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for model in (_planar(), _spatial()):
        for _ in range(samples // 2):
            s = random_state(model, rng, velocities=False, com_at_origin=True)
            d = kinematics.ee_position_explicit(model, s) - kinematics.ee_position_barycentric(model, s, np.zeros(3))
            worst = max(worst, float(np.abs(d).max()))
    return worst, 1e-9


def check_jacobian_fd(samples: int = 10, seed: int = 2, h: float = 1e-6) -> tuple[float, float]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for model in (_planar(), _spatial()):
        for _ in range(samples // 2):
            s = random_state(model, rng, velocities=False, com_at_origin=True)
            J = kinematics.generalized_jacobian(model, s).matrix
            fd = np.empty_like(J)
            for k in range(model.n):
                dth = np.zeros(model.n)
                dth[k] = h
                hi = kinematics.ee_position_barycentric(model, s.replace(joint_angles=s.joint_angles + dth), np.zeros(3))
                lo = kinematics.ee_position_barycentric(model, s.replace(joint_angles=s.joint_angles - dth), np.zeros(3))
                fd[:, k] = (hi - lo) / (2 * h)
            worst = max(worst, float(np.abs(fd - J).max()))
    return worst, 1e-6


def check_momentum_drift(duration: float = 1.0, dt: float = 1e-3) -> tuple[float, float]:
    """Worst of |P|, |L| (limit 1e-9) and CoM drift / 1e3 (limit 1e-6) on a torque-driven run."""
    model = _planar()
    state = SystemState.at_rest([0.3, -0.8])
    com0 = kinematics.system_com(model, state)
    worst = 0.0
    for k in range(int(round(duration / dt))):
        t = state.t
        tau = np.array([2.0 * np.sin(3 * t), -1.5 * np.cos(2 * t)])
        state = dynamics.step(model, state, tau, None, dt)
        if k % 10 == 9:
            m = dynamics.momentum(model, state)
            drift = np.linalg.norm(kinematics.system_com(model, state) - com0)
            worst = max(worst, np.linalg.norm(m.linear), np.linalg.norm(m.angular), drift * 1e-3)
    return float(worst), 1e-9


def check_inverse_forward(samples: int = 20, seed: int = 3) -> tuple[float, float]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for model in (_planar(), _spatial()):
        for _ in range(samples // 2):
            s = random_state(model, rng)
            tau = rng.normal(size=model.n)
            acc = dynamics.forward_dynamics_free(model, s, tau)
            back = dynamics.newton_euler(model, s, acc.joint_accels,
                                         np.concatenate([acc.base_lin_accel, acc.base_ang_accel])).joint_torques
            worst = max(worst, float(np.linalg.norm(back - tau) / np.linalg.norm(tau)))
    return worst, 1e-9


def check_quaternion_norm() -> tuple[float, float]:
    model = _planar()
    state = SystemState(0.0, np.zeros(3), quat_multiply([1, 0, 0, 0], [0.6, 0.0, 0.8, 0.0]), np.zeros(3),
                        np.array([0.3, -0.2, 1.0]), np.zeros(2), np.array([0.5, -0.5]))
    for _ in range(200):
        state = dynamics.step(model, state, np.zeros(2), None, 1e-3)
    return abs(float(np.linalg.norm(state.base_attitude)) - 1.0), 1e-12


CHECKS = {
    "kinematics.explicit_vs_barycentric": check_explicit_vs_barycentric,
    "kinematics.generalized_jacobian_fd": check_jacobian_fd,
    "dynamics.momentum_drift": check_momentum_drift,
    "dynamics.inverse_forward_roundtrip": check_inverse_forward,
    "dynamics.quaternion_norm": check_quaternion_norm,
}


def run_checks(names=None) -> list[CheckResult]:
    results = []
    for name, fn in CHECKS.items():
        if names is not None and name not in names:
            continue
        t0 = time.perf_counter()
        try:
            value, tol = fn()
        except Exception:  # a crash counts as a failure of that invariant
            value, tol = float("inf"), 0.0
        ok = bool(np.isfinite(value) and value < tol)
        results.append(CheckResult(name, ok, float(value), tol, time.perf_counter() - t0))
    return results
