"""Newton-Euler inverse dynamics and free-floating forward dynamics.

Generalized velocity ordering used by the mass matrix and generalized
forces: ``(v0, w0_body, theta_dot)`` where ``v0`` is the base CoM velocity
in the inertial frame and ``w0_body`` the base angular velocity in the base
frame.  The matching generalized force is ``(F_base, N_base_body, tau)``:
force on the base (inertial), moment about the base CoM (base frame), and
joint torques.

Gravity is identically zero throughout.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from . import _kernels
from ._vec import cross
from .kinematics import BodyGeometry, body_geometry, system_com
from .model import SystemModel, SystemState, Wrench

log = logging.getLogger(__name__)

__all__ = [
    "LinkKinematics",
    "NewtonEulerResult",
    "ReactionWrench",
    "MomentumState",
    "FreeAccelerations",
    "DynamicsError",
    "IntegrationError",
    "newton_euler",
    "mass_matrix",
    "bias_forces",
    "base_response",
    "reaction_wrench",
    "reaction_moment_lumped",
    "forward_dynamics_free",
    "forward_dynamics_fixed",
    "body_velocities",
    "momentum",
    "angular_momentum_about",
    "step",
    "step_prescribed",
    "clamp_torques",
    "saturate",
]


class DynamicsError(RuntimeError):
    pass


class IntegrationError(DynamicsError):
    def __init__(self, t: float, entry: str, value: float):
        super().__init__(f"non-finite state at t={t:.6g}: {entry} = {value!r}")
        self.t = t
        self.entry = entry


class LinkKinematics(NamedTuple):
    """Inertial angular/CoM-linear velocity and acceleration of bodies 1..n+1."""

    w: np.ndarray
    wd: np.ndarray
    v: np.ndarray
    vd: np.ndarray


@dataclass(frozen=True, eq=False)
class NewtonEulerResult:
    joint_torques: np.ndarray
    base_force: np.ndarray        # inertial
    base_torque: np.ndarray       # base frame, about base CoM
    link_forces: np.ndarray       # F_ci, (n+1, 3)
    link_moments: np.ndarray      # N_ci, (n+1, 3)
    mount_force: np.ndarray       # force of base on arm at the mount
    mount_moment: np.ndarray      # moment of base on arm about the mount
    kinematics: LinkKinematics

    @property
    def total_force(self) -> np.ndarray:
        return self.link_forces.sum(axis=0)

    @property
    def total_moment(self) -> np.ndarray:
        return self.link_moments.sum(axis=0)

    @property
    def generalized(self) -> np.ndarray:
        return np.concatenate([self.base_force, self.base_torque, self.joint_torques])


@dataclass(frozen=True, eq=False)
class ReactionWrench:
    """Wrench the arm exerts on the spacecraft at the mount, inertial frame.

    ``moment`` is about the mount point.  ``total_force`` / ``total_moment``
    are the arm's summed inertial force and spin moment.
    """

    force: np.ndarray
    moment: np.ndarray
    total_force: np.ndarray
    total_moment: np.ndarray


@dataclass(frozen=True, eq=False)
class MomentumState:
    linear: np.ndarray
    angular: np.ndarray  # about the system CoM
    kinetic_energy: float


class FreeAccelerations(NamedTuple):
    joint_accels: np.ndarray
    base_lin_accel: np.ndarray
    base_ang_accel: np.ndarray  # base frame

    @property
    def generalized(self) -> np.ndarray:
        return np.concatenate([self.base_lin_accel, self.base_ang_accel, self.joint_accels])


def _split_base(base_accels):
    if base_accels is None:
        return np.zeros(3), np.zeros(3)
    b = np.asarray(base_accels, dtype=float).reshape(6)
    return b[:3].copy(), b[3:].copy()


def _rnea(model, state, geo, joint_accels, base_lin, base_ang):
    arr = model.arrays
    return _kernels.rnea(arr.masses, arr.inertias, geo.rotations, geo.coms, geo.joints, geo.axes,
                         state.base_velocity, state.base_angular_velocity, state.joint_rates,
                         np.asarray(joint_accels, dtype=float), base_lin, base_ang)


def newton_euler(model: SystemModel, state: SystemState, joint_accels, base_accels=None,
                 geometry: BodyGeometry | None = None) -> NewtonEulerResult:
    """Inverse dynamics of the base-mounted chain.

    ``base_accels`` is ``(v0_dot inertial, w0_dot base frame)``.  The outward
    recursion propagates velocities/accelerations from the moving base; the
    inward recursion accumulates link wrenches from the tip (payload
    included) back to the mount.
    """
    geo = body_geometry(model, state) if geometry is None else geometry
    base_lin, base_ang = _split_base(base_accels)
    tau, bf, bt, F, N, f1, n1, w, wd, v, vd = _rnea(model, state, geo, joint_accels, base_lin, base_ang)
    kin = LinkKinematics(w[1:], wd[1:], v[1:], vd[1:])
    return NewtonEulerResult(tau, bf, bt, F[1:], N[1:], f1, n1, kin)


def mass_matrix(model: SystemModel, state: SystemState, method: str = "jacobian",
                geometry: BodyGeometry | None = None) -> np.ndarray:
    """Generalized (6+n)x(6+n) mass matrix.

    ``method="probe"`` assembles it column by column from unit-acceleration
    Newton-Euler calls at zero velocity; ``"jacobian"`` sums body Jacobian
    contributions and is what the integrator uses.
    """
    geo = body_geometry(model, state) if geometry is None else geometry
    n = model.n
    if method == "probe":
        still = state.replace(base_velocity=np.zeros(3), base_angular_velocity=np.zeros(3),
                              joint_rates=np.zeros(n))
        H = np.empty((6 + n, 6 + n))
        for k in range(6 + n):
            e = np.zeros(6 + n)
            e[k] = 1.0
            H[:, k] = newton_euler(model, still, e[6:], e[:6], geometry=geo).generalized
        return H
    if method != "jacobian":
        raise ValueError(f"unknown mass-matrix method {method!r}")
    arr = model.arrays
    return _kernels.mass_matrix(arr.masses, arr.inertias, geo.rotations, geo.coms, geo.joints, geo.axes)


def bias_forces(model, state, geometry=None) -> np.ndarray:
    """Velocity-product generalized forces (Newton-Euler at zero acceleration)."""
    return newton_euler(model, state, np.zeros(model.n), None, geometry=geometry).generalized


def _external_generalized(model, state, external: Wrench | None) -> np.ndarray:
    Q = np.zeros(6)
    if external is None:
        return Q
    R0 = state.base_rotation
    if external.frame == "inertial":
        Q[:3] = external.force
        Q[3:] = R0.T @ external.torque
    elif external.frame == "base":
        Q[:3] = R0 @ external.force
        Q[3:] = external.torque
    else:  # base-frame components, applied at the mount point
        Q[:3] = R0 @ external.force
        Q[3:] = external.torque + cross(model.base.mount_offset, external.force)
    return Q


def _factor(H):
    try:
        return cho_factor(H)
    except LinAlgError as exc:
        raise DynamicsError(f"generalized mass matrix is not positive definite "
                            f"(condition number {np.linalg.cond(H):.3g}); check inertia data") from exc


def forward_dynamics_free(model: SystemModel, state: SystemState, joint_torques,
                          external_base_wrench: Wrench | None = None) -> FreeAccelerations:
    """Accelerations of the unconstrained base + arm under joint torques."""
    geo = body_geometry(model, state)
    H = mass_matrix(model, state, geometry=geo)
    C = bias_forces(model, state, geometry=geo)
    Q = np.concatenate([_external_generalized(model, state, external_base_wrench),
                        np.asarray(joint_torques, dtype=float)])
    qdd = cho_solve(_factor(H), Q - C)
    return FreeAccelerations(qdd[6:], qdd[:3], qdd[3:6])


def forward_dynamics_fixed(model: SystemModel, state: SystemState, joint_torques) -> np.ndarray:
    """Joint accelerations with the base held inertially fixed."""
    geo = body_geometry(model, state)
    H = mass_matrix(model, state, geometry=geo)
    C = bias_forces(model, state, geometry=geo)
    return np.linalg.solve(H[6:, 6:], np.asarray(joint_torques, dtype=float) - C[6:])


def base_response(model: SystemModel, state: SystemState, joint_accels,
                  external_base_wrench: Wrench | None = None) -> np.ndarray:
    """Base accelerations ``(v0_dot, w0_dot_body)`` implied by momentum balance for given joint accelerations."""
    geo = body_geometry(model, state)
    H = mass_matrix(model, state, geometry=geo)
    C = bias_forces(model, state, geometry=geo)
    Qb = _external_generalized(model, state, external_base_wrench)
    rhs = Qb - C[:6] - H[:6, 6:] @ np.asarray(joint_accels, dtype=float)
    return cho_solve(_factor(H[:6, :6]), rhs)


def reaction_wrench(model: SystemModel, state: SystemState, joint_accels,
                    external_base_wrench: Wrench | None = None) -> ReactionWrench:
    """Wrench exerted on the spacecraft by the arm at the mount.

    Base accelerations are the momentum-consistent ones.  The moment is the
    exact Newton-Euler mount moment, ``-(N_T + sum_i (c_i - p_mount) x F_ci)``.
    """
    base = base_response(model, state, joint_accels, external_base_wrench)
    ne = newton_euler(model, state, joint_accels, base)
    return ReactionWrench(-ne.mount_force, -ne.mount_moment, ne.total_force, ne.total_moment)


def reaction_moment_lumped(model: SystemModel, state: SystemState, joint_accels) -> np.ndarray:
    """Lumped approximation of the mount reaction moment.

    Replaces the per-link moment arms by the single arm from the mount to the
    system CoM: ``-(N_T + (p_cm - p_mount) x F_T)``.
    """
    base = base_response(model, state, joint_accels)
    ne = newton_euler(model, state, joint_accels, base)
    mount = state.base_position + state.base_rotation @ model.base.mount_offset
    arm = system_com(model, state) - mount
    return -(ne.total_moment + cross(arm, ne.total_force))


def body_velocities(model: SystemModel, state: SystemState, geometry=None):
    """Inertial angular velocity and CoM velocity of every body (base first)."""
    geo = body_geometry(model, state) if geometry is None else geometry
    res = _rnea(model, state, geo, np.zeros(model.n), np.zeros(3), np.zeros(3))
    return res[7], res[9]


def _inertial_inertias(model, geo):
    R = geo.rotations
    return np.einsum("kij,kjl,kml->kim", R, model.arrays.inertias, R)


def angular_momentum_about(model, state, point, bodies=None) -> np.ndarray:
    """Angular momentum about an inertially fixed ``point`` of the selected bodies."""
    geo = body_geometry(model, state)
    w, v = body_velocities(model, state, geo)
    I = _inertial_inertias(model, geo)
    m = model.arrays.masses
    idx = slice(None) if bodies is None else bodies
    spin = np.einsum("kij,kj->ki", I[idx], w[idx])
    orbital = cross(geo.coms[idx] - np.asarray(point), m[idx, None] * v[idx])
    return (spin + orbital).sum(axis=0)


def momentum(model: SystemModel, state: SystemState) -> MomentumState:
    geo = body_geometry(model, state)
    w, v = body_velocities(model, state, geo)
    I = _inertial_inertias(model, geo)
    m = model.arrays.masses
    P = (m[:, None] * v).sum(axis=0)
    com = m @ geo.coms / model.total_mass
    Iw = np.einsum("kij,kj->ki", I, w)
    L = (Iw + cross(geo.coms - com, m[:, None] * v)).sum(axis=0)
    ke = 0.5 * float(np.sum(m * np.einsum("ki,ki->k", v, v)) + np.sum(np.einsum("ki,ki->k", w, Iw)))
    return MomentumState(P, L, ke)


def clamp_torques(model: SystemModel, torques) -> tuple[np.ndarray, bool]:
    tau = np.asarray(torques, dtype=float)
    lim = model.torque_limits
    clamped = np.clip(tau, -lim, lim)
    return clamped, bool(np.any(clamped != tau))


def saturate(torque, limit: float) -> tuple[np.ndarray, bool]:
    """Scale ``torque`` down to norm ``limit``; returns (torque, saturated)."""
    torque = np.asarray(torque, dtype=float)
    norm = float(np.linalg.norm(torque))
    if norm > limit:
        return torque * (limit / norm), True
    return torque, False


def _finish(model, state, x1, dt) -> SystemState:
    bad = np.flatnonzero(~np.isfinite(x1))
    if bad.size:
        raise IntegrationError(state.t + dt, _entry_name(bad[0], model.n), float(x1[bad[0]]))
    return SystemState.from_vector(state.t + dt, x1)


STATE_ENTRIES = ("base_position", "base_attitude", "base_velocity", "base_angular_velocity", "joint_angles",
                 "joint_rates")


def _entry_name(i: int, n: int) -> str:
    blocks = [("base_position", 3), ("base_attitude", 4), ("base_velocity", 3),
              ("base_angular_velocity", 3), ("joint_angles", n), ("joint_rates", n)]
    for name, size in blocks:
        if i < size:
            return f"{name}[{i}]"
        i -= size
    raise IndexError(i)


def step(model: SystemModel, state: SystemState, joint_torques, attitude_torque=None, dt: float = 1e-3,
         attitude_limit: float = np.inf, external_base_wrench: Wrench | None = None) -> SystemState:
    """Advance the free-floating system by one classical RK4 step.

    Joint torques are clamped to the model limits.  ``attitude_torque`` is an
    ideal actuator torque on the base (inertial frame, about the base CoM),
    saturated in norm at ``attitude_limit``.  All inputs are held constant
    over the step; an ``external_base_wrench`` is frozen in the inertial
    frame at the start of the step.
    """
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt!r}")
    if not np.all(np.isfinite(joint_torques)):
        raise ValueError(f"joint torques must be finite, got {joint_torques!r}")
    tau, clamped = clamp_torques(model, joint_torques)
    if clamped:
        log.warning("joint torques clamped to limits at t=%.6g", state.t)
    att = np.zeros(3) if attitude_torque is None else np.asarray(attitude_torque, dtype=float)
    att, _ = saturate(att, attitude_limit)
    force = np.zeros(3)
    torque = att.copy()
    if external_base_wrench is not None:
        Qe = _external_generalized(model, state, external_base_wrench)
        force = force + Qe[:3]
        torque = torque + state.base_rotation @ Qe[3:]
    arr = model.arrays
    x1 = _kernels.rk4_free(arr.masses, arr.inertias, arr.dh, arr.com_local, model.base.mount_offset,
                           state.to_vector(), float(dt), tau, force, torque)
    return _finish(model, state, x1, dt)


def step_prescribed(model: SystemModel, state: SystemState, joint_accel_fn: Callable[[float], np.ndarray],
                    dt: float) -> SystemState:
    """RK4 step with joint accelerations prescribed as a function of time.

    The base moves according to momentum balance with no external wrench.
    """
    t = state.t
    acc = [np.asarray(joint_accel_fn(s), dtype=float) for s in (t, t + dt / 2, t + dt)]
    arr = model.arrays
    x1 = _kernels.rk4_prescribed(arr.masses, arr.inertias, arr.dh, arr.com_local, model.base.mount_offset,
                                 state.to_vector(), float(dt), *acc)
    return _finish(model, state, x1, dt)
