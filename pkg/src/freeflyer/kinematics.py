"""Chain kinematics, barycentric vectors and Jacobians.

Frame ``i`` (0..n) is the standard DH frame attached to the distal end of
link ``i``; frame 0 is the mount frame, rigidly aligned with the base.
Link ``i`` is carried by frame ``i`` and the end effector is frame ``n``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _kernels
from ._vec import cross
from .model import DHParams, SystemModel, SystemState

__all__ = [
    "HomogeneousTransform",
    "LinkFrames",
    "BarycentricSet",
    "JacobianMatrix",
    "BodyGeometry",
    "dh_transform",
    "link_frames",
    "body_geometry",
    "system_com",
    "barycentric_vectors",
    "ee_position_explicit",
    "ee_position_barycentric",
    "fixed_base_jacobian",
    "generalized_jacobian",
]


@dataclass(frozen=True, eq=False)
class HomogeneousTransform:
    R: np.ndarray
    p: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        T = np.eye(4)
        T[:3, :3] = self.R
        T[:3, 3] = self.p
        return T

    def __matmul__(self, other: "HomogeneousTransform") -> "HomogeneousTransform":
        return HomogeneousTransform(self.R @ other.R, self.R @ other.p + self.p)

    def inverse(self) -> "HomogeneousTransform":
        return HomogeneousTransform(self.R.T, -self.R.T @ self.p)

    @classmethod
    def identity(cls) -> "HomogeneousTransform":
        return cls(np.eye(3), np.zeros(3))


def _dh_rp(a, alpha, d, theta):
    ct, st = np.cos(theta), np.sin(theta)
    ca, sa = np.cos(alpha), np.sin(alpha)
    R = np.array([[ct, -st * ca, st * sa],
                  [st, ct * ca, -ct * sa],
                  [0.0, sa, ca]])
    p = np.array([a * ct, a * st, d])
    return R, p


def dh_transform(params: DHParams, theta: float) -> HomogeneousTransform:
    """Rot_z(theta + offset) Trans_z(d) Trans_x(a) Rot_x(alpha)."""
    R, p = _dh_rp(params.a, params.alpha, params.d, theta + params.theta_offset)
    return HomogeneousTransform(R, p)


def _chain(model: SystemModel, theta: np.ndarray):
    """Mount-relative rotations (n+1, 3, 3) and origins (n+1, 3) of frames 0..n."""
    dh = model.arrays.dh
    n = model.n
    Rs = np.empty((n + 1, 3, 3))
    ps = np.empty((n + 1, 3))
    Rs[0] = np.eye(3)
    ps[0] = 0.0
    R = Rs[0]
    p = ps[0]
    for i in range(n):
        a, alpha, d, off = dh[i]
        Ri, pi = _dh_rp(a, alpha, d, theta[i] + off)
        p = R @ pi + p
        R = R @ Ri
        Rs[i + 1] = R
        ps[i + 1] = p
    return Rs, ps


@dataclass(frozen=True, eq=False)
class LinkFrames:
    """DH frames 0..n, relative to the mount and in the inertial frame."""

    local: list[HomogeneousTransform]
    inertial: list[HomogeneousTransform]

    @property
    def end_effector(self) -> HomogeneousTransform:
        return self.inertial[-1]


def link_frames(model: SystemModel, state: SystemState) -> LinkFrames:
    Rs, ps = _chain(model, state.joint_angles)
    R0 = state.base_rotation
    mount = state.base_position + R0 @ model.base.mount_offset
    local = [HomogeneousTransform(R, p) for R, p in zip(Rs, ps)]
    inertial = [HomogeneousTransform(R0 @ R, mount + R0 @ p) for R, p in zip(Rs, ps)]
    return LinkFrames(local, inertial)


class BodyGeometry(NamedTuple):
    """Inertial geometry of bodies 0 (base), 1..n (links), n+1 (payload).

    ``joints[k]`` / ``axes[k]`` is the point and unit axis about which body
    ``k+1`` turns relative to body ``k``; the payload's axis is zero since it
    is clamped to the last link.
    """

    rotations: np.ndarray  # (n+2, 3, 3)
    coms: np.ndarray       # (n+2, 3)
    joints: np.ndarray     # (n+1, 3): p_0 (mount) .. p_n (end effector)
    axes: np.ndarray       # (n+1, 3)


def body_geometry(model: SystemModel, state: SystemState) -> BodyGeometry:
    arr = model.arrays
    rot, coms, joints, axes = _kernels.geometry(arr.dh, arr.com_local, model.base.mount_offset,
                                                state.base_position, state.base_rotation,
                                                state.joint_angles)
    return BodyGeometry(rot, coms, joints, axes)


def system_com(model: SystemModel, state: SystemState) -> np.ndarray:
    geo = body_geometry(model, state)
    m = model.arrays.masses
    return m @ geo.coms / model.total_mass


@dataclass(frozen=True, eq=False)
class BarycentricSet:
    """Mass-weighted link vectors, each in its own link frame.

    ``payload`` is the analogous constant for the payload, i.e. minus the
    grasp offset scaled by the payload mass fraction, in the end-effector
    frame.
    """

    lambdas: np.ndarray  # (n, 3)
    payload: np.ndarray  # (3,)
    total_mass: float


def barycentric_vectors(model: SystemModel) -> BarycentricSet:
    """lambda_i = (M_{<i} l_i + m_i r_i) / m_T.

    ``M_{<i}`` is the mass of the base and links proximal to link ``i`` and
    ``r_i`` the CoM-to-distal-joint vector.  Equivalently
    ``(M_{<=i} l_i - m_i c_i) / m_T`` with ``c_i`` the joint-to-CoM offset.
    """
    arr = model.arrays
    mT = model.total_mass
    m_links = arr.masses[1:-1]
    proximal = arr.masses[0] + np.concatenate([[0.0], np.cumsum(m_links)[:-1]])
    lam = (proximal[:, None] * arr.link_vectors + m_links[:, None] * arr.com_to_tip) / mT
    payload = -(model.payload.mass / mT) * model.payload.grasp_offset
    return BarycentricSet(lam, payload, mT)


def ee_position_explicit(model: SystemModel, state: SystemState) -> np.ndarray:
    """Base CoM + rotated mount offset + sum of rotated link vectors."""
    Rs, _ = _chain(model, state.joint_angles)
    R0 = state.base_rotation
    chain = np.einsum("kij,kj->i", Rs[1:], model.arrays.link_vectors)
    return state.base_position + R0 @ (model.base.mount_offset + chain)


def ee_position_barycentric(model: SystemModel, state: SystemState, com=None) -> np.ndarray:
    """End-effector position from the system CoM and barycentric vectors.

    ``com`` defaults to the state's actual system CoM.
    """
    if com is None:
        com = system_com(model, state)
    bary = barycentric_vectors(model)
    Rs, _ = _chain(model, state.joint_angles)
    R0 = state.base_rotation
    local = (model.base.mass / bary.total_mass) * model.base.mount_offset
    local = local + np.einsum("kij,kj->i", Rs[1:], bary.lambdas) + Rs[-1] @ bary.payload
    return np.asarray(com, dtype=float) + R0 @ local


@dataclass(frozen=True, eq=False)
class JacobianMatrix:
    matrix: np.ndarray
    kind: str

    @property
    def min_singular_value(self) -> float:
        return float(np.linalg.svd(self.matrix, compute_uv=False).min())

    @property
    def linear(self) -> np.ndarray:
        return self.matrix[:3]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)


def fixed_base_jacobian(model: SystemModel, state: SystemState) -> JacobianMatrix:
    """Geometric 6xn end-effector Jacobian (linear rows first), inertial axes, mount held fixed."""
    geo = body_geometry(model, state)
    n = model.n
    z = geo.axes[:n]
    lever = geo.joints[n] - geo.joints[:n]
    J = np.vstack([cross(z, lever).T, z.T])
    return JacobianMatrix(J, "fixed_base")


def generalized_jacobian(model: SystemModel, state: SystemState) -> JacobianMatrix:
    """3xn Jacobian of the end-effector position at fixed system CoM and base attitude.

    Column k is ``z_{k-1} x sum_{i>=k} R_i lambda_i`` (the payload term
    included), i.e. the analytic derivative of the barycentric position map.
    """
    bary = barycentric_vectors(model)
    Rs, _ = _chain(model, state.joint_angles)
    R0 = state.base_rotation
    n = model.n
    terms = np.einsum("kij,kj->ki", Rs[1:], bary.lambdas)
    terms[-1] += Rs[-1] @ bary.payload
    tail = np.cumsum(terms[::-1], axis=0)[::-1]
    z = Rs[:n, :, 2]
    J = R0 @ cross(z, tail).T
    return JacobianMatrix(J, "generalized")
