"""Rigid-body and system description types for a spacecraft-mounted arm.

Vector conventions used throughout the package:

* ``mount_offset`` (s0): base CoM -> manipulator mount point, base frame.
* ``link_vector`` (l_i): joint-i frame origin -> joint-(i+1) frame origin,
  expressed in link frame i.  With standard DH this is
  ``(a, d*sin(alpha), d*cos(alpha))``.
* ``com_offset``: joint-i frame origin -> link CoM, link frame i.
* ``com_to_tip`` (r_i): link CoM -> distal joint, link frame i.

so that ``com_offset + com_to_tip == link_vector`` for every link.

The mount frame is rigidly aligned with the base body frame and joint 1
rotates about its z axis.  All types are immutable after construction.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

__all__ = [
    "InertiaTensor",
    "DHParams",
    "LinkParams",
    "BaseBody",
    "Payload",
    "SystemModel",
    "SystemState",
    "Wrench",
    "Violation",
    "validate_model",
    "total_mass",
    "quat_to_matrix",
    "quat_multiply",
    "quat_conjugate",
    "attitude_error_angle",
]

SYMMETRY_TOL = 1e-12
CONSISTENCY_TOL = 1e-12
QUAT_NORM_TOL = 1e-9


def _vec3(v, name="vector") -> np.ndarray:
    arr = np.array(v, dtype=float).reshape(-1)
    if arr.shape != (3,):
        raise ValueError(f"{name} must have 3 entries, got {arr.shape}")
    arr.setflags(write=False)
    return arr


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class InertiaTensor:
    """3x3 inertia about the body CoM, body frame, kg m^2."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.shape == (3,):
            m = np.diag(m)
        if m.shape != (3, 3):
            raise ValueError(f"inertia must be 3x3 or a 3-vector of principal moments, got {m.shape}")
        object.__setattr__(self, "matrix", _frozen(m))

    @classmethod
    def diagonal(cls, ixx: float, iyy: float, izz: float) -> "InertiaTensor":
        return cls(np.diag([ixx, iyy, izz]))

    @classmethod
    def rod(cls, mass: float, length: float, axis: int = 0, radius: float = 0.02) -> "InertiaTensor":
        """Solid cylinder of given length lying along ``axis``."""
        axial = 0.5 * mass * radius**2
        transverse = mass * (3 * radius**2 + length**2) / 12.0
        moments = [transverse] * 3
        moments[axis] = axial
        return cls(np.diag(moments))

    @classmethod
    def box(cls, mass: float, dims: Sequence[float]) -> "InertiaTensor":
        x, y, z = dims
        return cls(np.diag([mass * (y * y + z * z), mass * (x * x + z * z), mass * (x * x + y * y)]) / 12.0)

    def violations(self, where: str) -> list["Violation"]:
        out = []
        m = self.matrix
        if not np.all(np.isfinite(m)):
            return [Violation(where, "inertia has non-finite entries", m.tolist())]
        scale = max(np.abs(m).max(), 1e-300)
        asym = np.abs(m - m.T).max()
        if asym > SYMMETRY_TOL * scale:
            out.append(Violation(where, "inertia is not symmetric", float(asym)))
        eig = np.linalg.eigvalsh(0.5 * (m + m.T))
        if eig.min() <= 0.0:
            out.append(Violation(where, "inertia is not positive definite", eig.tolist()))
        else:
            a, b, c = sorted(eig)
            # only the largest moment can break the triangle inequality
            if a + b < c * (1.0 - 1e-12):
                out.append(Violation(where, "principal moments violate the triangle inequality", eig.tolist()))
        return out


@dataclass(frozen=True)
class DHParams:
    """Standard (distal) Denavit-Hartenberg parameters of one joint/link."""

    a: float = 0.0
    alpha: float = 0.0
    d: float = 0.0
    theta_offset: float = 0.0

    def link_vector(self) -> np.ndarray:
        """Joint-i origin -> joint-(i+1) origin in the link's own frame."""
        return _vec3([self.a, self.d * np.sin(self.alpha), self.d * np.cos(self.alpha)])


@dataclass(frozen=True, eq=False)
class LinkParams:
    dh: DHParams
    mass: float
    inertia: InertiaTensor
    com_offset: np.ndarray
    link_vector: np.ndarray
    com_to_tip: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mass", float(self.mass))
        if not isinstance(self.inertia, InertiaTensor):
            object.__setattr__(self, "inertia", InertiaTensor(self.inertia))
        for name in ("com_offset", "link_vector", "com_to_tip"):
            object.__setattr__(self, name, _vec3(getattr(self, name), name))

    @classmethod
    def from_dh(cls, dh: DHParams, mass: float, inertia, com_offset=None) -> "LinkParams":
        """Build a link whose geometry vectors are derived from its DH row.

        ``com_offset`` defaults to the midpoint of the link vector.
        """
        lvec = dh.link_vector()
        com = 0.5 * lvec if com_offset is None else _vec3(com_offset, "com_offset")
        return cls(dh=dh, mass=mass, inertia=inertia, com_offset=com, link_vector=lvec, com_to_tip=lvec - com)


@dataclass(frozen=True, eq=False)
class BaseBody:
    mass: float
    inertia: InertiaTensor
    mount_offset: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "mass", float(self.mass))
        if not isinstance(self.inertia, InertiaTensor):
            object.__setattr__(self, "inertia", InertiaTensor(self.inertia))
        object.__setattr__(self, "mount_offset", _vec3(self.mount_offset, "mount_offset"))


@dataclass(frozen=True, eq=False)
class Payload:
    """Rigid body clamped to the end-effector frame; zero mass means none."""

    mass: float = 0.0
    inertia: InertiaTensor = field(default_factory=lambda: InertiaTensor(np.eye(3)))
    grasp_offset: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "mass", float(self.mass))
        if not isinstance(self.inertia, InertiaTensor):
            object.__setattr__(self, "inertia", InertiaTensor(self.inertia))
        object.__setattr__(self, "grasp_offset", _vec3(self.grasp_offset, "grasp_offset"))


@dataclass(frozen=True)
class Violation:
    field: str
    message: str
    value: object = None

    def __str__(self):
        return f"{self.field}: {self.message} (value={self.value!r})"


@dataclass(frozen=True, eq=False)
class SystemModel:
    base: BaseBody
    links: tuple[LinkParams, ...]
    payload: Payload = field(default_factory=Payload)
    joint_limits: np.ndarray = None
    rate_limits: np.ndarray = None
    torque_limits: np.ndarray = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "links", tuple(self.links))
        n = len(self.links)
        if self.joint_limits is None:
            object.__setattr__(self, "joint_limits", np.tile([-np.pi, np.pi], (n, 1)) * 4.0)
        if self.rate_limits is None:
            object.__setattr__(self, "rate_limits", np.full(n, np.inf))
        if self.torque_limits is None:
            object.__setattr__(self, "torque_limits", np.full(n, np.inf))
        object.__setattr__(self, "joint_limits", _frozen(np.reshape(self.joint_limits, (-1, 2))))
        object.__setattr__(self, "rate_limits", _frozen(np.reshape(self.rate_limits, -1)))
        object.__setattr__(self, "torque_limits", _frozen(np.reshape(self.torque_limits, -1)))

    @property
    def n(self) -> int:
        return len(self.links)

    @cached_property
    def total_mass(self) -> float:
        return self.base.mass + sum(link.mass for link in self.links) + self.payload.mass

    @cached_property
    def arrays(self) -> "_ModelArrays":
        return _ModelArrays.build(self)

    def with_masses(self, scale: float = 1.0, base_scale: float = 1.0) -> "SystemModel":
        """Copy with link and payload masses/inertias times ``scale`` and base times ``base_scale``."""
        base = BaseBody(self.base.mass * base_scale, InertiaTensor(self.base.inertia.matrix * base_scale),
                        self.base.mount_offset)
        links = [LinkParams(l.dh, l.mass * scale, InertiaTensor(l.inertia.matrix * scale),
                            l.com_offset, l.link_vector, l.com_to_tip) for l in self.links]
        payload = Payload(self.payload.mass * scale, InertiaTensor(self.payload.inertia.matrix * scale),
                          self.payload.grasp_offset)
        return SystemModel(base, links, payload, self.joint_limits, self.rate_limits, self.torque_limits,
                           dict(self.metadata))


@dataclass(frozen=True, eq=False)
class _ModelArrays:
    """Stacked per-body constants used by the numeric kernels.

    Body index 0 is the base, 1..n the links, n+1 the payload.
    """

    masses: np.ndarray        # (n+2,)
    inertias: np.ndarray      # (n+2, 3, 3) body frame
    com_local: np.ndarray     # (n+2, 3) CoM position in the body's proximal frame
    dh: np.ndarray            # (n, 4) a, alpha, d, theta_offset
    link_vectors: np.ndarray  # (n, 3)
    com_to_tip: np.ndarray    # (n, 3)

    @classmethod
    def build(cls, model: SystemModel) -> "_ModelArrays":
        bodies_m = [model.base.mass] + [l.mass for l in model.links] + [model.payload.mass]
        payload_inertia = model.payload.inertia.matrix if model.payload.mass > 0 else np.zeros((3, 3))
        inertias = [model.base.inertia.matrix] + [l.inertia.matrix for l in model.links] + [payload_inertia]
        com_local = [np.zeros(3)] + [l.com_offset for l in model.links] + [model.payload.grasp_offset]
        dh = [[l.dh.a, l.dh.alpha, l.dh.d, l.dh.theta_offset] for l in model.links]
        return cls(
            masses=_frozen(bodies_m),
            inertias=_frozen(inertias),
            com_local=_frozen(com_local),
            dh=_frozen(dh),
            link_vectors=_frozen([l.link_vector for l in model.links]),
            com_to_tip=_frozen([l.com_to_tip for l in model.links]),
        )


def total_mass(model: SystemModel) -> float:
    return model.total_mass


def validate_model(model: SystemModel) -> list[Violation]:
    """Check every model invariant; an empty list means the model is valid."""
    out: list[Violation] = []
    if not model.base.mass > 0:
        out.append(Violation("base.mass", "must be > 0", model.base.mass))
    out += model.base.inertia.violations("base.inertia")
    if not np.all(np.isfinite(model.base.mount_offset)):
        out.append(Violation("base.mount_offset", "must be finite", model.base.mount_offset.tolist()))
    if model.n < 1:
        out.append(Violation("links", "at least one link is required", model.n))
    for i, link in enumerate(model.links, start=1):
        where = f"links[{i}]"
        dh = link.dh
        if not np.all(np.isfinite([dh.a, dh.alpha, dh.d, dh.theta_offset])):
            out.append(Violation(f"{where}.dh", "must be finite", dh))
        if not dh.a >= 0:
            out.append(Violation(f"{where}.dh.a", "must be >= 0", dh.a))
        if not link.mass > 0:
            out.append(Violation(f"{where}.mass", "must be > 0", link.mass))
        out += link.inertia.violations(f"{where}.inertia")
        gap = np.abs(link.com_offset + link.com_to_tip - link.link_vector).max()
        if not gap <= CONSISTENCY_TOL * max(1.0, np.abs(link.link_vector).max()):
            out.append(Violation(f"{where}.com_to_tip", "com_offset + com_to_tip != link_vector", float(gap)))
        dh_gap = np.abs(link.link_vector - dh.link_vector()).max()
        if not dh_gap <= CONSISTENCY_TOL * max(1.0, abs(dh.a) + abs(dh.d)):
            out.append(Violation(f"{where}.link_vector", "inconsistent with the DH row", float(dh_gap)))
    p = model.payload
    if not p.mass >= 0:
        out.append(Violation("payload.mass", "must be >= 0", p.mass))
    if p.mass > 0:
        out += p.inertia.violations("payload.inertia")
    if not model.total_mass > 0:
        out.append(Violation("total_mass", "must be > 0", model.total_mass))
    n = model.n
    for name, arr, shape in (("joint_limits", model.joint_limits, (n, 2)),
                             ("rate_limits", model.rate_limits, (n,)),
                             ("torque_limits", model.torque_limits, (n,))):
        if arr.shape != shape:
            out.append(Violation(name, f"expected shape {shape}", arr.shape))
    if model.joint_limits.shape == (n, 2):
        for i, (lo, hi) in enumerate(model.joint_limits, start=1):
            if not lo < hi:
                out.append(Violation(f"joint_limits[{i}]", "min must be < max", (float(lo), float(hi))))
    for name in ("rate_limits", "torque_limits"):
        arr = getattr(model, name)
        bad = np.flatnonzero(~(arr > 0))
        for i in bad:
            out.append(Violation(f"{name}[{i + 1}]", "must be > 0", float(arr[i])))
    return out


# -- attitude helpers (scalar-first quaternions, body -> inertial) --

def quat_to_matrix(q) -> np.ndarray:
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def quat_multiply(p, q) -> np.ndarray:
    pw, px, py, pz = p
    qw, qx, qy, qz = q
    return np.array([
        pw * qw - px * qx - py * qy - pz * qz,
        pw * qx + px * qw + py * qz - pz * qy,
        pw * qy - px * qz + py * qw + pz * qx,
        pw * qz + px * qy - py * qx + pz * qw,
    ])


def quat_conjugate(q) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def attitude_error_angle(q, target=(1.0, 0.0, 0.0, 0.0)) -> float:
    """Rotation angle (rad, in [0, pi]) taking ``target`` to ``q``."""
    e = quat_multiply(quat_conjugate(target), q)
    return float(2.0 * np.arctan2(np.linalg.norm(e[1:]), abs(e[0])))


@dataclass(frozen=True, eq=False)
class SystemState:
    """Time-varying state.  Base angular velocity is in the base frame."""

    t: float
    base_position: np.ndarray
    base_attitude: np.ndarray
    base_velocity: np.ndarray
    base_angular_velocity: np.ndarray
    joint_angles: np.ndarray
    joint_rates: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "t", float(self.t))
        for name in ("base_position", "base_velocity", "base_angular_velocity"):
            object.__setattr__(self, name, _vec3(getattr(self, name), name))
        q = np.array(self.base_attitude, dtype=float).reshape(4)
        norm = np.linalg.norm(q)
        if not abs(norm - 1.0) <= QUAT_NORM_TOL:
            raise ValueError(f"base_attitude must be a unit quaternion, |q| = {norm!r}")
        object.__setattr__(self, "base_attitude", _frozen(q))
        th = _frozen(np.reshape(self.joint_angles, -1))
        thd = _frozen(np.reshape(self.joint_rates, -1))
        if th.shape != thd.shape:
            raise ValueError("joint_angles and joint_rates differ in length")
        object.__setattr__(self, "joint_angles", th)
        object.__setattr__(self, "joint_rates", thd)

    @classmethod
    def at_rest(cls, joint_angles, base_position=(0.0, 0.0, 0.0), attitude=(1.0, 0.0, 0.0, 0.0),
                t: float = 0.0) -> "SystemState":
        th = np.asarray(joint_angles, dtype=float)
        return cls(t, base_position, attitude, np.zeros(3), np.zeros(3), th, np.zeros_like(th))

    @property
    def n(self) -> int:
        return self.joint_angles.shape[0]

    @cached_property
    def base_rotation(self) -> np.ndarray:
        return quat_to_matrix(self.base_attitude)

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.base_position, self.base_attitude, self.base_velocity,
                               self.base_angular_velocity, self.joint_angles, self.joint_rates])

    @classmethod
    def from_vector(cls, t: float, x: np.ndarray, renormalize: bool = True) -> "SystemState":
        n = (x.shape[0] - 13) // 2
        q = x[3:7]
        if renormalize:
            q = q / np.linalg.norm(q)
        return cls(t, x[0:3], q, x[7:10], x[10:13], x[13:13 + n], x[13 + n:13 + 2 * n])

    def replace(self, **changes) -> "SystemState":
        fields = dict(t=self.t, base_position=self.base_position, base_attitude=self.base_attitude,
                      base_velocity=self.base_velocity, base_angular_velocity=self.base_angular_velocity,
                      joint_angles=self.joint_angles, joint_rates=self.joint_rates)
        fields.update(changes)
        return SystemState(**fields)

    def check(self, model: SystemModel) -> None:
        if self.n != model.n:
            raise ValueError(f"state has {self.n} joints, model has {model.n}")


@dataclass(frozen=True, eq=False)
class Wrench:
    force: np.ndarray = field(default_factory=lambda: np.zeros(3))
    torque: np.ndarray = field(default_factory=lambda: np.zeros(3))
    frame: str = "inertial"

    def __post_init__(self):
        if self.frame not in ("inertial", "base", "mount"):
            raise ValueError(f"unknown wrench frame {self.frame!r}")
        f = _vec3(self.force, "force")
        tq = _vec3(self.torque, "torque")
        if not (np.all(np.isfinite(f)) and np.all(np.isfinite(tq))):
            raise ValueError("wrench entries must be finite")
        object.__setattr__(self, "force", f)
        object.__setattr__(self, "torque", tq)
