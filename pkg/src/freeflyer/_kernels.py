"""Compiled numeric core shared by kinematics, dynamics and the integrator.

Body 0 is the base, 1..n the links, n+1 the payload.  State vectors are
laid out as ``[r0(3), q(4), v0(3), w0_body(3), theta(n), theta_dot(n)]``.
"""
import numpy as np
from numba import njit


@njit(cache=True)
def cross3(a, b):
    out = np.empty(3)
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]
    return out


@njit(cache=True)
def quat_matrix(q):
    w, x, y, z = q[0], q[1], q[2], q[3]
    R = np.empty((3, 3))
    R[0, 0] = 1 - 2 * (y * y + z * z)
    R[0, 1] = 2 * (x * y - w * z)
    R[0, 2] = 2 * (x * z + w * y)
    R[1, 0] = 2 * (x * y + w * z)
    R[1, 1] = 1 - 2 * (x * x + z * z)
    R[1, 2] = 2 * (y * z - w * x)
    R[2, 0] = 2 * (x * z - w * y)
    R[2, 1] = 2 * (y * z + w * x)
    R[2, 2] = 1 - 2 * (x * x + y * y)
    return R


@njit(cache=True)
def geometry(dh, com_local, mount, r0, R0, theta):
    """Inertial rotations, CoMs, joint points and joint axes of every body."""
    n = dh.shape[0]
    rot = np.empty((n + 2, 3, 3))
    coms = np.empty((n + 2, 3))
    joints = np.empty((n + 1, 3))
    axes = np.zeros((n + 1, 3))
    rot[0] = R0
    coms[0] = r0
    joints[0] = r0 + R0 @ mount
    R = R0.copy()
    local_p = np.empty(3)
    Ri = np.empty((3, 3))
    for i in range(n):
        a, alpha, d, off = dh[i, 0], dh[i, 1], dh[i, 2], dh[i, 3]
        t = theta[i] + off
        ct, st = np.cos(t), np.sin(t)
        ca, sa = np.cos(alpha), np.sin(alpha)
        axes[i] = R[:, 2]
        local_p[0] = a * ct
        local_p[1] = a * st
        local_p[2] = d
        joints[i + 1] = joints[i] + R @ local_p
        Ri[0, 0] = ct
        Ri[0, 1] = -st * ca
        Ri[0, 2] = st * sa
        Ri[1, 0] = st
        Ri[1, 1] = ct * ca
        Ri[1, 2] = -ct * sa
        Ri[2, 0] = 0.0
        Ri[2, 1] = sa
        Ri[2, 2] = ca
        R = R @ Ri
        rot[i + 1] = R
        coms[i + 1] = joints[i] + R @ com_local[i + 1]
    rot[n + 1] = R
    coms[n + 1] = joints[n] + R @ com_local[n + 1]
    return rot, coms, joints, axes


@njit(cache=True)
def rnea(masses, inertias, rot, coms, joints, axes, v0, w0b, thd, thdd, a0, wd0b):
    """Recursive Newton-Euler pass from the moving base out to the payload and back.

    Returns joint torques, base force (inertial), base moment about its CoM
    (base frame), per-body inertial forces/moments, the wrench of the base on
    the arm at the mount (moment about the mount) and per-body kinematics.
    """
    n = thd.shape[0]
    nb = n + 2
    R0 = rot[0]
    w = np.empty((nb, 3))
    wd = np.empty((nb, 3))
    v = np.empty((nb, 3))
    vd = np.empty((nb, 3))
    w[0] = R0 @ w0b
    wd[0] = R0 @ wd0b
    v[0] = v0
    vd[0] = a0
    for i in range(1, nb):
        j = i - 1
        pr = joints[j] - coms[j]
        vp = v[j] + cross3(w[j], pr)
        ap = vd[j] + cross3(wd[j], pr) + cross3(w[j], cross3(w[j], pr))
        qd = thd[j] if j < n else 0.0
        qdd = thdd[j] if j < n else 0.0
        z = axes[j]
        w[i] = w[j] + z * qd
        wd[i] = wd[j] + z * qdd + cross3(w[j], z * qd)
        e = coms[i] - joints[j]
        v[i] = vp + cross3(w[i], e)
        vd[i] = ap + cross3(wd[i], e) + cross3(w[i], cross3(w[i], e))

    F = np.empty((nb, 3))
    N = np.empty((nb, 3))
    for k in range(nb):
        Iin = rot[k] @ inertias[k] @ rot[k].T
        F[k] = masses[k] * vd[k]
        N[k] = Iin @ wd[k] + cross3(w[k], Iin @ w[k])

    tau = np.empty(n)
    f = np.zeros(3)
    nm = np.zeros(3)
    for i in range(nb - 1, 0, -1):
        j = i - 1
        nm_new = N[i] + cross3(coms[i] - joints[j], F[i]) + nm
        if i < nb - 1:
            nm_new += cross3(joints[i] - joints[j], f)
        f = F[i] + f
        nm = nm_new
        if j < n:
            tau[j] = axes[j] @ nm
    base_force = F[0] + f
    base_torque = R0.T @ (N[0] + cross3(joints[0] - coms[0], f) + nm)
    return tau, base_force, base_torque, F, N, f, nm, w, wd, v, vd


@njit(cache=True)
def mass_matrix(masses, inertias, rot, coms, joints, axes):
    """Generalized mass matrix from per-body velocity Jacobians."""
    n = joints.shape[0] - 1
    nb = n + 2
    N = 6 + n
    R0 = rot[0]
    r0 = coms[0]
    H = np.zeros((N, N))
    for b in range(nb):
        Jv = np.zeros((3, N))
        Jw = np.zeros((3, N))
        Jv[0, 0] = 1.0
        Jv[1, 1] = 1.0
        Jv[2, 2] = 1.0
        rel = coms[b] - r0
        for c in range(3):
            col = cross3(R0[:, c], rel)
            Jv[:, 3 + c] = col
            Jw[:, 3 + c] = R0[:, c]
        for k in range(min(b, n)):
            Jw[:, 6 + k] = axes[k]
            Jv[:, 6 + k] = cross3(axes[k], coms[b] - joints[k])
        Iin = rot[b] @ inertias[b] @ rot[b].T
        H += masses[b] * (Jv.T @ Jv) + Jw.T @ (Iin @ Jw)
    return 0.5 * (H + H.T)


@njit(cache=True)
def dynamics_terms(masses, inertias, dh, com_local, mount, x):
    """Mass matrix, bias forces and geometry at state vector ``x``."""
    n = dh.shape[0]
    nq = np.sqrt(x[3:7] @ x[3:7])
    q = x[3:7] / nq if nq > 0 and np.isfinite(nq) else np.array([1.0, 0.0, 0.0, 0.0])
    R0 = quat_matrix(q)
    rot, coms, joints, axes = geometry(dh, com_local, mount, x[0:3], R0, x[13:13 + n])
    H = mass_matrix(masses, inertias, rot, coms, joints, axes)
    zeros_n = np.zeros(n)
    zeros3 = np.zeros(3)
    res = rnea(masses, inertias, rot, coms, joints, axes, x[7:10], x[10:13], x[13 + n:13 + 2 * n],
               zeros_n, zeros3, zeros3)
    C = np.empty(6 + n)
    C[0:3] = res[1]
    C[3:6] = res[2]
    C[6:] = res[0]
    return H, C, q, R0


@njit(cache=True)
def _derivative(x, q, accel, n):
    dx = np.empty_like(x)
    w = x[10:13]
    dx[0:3] = x[7:10]
    dx[3] = 0.5 * (-q[1] * w[0] - q[2] * w[1] - q[3] * w[2])
    dx[4] = 0.5 * (q[0] * w[0] + q[2] * w[2] - q[3] * w[1])
    dx[5] = 0.5 * (q[0] * w[1] - q[1] * w[2] + q[3] * w[0])
    dx[6] = 0.5 * (q[0] * w[2] + q[1] * w[1] - q[2] * w[0])
    dx[7:13] = accel[0:6]
    dx[13:13 + n] = x[13 + n:13 + 2 * n]
    dx[13 + n:] = accel[6:]
    return dx


@njit(cache=True)
def free_rhs(masses, inertias, dh, com_local, mount, x, tau, ext_force, ext_torque):
    """State derivative under joint torques and an inertial-frame base wrench."""
    n = dh.shape[0]
    H, C, q, R0 = dynamics_terms(masses, inertias, dh, com_local, mount, x)
    Q = np.empty(6 + n)
    Q[0:3] = ext_force
    Q[3:6] = R0.T @ ext_torque
    Q[6:] = tau
    rhs = Q - C
    if not np.all(np.isfinite(rhs)):
        # let the caller see the blow-up in the state instead of a solver error
        return _derivative(x, q, rhs * np.nan, n)
    accel = np.linalg.solve(H, rhs)
    return _derivative(x, q, accel, n)


@njit(cache=True)
def prescribed_rhs(masses, inertias, dh, com_local, mount, x, qdd):
    """State derivative with joint accelerations given; base obeys momentum balance."""
    n = dh.shape[0]
    H, C, q, R0 = dynamics_terms(masses, inertias, dh, com_local, mount, x)
    rhs = -C[0:6] - np.ascontiguousarray(H[0:6, 6:]) @ qdd
    accel = np.empty(6 + n)
    if not (np.all(np.isfinite(rhs)) and np.all(np.isfinite(qdd))):
        accel[:] = np.nan
        return _derivative(x, q, accel, n)
    accel[0:6] = np.linalg.solve(H[0:6, 0:6].copy(), rhs)
    accel[6:] = qdd
    return _derivative(x, q, accel, n)


@njit(cache=True)
def rk4_free(masses, inertias, dh, com_local, mount, x, dt, tau, ext_force, ext_torque):
    k1 = free_rhs(masses, inertias, dh, com_local, mount, x, tau, ext_force, ext_torque)
    k2 = free_rhs(masses, inertias, dh, com_local, mount, x + 0.5 * dt * k1, tau, ext_force, ext_torque)
    k3 = free_rhs(masses, inertias, dh, com_local, mount, x + 0.5 * dt * k2, tau, ext_force, ext_torque)
    k4 = free_rhs(masses, inertias, dh, com_local, mount, x + dt * k3, tau, ext_force, ext_torque)
    return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@njit(cache=True)
def rk4_prescribed(masses, inertias, dh, com_local, mount, x, dt, qdd0, qdd_half, qdd1):
    k1 = prescribed_rhs(masses, inertias, dh, com_local, mount, x, qdd0)
    k2 = prescribed_rhs(masses, inertias, dh, com_local, mount, x + 0.5 * dt * k1, qdd_half)
    k3 = prescribed_rhs(masses, inertias, dh, com_local, mount, x + 0.5 * dt * k2, qdd_half)
    k4 = prescribed_rhs(masses, inertias, dh, com_local, mount, x + dt * k3, qdd1)
    return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
