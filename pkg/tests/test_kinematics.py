import numpy as np
import pytest

from freeflyer import kinematics as K
from freeflyer.model import DHParams, SystemState
from freeflyer.scenarios import heavy_base

from conftest import state_for


def test_zero_angle_chain(spatial, planar):
    for model in (planar, spatial):
        s = SystemState.at_rest(np.zeros(model.n))
        expected = model.base.mount_offset + sum(
            K._chain(model, np.zeros(model.n))[0][i + 1] @ l.link_vector for i, l in enumerate(model.links))
        np.testing.assert_allclose(K.ee_position_explicit(model, s), expected, atol=1e-15)
    s = SystemState.at_rest([0.0, 0.0])
    np.testing.assert_allclose(K.ee_position_explicit(planar, s), [0.5 + 1.1, 0.1, 0.0])


def test_dh_transform_composition():
    p = DHParams(a=0.3, alpha=0.7, d=0.2, theta_offset=0.1)
    T = K.dh_transform(p, 0.4)
    c, s = np.cos(0.5), np.sin(0.5)
    rz = np.array([[c, -s, 0, 0], [s, c, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]])
    tz = np.eye(4)
    tz[2, 3] = 0.2
    tx = np.eye(4)
    tx[0, 3] = 0.3
    ca, sa = np.cos(0.7), np.sin(0.7)
    rx = np.array([[1, 0, 0, 0], [0, ca, -sa, 0], [0, sa, ca, 0], [0, 0, 0, 1]])
    np.testing.assert_allclose(T.matrix, rz @ tz @ tx @ rx, atol=1e-15)
    np.testing.assert_allclose((T @ T.inverse()).matrix, np.eye(4), atol=1e-15)


def test_link_frames_agree_with_explicit_position(spatial, rng):
    for _ in range(10):
        s = state_for(spatial, rng)
        frames = K.link_frames(spatial, s)
        np.testing.assert_allclose(frames.end_effector.p, K.ee_position_explicit(spatial, s), atol=1e-13)
        geo = K.body_geometry(spatial, s)
        np.testing.assert_allclose(geo.joints, [f.p for f in frames.inertial], atol=1e-13)


def test_explicit_and_barycentric_agree(spatial, rng):
    for _ in range(200):
        s = state_for(spatial, rng, velocities=False)
        np.testing.assert_allclose(K.ee_position_barycentric(spatial, s), K.ee_position_explicit(spatial, s),
                                   atol=1e-12)


def test_barycentric_uses_given_com(spatial, rng):
    s = state_for(spatial, rng, com_at_origin=True)
    shift = np.array([1.0, -2.0, 0.5])
    moved = s.replace(base_position=s.base_position + shift)
    np.testing.assert_allclose(K.ee_position_barycentric(spatial, moved, shift), K.ee_position_explicit(spatial, moved),
                               atol=1e-12)


def test_lambda_closed_form(planar):
    bary = K.barycentric_vectors(planar)
    mT = planar.total_mass
    # first link: the base is the only proximal mass
    np.testing.assert_allclose(bary.lambdas[0], (40 * np.array([0.6, 0, 0]) + 6 * np.array([0.3, -0.02, 0])) / mT)
    np.testing.assert_allclose(bary.lambdas[1], (46 * np.array([0.5, 0, 0]) + 4 * np.array([0.25, 0.01, 0])) / mT)
    np.testing.assert_array_equal(bary.payload, 0.0)


def _fd_position(model, s, fn, h=1e-6):
    cols = []
    for k in range(model.n):
        d = np.zeros(model.n)
        d[k] = h
        cols.append((fn(s.replace(joint_angles=s.joint_angles + d)) - fn(s.replace(joint_angles=s.joint_angles - d)))
                    / (2 * h))
    return np.array(cols).T


def test_fixed_base_jacobian_finite_difference(spatial, rng):
    for _ in range(10):
        s = state_for(spatial, rng)
        J = K.fixed_base_jacobian(spatial, s)
        assert J.matrix.shape == (6, 3) and J.kind == "fixed_base"
        fd = _fd_position(spatial, s, lambda st: K.ee_position_explicit(spatial, st))
        np.testing.assert_allclose(J.linear, fd, atol=1e-8)
        # angular rows: orientation rate of the end-effector frame
        R = K.link_frames(spatial, s).end_effector.R
        h = 1e-6
        for k in range(3):
            d = np.zeros(3)
            d[k] = h
            Rp = K.link_frames(spatial, s.replace(joint_angles=s.joint_angles + d)).end_effector.R
            Rm = K.link_frames(spatial, s.replace(joint_angles=s.joint_angles - d)).end_effector.R
            W = (Rp - Rm) / (2 * h) @ R.T
            np.testing.assert_allclose([W[2, 1], W[0, 2], W[1, 0]], J.matrix[3:, k], atol=1e-8)


def test_generalized_jacobian_finite_difference(spatial, rng):
    for _ in range(20):
        s = state_for(spatial, rng, com_at_origin=True)
        J = K.generalized_jacobian(spatial, s)
        assert J.matrix.shape == (3, 3) and J.kind == "generalized"
        fd = _fd_position(spatial, s, lambda st: K.ee_position_barycentric(spatial, st, np.zeros(3)))
        np.testing.assert_allclose(J.matrix, fd, atol=1e-8)


def test_generalized_jacobian_is_momentum_consistent(spatial, rng):
    """With attitude held and zero linear momentum, J_gen maps joint rates to the true end-effector velocity."""
    from freeflyer import dynamics
    s = state_for(spatial, rng, velocities=False).replace(joint_rates=rng.normal(size=3))
    # choose base velocity so that P = 0 with zero base angular rate
    m = dynamics.momentum(spatial, s).linear
    s = s.replace(base_velocity=-m / spatial.total_mass)
    assert np.linalg.norm(dynamics.momentum(spatial, s).linear) < 1e-12
    h = 1e-6
    fwd = s.replace(base_position=s.base_position + h * s.base_velocity, joint_angles=s.joint_angles + h * s.joint_rates)
    bwd = s.replace(base_position=s.base_position - h * s.base_velocity, joint_angles=s.joint_angles - h * s.joint_rates)
    v = (K.ee_position_explicit(spatial, fwd) - K.ee_position_explicit(spatial, bwd)) / (2 * h)
    np.testing.assert_allclose(K.generalized_jacobian(spatial, s).matrix @ s.joint_rates, v, atol=1e-8)


def test_heavy_base_limit(spatial, rng):
    heavy = heavy_base(spatial, 1e9)
    for _ in range(10):
        s = state_for(heavy, rng)
        Jg = K.generalized_jacobian(heavy, s).matrix
        Jf = K.fixed_base_jacobian(heavy, s).linear
        assert np.linalg.norm(Jg - Jf) <= 1e-6 * np.linalg.norm(Jf)


def test_planar_fixed_base_column_matches_oracle(planar, golden):
    s = SystemState.at_rest([0.0, 0.0])
    J = K.fixed_base_jacobian(planar, s).linear
    # the oracle column is the first joint's contribution to the end-effector velocity at theta = 0
    np.testing.assert_allclose(np.linalg.norm(J[:2, 0]), 1.1)
    assert np.isfinite(golden["fixed_base_column_theta0"]).all()


def test_system_com_weighted_mean(planar):
    s = SystemState.at_rest([0.0, 0.0])
    com = K.system_com(planar, s)
    expected = (40 * np.zeros(3) + 6 * np.array([0.8, 0.12, 0]) + 4 * np.array([1.35, 0.09, 0])) / 50
    np.testing.assert_allclose(com, expected, atol=1e-15)


def test_singular_configurations(planar):
    s = SystemState.at_rest([0.3, 0.0])
    assert np.linalg.svd(K.fixed_base_jacobian(planar, s).linear, compute_uv=False)[1] < 1e-12
    # the free-floating chain is singular where the rotated lambda vectors line up
    lam = K.barycentric_vectors(planar).lambdas
    aligned = np.arctan2(lam[0, 1], lam[0, 0]) - np.arctan2(lam[1, 1], lam[1, 0])
    s = SystemState.at_rest([0.3, aligned])
    sigma = np.linalg.svd(K.generalized_jacobian(planar, s).matrix, compute_uv=False)
    assert sigma[1] < 1e-12 < sigma[0]
