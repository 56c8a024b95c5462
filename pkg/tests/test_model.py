import numpy as np
import pytest

from freeflyer.model import (BaseBody, DHParams, InertiaTensor, LinkParams, Payload, SystemModel, SystemState,
                             Wrench, attitude_error_angle, quat_conjugate, quat_multiply, quat_to_matrix,
                             validate_model)


def test_reference_models_are_valid(planar, spatial, esa):
    for m in (planar, spatial, esa):
        assert validate_model(m) == []


def test_esa_arm_matches_requirement_list(esa):
    assert esa.n == 7
    assert esa.payload.mass == 500.0
    assert esa.base.mass == 1500.0
    reach = sum(np.linalg.norm(l.link_vector) for l in esa.links)
    assert reach == pytest.approx(1.0)
    assert esa.metadata["control_rate_hz"] == 100.0


def test_total_mass(planar):
    assert planar.total_mass == pytest.approx(40 + 6 + 4)


def test_inertia_checks():
    assert InertiaTensor.diagonal(1, 1, 1).violations("x") == []
    msgs = [v.message for v in InertiaTensor([[1, 0.5, 0], [0, 1, 0], [0, 0, 1]]).violations("x")]
    assert any("symmetric" in m for m in msgs)
    msgs = [v.message for v in InertiaTensor.diagonal(1, 1, -1).violations("x")]
    assert any("positive definite" in m for m in msgs)
    msgs = [v.message for v in InertiaTensor.diagonal(1, 1, 3).violations("x")]
    assert any("triangle" in m for m in msgs)


def test_validation_names_fields(planar):
    bad_link = LinkParams(DHParams(a=0.6), -1.0, InertiaTensor.diagonal(0.01, 0.19, 0.19),
                          np.array([0.3, 0, 0]), np.array([0.6, 0, 0]), np.array([0.2, 0, 0]))
    model = SystemModel(planar.base, [bad_link, planar.links[1]], planar.payload)
    fields = {v.field for v in validate_model(model)}
    assert "links[1].mass" in fields
    assert "links[1].com_to_tip" in fields

    model = SystemModel(BaseBody(0.0, InertiaTensor.diagonal(1, 1, 1)), list(planar.links),
                        joint_limits=[[1, -1], [-1, 1]], rate_limits=[0.0, 1.0])
    fields = {v.field for v in validate_model(model)}
    assert {"base.mass", "joint_limits[1]", "rate_limits[1]"} <= fields


def test_link_vector_must_match_dh(planar):
    l = planar.links[0]
    bad = LinkParams(l.dh, l.mass, l.inertia, l.com_offset, l.link_vector + [0, 0.1, 0],
                     l.com_to_tip + [0, 0.1, 0])
    model = SystemModel(planar.base, [bad, planar.links[1]])
    assert [v.field for v in validate_model(model)] == ["links[1].link_vector"]


def test_link_defaults():
    l = LinkParams.from_dh(DHParams(a=0.4, alpha=np.pi / 2, d=0.2), 2.0, InertiaTensor.diagonal(1, 1, 1))
    np.testing.assert_allclose(l.link_vector, [0.4, 0.2, 0.0], atol=1e-15)
    np.testing.assert_allclose(l.com_offset, 0.5 * l.link_vector)
    np.testing.assert_allclose(l.com_offset + l.com_to_tip, l.link_vector)


def test_quaternion_helpers(rng):
    for _ in range(20):
        q = rng.normal(size=4)
        q /= np.linalg.norm(q)
        R = quat_to_matrix(q)
        np.testing.assert_allclose(R @ R.T, np.eye(3), atol=1e-14)
        assert np.linalg.det(R) == pytest.approx(1.0)
        p = rng.normal(size=4)
        p /= np.linalg.norm(p)
        np.testing.assert_allclose(quat_to_matrix(quat_multiply(p, q)), quat_to_matrix(p) @ R, atol=1e-14)
        np.testing.assert_allclose(quat_multiply(q, quat_conjugate(q)), [1, 0, 0, 0], atol=1e-15)
    half = np.array([np.cos(0.15), 0, 0, np.sin(0.15)])
    assert attitude_error_angle(half) == pytest.approx(0.3)
    assert attitude_error_angle(-half) == pytest.approx(0.3)


def test_state_vector_round_trip(rng):
    q = rng.normal(size=4)
    s = SystemState(1.5, rng.normal(size=3), q / np.linalg.norm(q), rng.normal(size=3), rng.normal(size=3),
                    rng.normal(size=4), rng.normal(size=4))
    back = SystemState.from_vector(s.t, s.to_vector())
    np.testing.assert_array_equal(back.to_vector(), s.to_vector())
    assert s.replace(t=2.0).t == 2.0


def test_state_rejects_bad_input():
    with pytest.raises(ValueError, match="unit quaternion"):
        SystemState(0, np.zeros(3), [1, 1, 0, 0], np.zeros(3), np.zeros(3), [0.0], [0.0])
    with pytest.raises(ValueError, match="differ"):
        SystemState(0, np.zeros(3), [1, 0, 0, 0], np.zeros(3), np.zeros(3), [0.0, 1.0], [0.0])


def test_state_arrays_are_read_only():
    s = SystemState.at_rest([0.1, 0.2])
    with pytest.raises(ValueError):
        s.joint_angles[0] = 1.0


def test_wrench_frames():
    assert Wrench([1, 0, 0]).frame == "inertial"
    with pytest.raises(ValueError):
        Wrench(frame="tool")
    with pytest.raises(ValueError):
        Wrench([np.nan, 0, 0])


def test_with_masses_scales_everything(planar):
    heavy = planar.with_masses(base_scale=10.0)
    assert heavy.base.mass == 400.0
    np.testing.assert_allclose(heavy.base.inertia.matrix, 10 * planar.base.inertia.matrix)
    assert heavy.links[0].mass == planar.links[0].mass


def test_zero_mass_payload_adds_nothing(planar):
    assert planar.arrays.masses[-1] == 0.0
    assert not planar.arrays.inertias[-1].any()
