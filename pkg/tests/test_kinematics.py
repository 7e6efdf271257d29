import numpy as np
import pytest

from conftest import random_joints, random_state
from mobile_wbc.kinematics import (HOME_POSITION_IN_ARM, RobotModel, WholeBodyState,
                                   arm_jacobian, base_jacobian, forward_kinematics, rot_z,
                                   whole_body_jacobian, world_to_base_rotation)


def _fd_position(q, model, i, h=1e-6):
    qp, qm = q.copy(), q.copy()
    qp[i] += h
    qm[i] -= h
    return (forward_kinematics(qp, model)[0] - forward_kinematics(qm, model)[0]) / (2 * h)


def test_home_pose_matches_hand_composition(backend, model):
    # hand composition: shoulder 0.22 + upper arm 0.38 up, forearm 0.42 forward,
    # tool 0.12 down; tool z-axis points along -z of the mount
    p, R = forward_kinematics(np.zeros(6), model)
    assert np.allclose(p, HOME_POSITION_IN_ARM, atol=1e-12)
    assert np.allclose(p, [0.42, 0.0, 0.48], atol=1e-12)
    assert np.allclose(R, np.diag([1.0, -1.0, -1.0]), atol=1e-12)


def test_joint1_rotation_keeps_height(backend, model):
    rng = np.random.default_rng(1)
    q = random_joints(rng)
    q2 = q.copy()
    q2[0] += np.pi
    assert forward_kinematics(q2, model)[0][2] == pytest.approx(forward_kinematics(q, model)[0][2],
                                                                abs=1e-12)


@pytest.mark.parametrize("joint", range(6))
def test_angle_periodicity(backend, model, joint):
    rng = np.random.default_rng(joint)
    q = random_joints(rng)
    q2 = q.copy()
    q2[joint] += 2 * np.pi
    p1, R1 = forward_kinematics(q, model)
    p2, R2 = forward_kinematics(q2, model)
    assert np.allclose(p1, p2, atol=1e-9) and np.allclose(R1, R2, atol=1e-9)


def test_jacobian_linear_part_matches_finite_differences(backend, model):
    rng = np.random.default_rng(2)
    for _ in range(20):
        q = random_joints(rng)
        J = arm_jacobian(q, model)
        for i in range(6):
            assert np.allclose(J[:3, i], _fd_position(q, model, i), atol=1e-5)


def test_jacobian_angular_columns_are_joint_axes(backend, model):
    # joint i axis = z-axis of frame i; compose the prefix by hand with the
    # modified-DH transform RotX(alpha) TransX(a) RotZ(theta) TransZ(d)
    rng = np.random.default_rng(3)
    q = random_joints(rng)
    J = arm_jacobian(q, model)
    R = np.eye(3)
    for i, (a, alpha, d, off) in enumerate(model.arm_links):
        ca, sa = np.cos(alpha), np.sin(alpha)
        Rx = np.array([[1, 0, 0], [0, ca, -sa], [0, sa, ca]])
        R = R @ Rx @ rot_z(q[i] + off)
        assert np.allclose(J[3:, i], R[:, 2], atol=1e-12)


def test_stretched_arm_is_singular(backend, model):
    q = np.zeros(6)
    q[2] = -np.pi / 2  # forearm in line with the upper arm
    smin = np.linalg.svd(arm_jacobian(q, model), compute_uv=False)[-1]
    assert smin < 1e-3
    assert forward_kinematics(q, model)[0][2] == pytest.approx(0.22 + 0.38 + 0.42)


def test_base_jacobian_layout():
    J = base_jacobian(np.array([0.0, 0.0, 0.7]))
    assert np.array_equal(J[:, 2], [0, 0, 0, 0, 0, 1])
    J = base_jacobian(np.array([1.0, 0.5, 0.3]))
    assert J[0, 2] == -0.5 and J[1, 2] == 1.0
    assert np.all(J[2:5] == 0.0)
    assert np.count_nonzero(J) <= 7


def test_world_to_base_rotation():
    assert np.array_equal(world_to_base_rotation(0.0), np.eye(3))
    assert np.allclose(world_to_base_rotation(np.pi / 2) @ [1, 0, 0], [0, -1, 0], atol=1e-15)
    for phi in np.linspace(-4, 4, 17):
        R = world_to_base_rotation(phi)
        assert np.max(np.abs(R @ R.T - np.eye(3))) < 1e-12


def test_whole_body_jacobian_identity_mount(backend, model):
    rng = np.random.default_rng(4)
    st = random_state(rng, model)
    J = whole_body_jacobian(st, model)
    assert np.array_equal(J[:, :6], np.eye(6))
    va = rng.normal(size=6)
    assert np.allclose(J @ np.concatenate([va, np.zeros(3)]), va, atol=1e-15)


def test_whole_body_jacobian_rotated_mount():
    R = rot_z(0.3)
    model = RobotModel(arm_mount_rotation=R)
    st = WholeBodyState.from_configuration(np.zeros(3), np.full(6, 0.2), model)
    J = whole_body_jacobian(st, model)
    assert np.allclose(J[:3, :3], R) and np.allclose(J[3:, 3:6], R)


def _ee_pose_world(pose, q, model):
    st = WholeBodyState.from_configuration(pose, q, model)
    return st.ee_world_position(), rot_z(pose[2]) @ st.ee_rotation_in_base


def test_whole_body_jacobian_matches_integrated_motion(backend, model):
    # integrate [V_a; V_b] for dt = 1e-5 and compare the ee twist in T_b
    rng = np.random.default_rng(5)
    dt = 1e-5
    for _ in range(10):
        st = random_state(rng, model)
        va = rng.normal(size=6) * 0.2
        vb = rng.normal(size=3) * 0.2
        J_a = arm_jacobian(st.arm_joints, model)
        q1 = st.arm_joints + dt * np.linalg.solve(J_a, va)
        phi = st.base_pose[2]
        pose1 = st.base_pose + dt * np.array([*(rot_z(phi)[:2, :2] @ vb[:2]), vb[2]])
        p0, R0 = _ee_pose_world(st.base_pose, st.arm_joints, model)
        p1, R1 = _ee_pose_world(pose1, q1, model)
        Rb = rot_z(phi)
        v_lin = Rb.T @ (p1 - p0) / dt
        W = R1 @ R0.T
        w = Rb.T @ np.array([W[2, 1] - W[1, 2], W[0, 2] - W[2, 0], W[1, 0] - W[0, 1]]) / (2 * dt)
        pred = whole_body_jacobian(st, model) @ np.concatenate([va, vb])
        assert np.allclose(pred, np.concatenate([v_lin, w]), atol=1e-4)


def test_state_is_consistent_with_fk(backend, model):
    rng = np.random.default_rng(6)
    st = random_state(rng, model)
    p, R = forward_kinematics(st.arm_joints, model)
    assert np.allclose(st.ee_position_in_base, p + model.arm_mount_translation, atol=1e-12)
    assert np.allclose(st.ee_rotation_in_base, R, atol=1e-12)


@pytest.mark.parametrize("kwargs", [
    {"joint_lower": np.zeros(6), "joint_upper": np.zeros(6)},
    {"arm_mount_rotation": np.diag([1.0, 1.0, -1.0])},
    {"arm_mount_rotation": 2 * np.eye(3)},
    {"base_radius": 0.0},
    {"arm_links": np.zeros((5, 4))},
])
def test_model_validation(kwargs):
    with pytest.raises(ValueError):
        RobotModel(**kwargs)
