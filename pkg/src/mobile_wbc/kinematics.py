"""Frames, forward kinematics and Jacobians of the 9-DoF mobile manipulator.

Frames: ``T_w`` world, ``T_b`` mobile base (planar pose ``x, y, phi``),
``T_a`` arm mount (fixed in ``T_b``), flange/end-effector at the end of the
six-link chain. The arm uses modified (Craig) DH rows
``(a_{i-1}, alpha_{i-1}, d_i, theta_offset_i)``.

The shipped reference arm is anthropomorphic with a spherical wrist:
shoulder height 0.22 m, upper arm 0.38 m, forearm 0.42 m and a 0.12 m tool.
At ``q = 0`` the upper arm is vertical, the forearm points along ``+x`` of
``T_a`` and the tool points straight down, which leaves the flange at
``(0.42, 0, 0.48)`` in ``T_a``.
"""
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels

_HALF_PI = 0.5 * np.pi

REFERENCE_LINKS = (
    (0.0, 0.0, 0.22, 0.0),
    (0.0, -_HALF_PI, 0.0, -_HALF_PI),
    (0.38, 0.0, 0.0, 0.0),
    (0.0, -_HALF_PI, 0.42, 0.0),
    (0.0, _HALF_PI, 0.0, _HALF_PI),
    (0.0, -_HALF_PI, 0.12, 0.0),
)
REFERENCE_LIMITS_DEG = (175.0, 135.0, 150.0, 175.0, 135.0, 175.0)
HOME_POSITION_IN_ARM = (0.42, 0.0, 0.48)


def rot_z(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def block_rotation(rot):
    """6x6 ``diag(R, R)`` acting on a stacked ``[v; omega]`` twist."""
    out = np.zeros((6, 6))
    out[:3, :3] = rot
    out[3:, 3:] = rot
    return out


@dataclass
class RobotModel:
    """Kinematic description of the arm and the omnidirectional base.

    Parameters
    ----------
    arm_links : array, shape (6, 4)
        Modified-DH rows ``(length, twist, offset, joint_angle_offset)``.
    joint_lower, joint_upper : array, shape (6,)
        Joint limits in rad.
    base_radius : float
        Radius of the base footprint disc in m.
    arm_mount_rotation : array, shape (3, 3)
        Constant rotation from ``T_a`` to ``T_b``.
    arm_mount_translation : array, shape (3,)
        Origin of ``T_a`` expressed in ``T_b``.
    """

    arm_links: np.ndarray = field(default_factory=lambda: np.array(REFERENCE_LINKS))
    joint_lower: np.ndarray = field(
        default_factory=lambda: -np.radians(REFERENCE_LIMITS_DEG))
    joint_upper: np.ndarray = field(
        default_factory=lambda: np.radians(REFERENCE_LIMITS_DEG))
    base_radius: float = 0.3
    arm_mount_rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    arm_mount_translation: np.ndarray = field(
        default_factory=lambda: np.array([0.0, 0.0, 0.35]))

    def __post_init__(self):
        self.arm_links = np.ascontiguousarray(self.arm_links, dtype=float)
        self.joint_lower = np.ascontiguousarray(self.joint_lower, dtype=float)
        self.joint_upper = np.ascontiguousarray(self.joint_upper, dtype=float)
        self.arm_mount_rotation = np.asarray(self.arm_mount_rotation, dtype=float)
        self.arm_mount_translation = np.asarray(self.arm_mount_translation, dtype=float)
        self.base_radius = float(self.base_radius)
        if self.arm_links.shape != (6, 4):
            raise ValueError("arm_links must have shape (6, 4)")
        if self.joint_lower.shape != (6,) or self.joint_upper.shape != (6,):
            raise ValueError("joint limits must be 6-vectors")
        if np.any(self.joint_lower >= self.joint_upper):
            raise ValueError("joint_lower must be strictly below joint_upper")
        R = self.arm_mount_rotation
        if (R.shape != (3, 3) or np.max(np.abs(R.T @ R - np.eye(3))) > 1e-9
                or np.linalg.det(R) < 0.0):
            raise ValueError("arm_mount_rotation must be a proper rotation")
        if self.base_radius <= 0.0:
            raise ValueError("base_radius must be positive")

    @property
    def mount_rotation6(self):
        """``R_ba``: the 6x6 block-diagonal mount rotation."""
        return block_rotation(self.arm_mount_rotation)

    def joint_midrange(self):
        return 0.5 * (self.joint_lower + self.joint_upper)


@dataclass
class WholeBodyState:
    """Configuration and commands of base + arm.

    ``ee_pose_in_base`` is derived from ``arm_joints`` and the mount transform;
    build states with :meth:`from_configuration` to keep it consistent.
    """

    base_pose: np.ndarray
    arm_joints: np.ndarray
    base_velocity_cmd: np.ndarray = field(default_factory=lambda: np.zeros(3))
    arm_cart_velocity_cmd: np.ndarray = field(default_factory=lambda: np.zeros(6))
    ee_position_in_base: np.ndarray = field(default_factory=lambda: np.zeros(3))
    ee_rotation_in_base: np.ndarray = field(default_factory=lambda: np.eye(3))

    @classmethod
    def from_configuration(cls, base_pose, arm_joints, model, base_velocity_cmd=None,
                           arm_cart_velocity_cmd=None):
        q = np.asarray(arm_joints, dtype=float)
        pos, rot = ee_pose_in_base(q, model)
        return cls(
            base_pose=np.asarray(base_pose, dtype=float),
            arm_joints=q,
            base_velocity_cmd=(np.zeros(3) if base_velocity_cmd is None
                               else np.asarray(base_velocity_cmd, dtype=float)),
            arm_cart_velocity_cmd=(np.zeros(6) if arm_cart_velocity_cmd is None
                                   else np.asarray(arm_cart_velocity_cmd, dtype=float)),
            ee_position_in_base=pos,
            ee_rotation_in_base=rot,
        )

    @property
    def ee_pose_in_base(self):
        return self.ee_position_in_base, self.ee_rotation_in_base

    def ee_world_position(self):
        x, y, phi = self.base_pose
        return np.array([x, y, 0.0]) + rot_z(phi) @ self.ee_position_in_base


def forward_kinematics(q_a, model):
    """Flange position and rotation in ``T_a``."""
    return kernels.fk(np.asarray(q_a, dtype=float), model.arm_links)


def arm_jacobian(q_a, model):
    """Geometric Jacobian ``J_a`` (6x6, linear rows first) w.r.t. ``T_a``."""
    return kernels.fk_jacobian(np.asarray(q_a, dtype=float), model.arm_links)[2]


def ee_pose_in_base(q_a, model):
    pos, rot = forward_kinematics(q_a, model)
    R = model.arm_mount_rotation
    return model.arm_mount_translation + R @ pos, R @ rot


def base_jacobian(ee_pos_in_base):
    """``J_b``: end-effector twist in ``T_b`` produced by a base twist.

    Columns are ``(v_x, v_y, omega_z)`` of the base.
    """
    x, y = ee_pos_in_base[0], ee_pos_in_base[1]
    J = np.zeros((6, 3))
    J[0, 0] = 1.0
    J[1, 1] = 1.0
    J[0, 2] = -y
    J[1, 2] = x
    J[5, 2] = 1.0
    return J


def world_to_base_rotation(phi_b):
    """``bR_w``, a rotation about z by ``-phi_b``."""
    return rot_z(-phi_b)


def whole_body_jacobian(state, model):
    """``J_wb = [R_ba | J_b]`` mapping ``[V_a; V_b]`` to the ee twist in ``T_b``."""
    J = np.empty((6, 9))
    J[:, :6] = model.mount_rotation6
    J[:, 6:] = base_jacobian(state.ee_position_in_base)
    return J
