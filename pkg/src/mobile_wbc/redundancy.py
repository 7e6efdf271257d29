"""Weighted least-norm motion distribution and movement-capability terms."""
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .errors import DegenerateGradient, SingularTask
from .kinematics import arm_jacobian

TASK_CONDITION_LIMIT = 1e8
TASK_DAMPING = 1e-3
GRADIENT_FLOOR = 1e-9
# damped inverse used when the arm Jacobian's smallest singular value drops below this
SINGULAR_THRESHOLD = 1e-2
SINGULAR_DAMPING = 1e-3


@dataclass(frozen=True)
class WeightingFactors:
    sigma_xy: float = 0.5
    sigma_phi: float = 0.5

    def __post_init__(self):
        for name in ("sigma_xy", "sigma_phi"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")


@dataclass(frozen=True)
class CapabilityMetrics:
    manipulability: float
    joint_limit_penalty: float
    capability: float


@dataclass(frozen=True)
class CmOptimizationParams:
    """Gains and thresholds of the movement-capability optimisation.

    ``jl_scale`` is large because the joint-limit product of six factors is at
    most ``(1/4)**6`` at mid-range; 2e4 puts the penalty at ~0.992 there.
    """

    null_gain: float = 0.1
    cm_upper: float = 0.04
    cm_lower: float = 0.035
    jl_scale: float = 2.0e4
    grad_step: float = 1e-5

    def __post_init__(self):
        if not self.cm_lower < self.cm_upper:
            raise ValueError("cm_lower must be below cm_upper")
        if self.grad_step <= 0.0:
            raise ValueError("grad_step must be positive")
        if self.null_gain < 0.0:
            raise ValueError("null_gain must be non-negative")


def weighting_matrix(factors):
    """Diagonal ``Q = W^-1`` ordering ``[V_a (6), V_b (3)]``."""
    sx, sp = factors.sigma_xy, factors.sigma_phi
    return np.diag([sx, sx, 1.0, 1.0, 1.0, sp, 1.0 - sx, 1.0 - sx, 1.0 - sp])


def movement_capability(q_a, model, params):
    m, p, c = kernels.capability(np.asarray(q_a, dtype=float), model.arm_links,
                                 model.joint_lower, model.joint_upper, params.jl_scale)
    return CapabilityMetrics(float(m), float(p), float(c))


def capability_stencil(q_a, model, params):
    """Central-difference stencil rows ``(C_m, x, y, z)``; see ``_kernels_py``."""
    return kernels.capability_stencil(np.asarray(q_a, dtype=float), model.arm_links,
                                      model.joint_lower, model.joint_upper,
                                      params.jl_scale, params.grad_step)


def stencil_gradient(values, h):
    """Joint-space gradient from a (13,) column of stencil values."""
    return (values[1::2] - values[2::2]) / (2.0 * h)


def cm_joint_gradient(q_a, model, params):
    """``dC_m / dq`` by central differences with step ``params.grad_step``."""
    st = capability_stencil(q_a, model, params)
    return stencil_gradient(st[:, 0], params.grad_step)


def joint_to_cartesian_gradient(grad_q, jac):
    """Map a joint gradient to Cartesian coordinates, ``J^-T grad_q``.

    Uses the damped form ``(J J^T + l^2 I)^-1 J grad_q`` near singularity.
    """
    smin = np.linalg.svd(jac, compute_uv=False)[-1]
    if smin < SINGULAR_THRESHOLD:
        lam2 = SINGULAR_DAMPING ** 2
        return np.linalg.solve(jac @ jac.T + lam2 * np.eye(6), jac @ grad_q)
    return np.linalg.solve(jac.T, grad_q)


def cm_gradient(q_a, model, params, jac=None):
    """Gradient of C_m w.r.t. the arm's Cartesian pose coordinates.

    Raises
    ------
    DegenerateGradient
        If the gradient norm is below 1e-9.
    """
    if jac is None:
        jac = arm_jacobian(q_a, model)
    grad_x = joint_to_cartesian_gradient(cm_joint_gradient(q_a, model, params), jac)
    if np.linalg.norm(grad_x) < GRADIENT_FLOOR:
        raise DegenerateGradient(f"|grad C_m| = {np.linalg.norm(grad_x):.3e}")
    return grad_x


def null_space_velocity(grad_x, gain):
    """Secondary-task vector ``k_n [grad_x C_m; 0_3]``."""
    out = np.zeros(9)
    if grad_x is not None:
        out[:6] = gain * np.asarray(grad_x)
    return out


def weighted_pseudoinverse(j_wb, q_weight, damping=0.0):
    QJt = q_weight @ j_wb.T
    M = j_wb @ QJt
    if damping > 0.0:
        M = M + damping * np.eye(M.shape[0])
    elif np.linalg.cond(M) > TASK_CONDITION_LIMIT:
        raise SingularTask(f"cond(J Q J^T) = {np.linalg.cond(M):.3e}")
    return QJt @ np.linalg.inv(M)


def resolve_wln(v_ee, j_wb, q_weight, null_velocity=None, damping=0.0):
    """Weighted least-norm whole-body velocity ``[V_a; V_b]``.

    ``V = J+ v + (I - J+ J) V0`` with ``J+ = Q J^T (J Q J^T)^-1``.

    With ``damping=0`` an ill-conditioned ``J Q J^T`` raises
    :class:`SingularTask`; pass ``damping=1e-3`` for the damped variant.
    """
    Jp = weighted_pseudoinverse(j_wb, q_weight, damping)
    v = Jp @ np.asarray(v_ee, dtype=float)
    if null_velocity is not None:
        n0 = np.asarray(null_velocity, dtype=float)
        v = v + n0 - Jp @ (j_wb @ n0)
    return v


def null_space_projector(j_wb, q_weight, damping=0.0):
    Jp = weighted_pseudoinverse(j_wb, q_weight, damping)
    return np.eye(j_wb.shape[1]) - Jp @ j_wb
