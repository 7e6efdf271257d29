"""Pure-Python (numpy) versions of the hot kinematic kernels.

These mirror ``_kernels.pyx`` function for function and are used whenever the
compiled extension is unavailable or ``MOBILE_WBC_PURE_PYTHON=1`` is set.

Link parameters are an (6, 4) array of modified-DH rows
``(a_{i-1}, alpha_{i-1}, d_i, theta_offset_i)``; each joint transform is
``RotX(alpha) TransX(a) RotZ(q + offset) TransZ(d)``.
"""
import numpy as np


def _link_transform(a, alpha, d, theta):
    ca, sa = np.cos(alpha), np.sin(alpha)
    ct, st = np.cos(theta), np.sin(theta)
    return np.array([
        [ct, -st, 0.0, a],
        [st * ca, ct * ca, -sa, -sa * d],
        [st * sa, ct * sa, ca, ca * d],
        [0.0, 0.0, 0.0, 1.0],
    ])


def _chain(q, links):
    T = np.eye(4)
    axes = np.empty((6, 3))
    origins = np.empty((6, 3))
    for i in range(6):
        a, alpha, d, offset = links[i]
        T = T @ _link_transform(a, alpha, d, q[i] + offset)
        axes[i] = T[:3, 2]
        origins[i] = T[:3, 3]
    return T, axes, origins


def fk(q, links):
    """Flange position (3,) and rotation (3, 3) in the arm mount frame."""
    T, _, _ = _chain(q, links)
    return T[:3, 3].copy(), T[:3, :3].copy()


def fk_jacobian(q, links):
    """Flange pose plus the 6x6 geometric Jacobian (linear rows first)."""
    T, axes, origins = _chain(q, links)
    p = T[:3, 3]
    J = np.empty((6, 6))
    J[:3] = np.cross(axes, p - origins).T
    J[3:] = axes.T
    return p.copy(), T[:3, :3].copy(), J


def _penalty(q, lower, upper, k_j):
    span = upper - lower
    factors = np.maximum((q - lower) * (upper - q), 0.0) / (span * span)
    return 1.0 - np.exp(-k_j * np.prod(factors))


def capability(q, links, lower, upper, k_j):
    """Return ``(manipulability, joint_limit_penalty, capability)``."""
    _, _, J = fk_jacobian(q, links)
    m = abs(np.linalg.det(J))
    p = _penalty(q, lower, upper, k_j)
    return m, p, m * p


def capability_stencil(q, links, lower, upper, k_j, h):
    """Central-difference stencil of capability and flange position.

    Returns a (13, 4) array. Row 0 is the unperturbed ``(C_m, x, y, z)``;
    rows ``1 + 2j`` and ``2 + 2j`` are the same quantities at ``q_j + h`` and
    ``q_j - h``.
    """
    out = np.empty((13, 4))
    _, _, c = capability(q, links, lower, upper, k_j)
    out[0, 0] = c
    out[0, 1:] = fk(q, links)[0]
    qp = np.array(q, dtype=float)
    for j in range(6):
        for k, sign in enumerate((1.0, -1.0)):
            qp[j] = q[j] + sign * h
            _, _, c = capability(qp, links, lower, upper, k_j)
            row = 1 + 2 * j + k
            out[row, 0] = c
            out[row, 1:] = fk(qp, links)[0]
        qp[j] = q[j]
    return out
