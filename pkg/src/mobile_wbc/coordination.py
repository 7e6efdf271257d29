"""Base-command filtering, arm compensation and deviation bookkeeping."""
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import expm

PROJECTOR_FLOOR = 1e-9


@dataclass(frozen=True)
class FilterParams:
    """Second-order low-pass ``w^2 / (s^2 + 2 zeta w s + w^2)``."""

    cutoff: float = 2.0 * np.pi
    damping: float = 1.0
    dt: float = 0.01

    def __post_init__(self):
        if self.cutoff <= 0.0 or self.damping <= 0.0 or self.dt <= 0.0:
            raise ValueError("cutoff, damping and dt must be positive")
        if self.cutoff * self.dt >= 1.0:
            raise ValueError("cutoff * dt must stay below 1")


@dataclass
class FilterState:
    y: np.ndarray = field(default_factory=lambda: np.zeros(3))
    ydot: np.ndarray = field(default_factory=lambda: np.zeros(3))


@dataclass(frozen=True)
class CompensationResult:
    arm_correction: np.ndarray
    ee_deviation: np.ndarray
    alpha_used: float


@lru_cache(maxsize=64)
def _zoh_matrices(cutoff, damping, dt):
    w = cutoff
    aug = np.zeros((3, 3))
    aug[0, 1] = 1.0
    aug[1, 0] = -w * w
    aug[1, 1] = -2.0 * damping * w
    aug[1, 2] = w * w
    E = expm(aug * dt)
    return E[:2, :2].copy(), E[:2, 2].copy()


def lowpass_step(state, value, params):
    """Advance the filter by one exact zero-order-hold step.

    Returns the new :class:`FilterState` and the filtered output.
    """
    Ad, Bd = _zoh_matrices(params.cutoff, params.damping, params.dt)
    u = np.asarray(value, dtype=float)
    y = Ad[0, 0] * state.y + Ad[0, 1] * state.ydot + Bd[0] * u
    yd = Ad[1, 0] * state.y + Ad[1, 1] * state.ydot + Bd[1] * u
    return FilterState(y, yd), y.copy()


def transition_alpha(value, upper, lower):
    """Raised-cosine blend: 0 at or above ``upper``, 1 at or below ``lower``."""
    if value >= upper:
        return 0.0
    if value <= lower:
        return 1.0
    return 0.5 * (1.0 + np.cos((value - lower) / (upper - lower) * np.pi))


def compensate(delta_vb, j_b, mount_rotation, cm_grad, alpha, comp_enabled=True):
    """Arm correction for the base's filtering deviation.

    ``comp_enabled=False`` switches off the constraint-aware cancellation only:
    ``alpha`` is treated as 0 and the arm compensates exactly.  A ``cm_grad`` of
    ``None`` or with norm below 1e-9 also yields exact compensation.
    """
    required = -mount_rotation.T @ (j_b @ np.asarray(delta_vb, dtype=float))
    a = float(alpha) if comp_enabled else 0.0
    if a == 0.0 or cm_grad is None:
        return CompensationResult(required, np.zeros(6), a)
    g = np.asarray(cm_grad, dtype=float)
    gg = g @ g
    if np.sqrt(gg) < PROJECTOR_FLOOR:
        return CompensationResult(required, np.zeros(6), a)
    removed = a * (g @ required) / gg * g
    return CompensationResult(required - removed, -removed, a)


def accumulate_deviation(accumulator, ee_deviation, dt):
    return np.asarray(accumulator, dtype=float) + np.asarray(ee_deviation, dtype=float) * dt
