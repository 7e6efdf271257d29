"""Discrete dynamic movement primitives with coupling terms.

All variants share the transformation system

    tau * dz = alpha_z * (beta_z * (g + C - y - e) - z) + f(s) + a
    tau * dy = z + w

and differ only in what feeds the goal offset ``C``, the attractor shift
``e``, the acceleration-level coupling ``a`` and the velocity-level coupling
``w``.  Integration is explicit Euler; each step returns a new state
whose ``ydot`` is the velocity that was integrated (the command a controller
forwards).
"""
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InsufficientData

# cutoff of the first-order filter smoothing backward-difference rates (rad/s)
RATE_CUTOFF = 30.0
DISTANCE_FLOOR = 1e-3
_PHASE_FLOOR = np.finfo(float).tiny


@dataclass(frozen=True)
class CdmpParams:
    tau: float = 1.0
    alpha_z: float = 25.0
    beta_z: float = 6.25
    alpha_s: float = 4.0
    dims: int = 3

    def __post_init__(self):
        if min(self.tau, self.alpha_z, self.beta_z, self.alpha_s) <= 0.0:
            raise ValueError("DMP gains must be positive")
        if self.dims < 1:
            raise ValueError("dims must be >= 1")


@dataclass
class CdmpState:
    y: np.ndarray
    z: np.ndarray
    g: np.ndarray
    s: float = 1.0
    coupling_integral: np.ndarray = None
    error_integral: np.ndarray = None
    ydot: np.ndarray = None
    # previous stiffness coupling value and its smoothed rate
    coupling_prev: np.ndarray = None
    coupling_rate: np.ndarray = None

    def __post_init__(self):
        n = len(self.y)
        self.y = np.asarray(self.y, dtype=float)
        self.z = np.asarray(self.z, dtype=float)
        self.g = np.asarray(self.g, dtype=float)
        for name in ("coupling_integral", "error_integral", "ydot",
                     "coupling_prev", "coupling_rate"):
            v = getattr(self, name)
            setattr(self, name, np.zeros(n) if v is None else np.asarray(v, dtype=float))

    @classmethod
    def at_rest(cls, y0, goal=None):
        y0 = np.asarray(y0, dtype=float)
        return cls(y=y0.copy(), z=np.zeros_like(y0),
                   g=y0.copy() if goal is None else np.asarray(goal, dtype=float))


@dataclass
class CouplingInputs:
    """Signals entering the coupling terms; unset entries are zero.

    Diagonal gains (``admittance_gain``, ``selection``) may be given as
    scalars, vectors of diagonal entries or full matrices.
    """

    velocity_cmd: np.ndarray = None
    external_force: np.ndarray = None
    desired_force: np.ndarray = None
    admittance_gain: object = 0.0
    stiffness_gain: float = 0.0
    stiffness_rate_gain: float = 0.0
    force_gain: float = 0.0
    selection: object = 1.0
    hri_switch: int = 0
    avoid_force: np.ndarray = None

    def vec(self, name, n):
        v = getattr(self, name)
        return np.zeros(n) if v is None else np.asarray(v, dtype=float)


def _apply_gain(gain, x):
    g = np.asarray(gain, dtype=float)
    return g @ x if g.ndim == 2 else g * x


@dataclass
class ForcingTerm:
    """RBF forcing term ``f(s) = s * sum(psi_i w_i) / sum(psi_i)``."""

    basis_centers: np.ndarray
    basis_widths: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.basis_centers = np.asarray(self.basis_centers, dtype=float)
        self.basis_widths = np.asarray(self.basis_widths, dtype=float)
        self.weights = np.atleast_2d(np.asarray(self.weights, dtype=float))
        if np.any(self.basis_widths <= 0.0):
            raise ValueError("basis widths must be positive")

    def features(self, s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        psi = np.exp(-self.basis_widths * (s[:, None] - self.basis_centers) ** 2)
        return s[:, None] * psi / (psi.sum(axis=1, keepdims=True) + 1e-300)

    def __call__(self, s):
        return (self.features(s) @ self.weights)[0]

    def to_dict(self):
        return {"basis_centers": self.basis_centers.tolist(),
                "basis_widths": self.basis_widths.tolist(),
                "weights": self.weights.tolist()}

    @classmethod
    def from_dict(cls, data):
        return cls(data["basis_centers"], data["basis_widths"], data["weights"])


def canonical_step(s, params, dt):
    return max(s - dt * params.alpha_s * s / params.tau, _PHASE_FLOOR)


def _integrate(state, params, dt, forcing=None, accel=None, vel=None,
               goal_offset=None, shift=None):
    a = params.alpha_z
    b = params.beta_z
    tau = params.tau
    target = state.g if goal_offset is None else state.g + goal_offset
    if shift is not None:
        target = target - shift
    zdot = a * (b * (target - state.y) - state.z)
    if forcing is not None:
        zdot = zdot + forcing(state.s)
    if accel is not None:
        zdot = zdot + accel
    zdot = zdot / tau
    ydot = state.z / tau
    if vel is not None:
        ydot = ydot + vel
    return replace(state, y=state.y + dt * ydot, z=state.z + dt * zdot,
                   s=canonical_step(state.s, params, dt), ydot=ydot)


def _smoothed_rate(state, value, dt):
    a = 1.0 - np.exp(-RATE_CUTOFF * dt)
    raw = (value - state.coupling_prev) / dt
    return state.coupling_rate + a * (raw - state.coupling_rate)


def dmp_step(state, forcing, params, dt):
    return _integrate(state, params, dt, forcing=forcing)


def obstacle_coupled_step(state, coupling_accel, forcing, params, dt):
    return _integrate(state, params, dt, forcing=forcing,
                      accel=np.asarray(coupling_accel, dtype=float))


def stiffness_coupled_step(state, inputs, params, dt, forcing=None):
    n = len(state.y)
    cf = inputs.stiffness_gain * inputs.vec("external_force", n)
    rate = _smoothed_rate(state, cf, dt)
    new = _integrate(state, params, dt, forcing=forcing,
                     accel=inputs.stiffness_rate_gain * rate, vel=cf)
    return replace(new, coupling_prev=cf, coupling_rate=rate)


def _velocity_interface_step(state, cdot, params, dt, forcing=None, accel=None,
                             shift=None):
    new = _integrate(state, params, dt, forcing=forcing, accel=accel, vel=cdot,
                     goal_offset=state.coupling_integral, shift=shift)
    return replace(new, coupling_integral=state.coupling_integral + dt * cdot)


def admittance_coupled_step(state, inputs, params, dt, forcing=None):
    n = len(state.y)
    err = inputs.vec("external_force", n) - inputs.vec("desired_force", n)
    cdot = _apply_gain(inputs.admittance_gain, err)
    return _velocity_interface_step(state, cdot, params, dt, forcing)


def wholebody_cdmp_step(state, inputs, error_integral, params, dt, forcing=None):
    """Whole-body primitive with pHRI admittance and deviation feedback.

    ``C' = V_ee + k_hri * F_ext * S_hri``; ``error_integral`` shifts the
    attractor so the primitive steers the integrated deviation back to zero.
    """
    n = len(state.y)
    cdot = inputs.vec("velocity_cmd", n)
    if inputs.hri_switch:
        cdot = cdot + _apply_gain(inputs.admittance_gain, inputs.vec("external_force", n))
    e = np.asarray(error_integral, dtype=float)
    new = _velocity_interface_step(state, cdot, params, dt, forcing, shift=e)
    return replace(new, error_integral=e.copy())


def base_cdmp_step(state, inputs, params, dt, forcing=None):
    n = len(state.y)
    return _velocity_interface_step(state, inputs.vec("velocity_cmd", n), params, dt,
                                    forcing, accel=inputs.vec("avoid_force", n))


def arm_cdmp_step(state, inputs, params, dt, forcing=None):
    """Hybrid stiffness/force primitive for the arm.

    Axes with ``selection == 1`` get the stiffness coupling ``k_p F``; the
    complementary axes integrate the force error ``k_f (F_ext - F_d)``, which
    drives ``F_ext`` to ``F_d`` for a passive contact.  ``hri_switch`` disables
    the force-control part.
    """
    n = len(state.y)
    sel = np.asarray(inputs.selection, dtype=float)
    sel = np.diag(sel) if sel.ndim == 2 else np.broadcast_to(sel, (n,))
    f_ext = inputs.vec("external_force", n)
    cs = inputs.stiffness_gain * sel * f_ext
    rate = _smoothed_rate(state, cs, dt)
    cdot = inputs.vec("velocity_cmd", n)
    if not inputs.hri_switch:
        cdot = cdot + inputs.force_gain * (1.0 - sel) * (f_ext - inputs.vec("desired_force", n))
    tau = params.tau
    new = _integrate(state, params, dt, forcing=forcing,
                     accel=inputs.stiffness_rate_gain * rate,
                     vel=cs / tau + cdot, goal_offset=state.coupling_integral)
    return replace(new, coupling_integral=state.coupling_integral + dt * cdot,
                   coupling_prev=cs, coupling_rate=rate)


@dataclass(frozen=True)
class RepulsiveFieldParams:
    gain: float = 0.01
    threshold: float = 0.5

    def __post_init__(self):
        if self.threshold <= 0.0 or self.gain < 0.0:
            raise ValueError("threshold must be positive and gain non-negative")


def obstacle_distances(base_xy, obstacles, footprint_radius):
    """Surface distances and unit vectors pointing from each obstacle to the base."""
    p = np.asarray(base_xy, dtype=float)[:2]
    dists, dirs = [], []
    for center, radius in obstacles:
        diff = p - np.asarray(center, dtype=float)[:2]
        r = np.hypot(diff[0], diff[1])
        dists.append(max(r - radius - footprint_radius, DISTANCE_FLOOR))
        dirs.append(diff / r if r > 0.0 else np.array([1.0, 0.0]))
    return dists, dirs


def repulsive_potential(base_xy, obstacles, field, footprint_radius):
    total = 0.0
    for d, _ in zip(*obstacle_distances(base_xy, obstacles, footprint_radius)):
        if d <= field.threshold:
            total += 0.5 * field.gain * (1.0 / d - 1.0 / field.threshold) ** 2
    return total


def repulsive_force(base_xy, obstacles, field, footprint_radius):
    """``-grad U_rep`` summed over obstacles inside the threshold."""
    out = np.zeros(2)
    for d, u in zip(*obstacle_distances(base_xy, obstacles, footprint_radius)):
        if d <= field.threshold:
            out += field.gain * (1.0 / d - 1.0 / field.threshold) / (d * d) * u
    return out


def learn_forcing_term(demo_positions, params, basis_count, dt):
    """Batch least-squares RBF fit reproducing a demonstration.

    The goal is the last demo sample; ``params.tau`` should match the demo
    duration for the phase to cover the basis functions.
    """
    Y = np.asarray(demo_positions, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if Y.shape[0] < 3:
        raise InsufficientData(f"need at least 3 samples, got {Y.shape[0]}")
    tau, a, b = params.tau, params.alpha_z, params.beta_z
    t = np.arange(Y.shape[0]) * dt
    Yd = np.gradient(Y, dt, axis=0)
    Ydd = np.gradient(Yd, dt, axis=0)
    g = Y[-1]
    f_target = tau * tau * Ydd - a * (b * (g - Y) - tau * Yd)
    s = np.exp(-params.alpha_s * t / tau)
    centers = np.exp(-params.alpha_s * np.linspace(0.0, t[-1], basis_count) / tau)
    gaps = np.abs(np.diff(centers))
    widths = 1.0 / np.concatenate([gaps, gaps[-1:]]) ** 2
    term = ForcingTerm(centers, widths, np.zeros((basis_count, Y.shape[1])))
    phi = term.features(s)
    term.weights = np.linalg.lstsq(phi, f_target, rcond=None)[0]
    return term
