"""One cycle of the coupled-DMP whole-body controller.

The cycle runs, in order: whole-body primitive, world-to-base transform,
weighting adaptation, weighted least-norm resolution with the capability
null-space term, base obstacle primitive, low-pass filter, arm compensation,
arm hybrid stiffness/force primitive and deviation bookkeeping.
"""
from dataclasses import dataclass, field, replace

import numpy as np

from .coordination import (FilterParams, FilterState, accumulate_deviation,
                           compensate, lowpass_step, transition_alpha)
from .dmp import (RATE_CUTOFF, CdmpParams, CdmpState, CouplingInputs,
                  RepulsiveFieldParams, arm_cdmp_step, base_cdmp_step,
                  repulsive_force, wholebody_cdmp_step)
from .errors import DegenerateGradient, SingularTask
from .kinematics import arm_jacobian, block_rotation, rot_z, whole_body_jacobian
from .redundancy import (TASK_DAMPING, CapabilityMetrics, CmOptimizationParams,
                         WeightingFactors, capability_stencil, cm_gradient,
                         joint_to_cartesian_gradient, movement_capability,
                         null_space_velocity, resolve_wln, stencil_gradient,
                         weighting_matrix)

MODES = ("Locomotion", "Manipulation", "LocoManipulation", "IntuitivePHRI")
# whole-body primitive coordinates: world x, y, z and yaw
WB_AXES = (0, 1, 2, 5)


@dataclass(frozen=True)
class LocalWorkspaceParams:
    """Cone-shaped local workspace bands (m and rad)."""

    extend_lower: float = 0.75
    extend_upper: float = 0.8
    deflect_lower: float = np.radians(30.0)
    deflect_upper: float = np.radians(35.0)

    def __post_init__(self):
        if not self.extend_lower < self.extend_upper:
            raise ValueError("extend_lower must be below extend_upper")
        if not self.deflect_lower < self.deflect_upper:
            raise ValueError("deflect_lower must be below deflect_upper")


@dataclass(frozen=True)
class ControllerConfig:
    """Gains, thresholds and switches of the controller.

    ``factors`` is only used in ``LocoManipulation`` mode; the other modes fix
    or compute the weighting factors themselves.  ``desired_force`` and
    ``selection`` are expressed in the arm-mount frame.
    """

    factors: WeightingFactors = WeightingFactors()
    cm_params: CmOptimizationParams = CmOptimizationParams()
    filter: FilterParams = FilterParams()
    field: RepulsiveFieldParams = RepulsiveFieldParams()
    workspace: LocalWorkspaceParams = LocalWorkspaceParams()
    dmp: CdmpParams = CdmpParams()
    hri_gain: float = 0.05
    hri_switch: int = 0
    comp_switch: int = 1
    selection: tuple = (1.0,) * 6
    force_gains: tuple = (0.0, 0.0, 0.0)
    desired_force: tuple = (0.0,) * 6
    mode: str = "LocoManipulation"
    filter_enabled: bool = True

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mode == "LocoManipulation":
            for v in (self.factors.sigma_xy, self.factors.sigma_phi):
                if not 0.0 < v < 1.0:
                    raise ValueError("LocoManipulation needs weighting factors in (0, 1)")
        if self.hri_switch not in (0, 1) or self.comp_switch not in (0, 1):
            raise ValueError("switches must be 0 or 1")
        if len(self.selection) != 6 or any(v not in (0.0, 1.0) for v in self.selection):
            raise ValueError("selection must hold six entries in {0, 1}")
        if len(self.force_gains) != 3 or len(self.desired_force) != 6:
            raise ValueError("force_gains needs 3 entries and desired_force 6")
        if self.hri_gain < 0.0:
            raise ValueError("hri_gain must be non-negative")

    def mode_factors(self):
        if self.mode == "Locomotion":
            return WeightingFactors(0.0, 0.0)
        if self.mode == "Manipulation":
            return WeightingFactors(1.0, 1.0)
        return self.factors


@dataclass(frozen=True)
class Reference:
    """End-effector velocity reference in ``T_w``.

    ``goal_offset`` (world x, y, z, yaw), when given, moves the whole-body
    primitive's goal to the start pose plus this offset.
    """

    velocity: np.ndarray = field(default_factory=lambda: np.zeros(6))
    goal_offset: np.ndarray = None


@dataclass(frozen=True)
class Sensors:
    force: np.ndarray = field(default_factory=lambda: np.zeros(6))
    obstacles: tuple = ()


@dataclass(frozen=True)
class ControlOutputs:
    arm_velocity_ref: np.ndarray
    base_velocity_ref: np.ndarray
    metrics: CapabilityMetrics
    sigma_applied: tuple
    ee_deviation: np.ndarray
    # telemetry
    base_velocity_pre: np.ndarray = None
    base_velocity_wln: np.ndarray = None
    arm_velocity_wln: np.ndarray = None
    ee_velocity_world: np.ndarray = None
    alpha: float = 0.0
    workspace: tuple = (0.0, 0.0)
    damped: bool = False
    singular: bool = False


@dataclass
class LoopContext:
    """Mutable per-robot state carried between cycles."""

    wb_dmp: CdmpState
    base_dmp: CdmpState
    arm_dmp: CdmpState
    filter: FilterState = field(default_factory=FilterState)
    deviation_integral: np.ndarray = field(default_factory=lambda: np.zeros(6))
    prev_workspace: tuple = None
    workspace_rate: np.ndarray = field(default_factory=lambda: np.zeros(2))
    wb_origin: np.ndarray = field(default_factory=lambda: np.zeros(4))
    dt: float = 0.01

    @classmethod
    def initial(cls, state, model, dt=0.01):
        ee = state.ee_world_position()
        wb0 = np.array([ee[0], ee[1], ee[2], 0.0])
        return cls(wb_dmp=CdmpState.at_rest(wb0),
                   base_dmp=CdmpState.at_rest(np.asarray(state.base_pose, dtype=float)),
                   arm_dmp=CdmpState.at_rest(np.zeros(6)), wb_origin=wb0.copy(), dt=dt)


def _cone_terms(pos_a, model, ws):
    v = model.arm_mount_rotation @ np.asarray(pos_a, dtype=float)
    d = float(np.linalg.norm(v))
    phi = float(abs(np.arctan2(v[1], v[0])))
    p_d = transition_alpha(d, ws.extend_upper, ws.extend_lower)
    p_phi = transition_alpha(phi, ws.deflect_upper, ws.deflect_lower)
    return d, phi, p_d, p_phi


def workspace_factors(q_a, ee_pose_in_base, model, config):
    """Adaptive weighting factors ``(f_xy, f_phi, d, phi)`` of the pHRI mode.

    ``d`` is the distance from the arm-mount origin to the end effector and
    ``phi`` the absolute azimuth of the end effector about the mount's
    forward (+x of ``T_b``) axis.
    """
    pos_b = ee_pose_in_base[0]
    pos_a = model.arm_mount_rotation.T @ (np.asarray(pos_b) - model.arm_mount_translation)
    d, phi, p_d, p_phi = _cone_terms(pos_a, model, config.workspace)
    cm = movement_capability(q_a, model, config.cm_params).capability
    up, lo = config.cm_params.cm_upper, config.cm_params.cm_lower
    f_xy = 1.0 - transition_alpha(cm * p_d * p_phi, up, lo)
    f_phi = 1.0 - transition_alpha(cm * p_phi, up, lo)
    return f_xy, f_phi, d, phi


def workspace_gradients(q_a, model, config, jac=None):
    """Cartesian gradients of ``C_m^d`` and ``C_m^phi`` (arm-mount frame)."""
    cmp = config.cm_params
    st = capability_stencil(q_a, model, cmp)
    vals_d = np.empty(13)
    vals_phi = np.empty(13)
    for i in range(13):
        _, _, p_d, p_phi = _cone_terms(st[i, 1:], model, config.workspace)
        vals_d[i] = st[i, 0] * p_d * p_phi
        vals_phi[i] = st[i, 0] * p_phi
    if jac is None:
        jac = arm_jacobian(q_a, model)
    return (joint_to_cartesian_gradient(stencil_gradient(vals_d, cmp.grad_step), jac),
            joint_to_cartesian_gradient(stencil_gradient(vals_phi, cmp.grad_step), jac))


def deactivation_sigma(f_xy, f_phi, cm_grads, v_ee, d_rate, phi_rate):
    """Weighting factors with the deactivation override.

    Each channel returns exactly 1 when its capability gradient agrees with
    the end-effector motion or its workspace coordinate is shrinking, and its
    adaptive factor otherwise.
    """
    v = np.asarray(v_ee, dtype=float)
    g_d, g_phi = cm_grads
    s_xy = 1.0 if (float(np.dot(g_d, v)) > 0.0 or d_rate < 0.0) else float(f_xy)
    s_phi = 1.0 if (float(np.dot(g_phi, v)) > 0.0 or phi_rate < 0.0) else float(f_phi)
    return s_xy, s_phi


def _base_to_world(v, phi):
    out = np.empty(3)
    out[:2] = rot_z(phi)[:2, :2] @ v[:2]
    out[2] = v[2]
    return out


def _world_to_base(v, phi):
    out = np.empty(3)
    out[:2] = rot_z(-phi)[:2, :2] @ v[:2]
    out[2] = v[2]
    return out


def _adapt_sigma(state, model, config, ctx, metrics, v_ee_a, jac):
    f_xy, f_phi, d, phi = workspace_factors(state.arm_joints, state.ee_pose_in_base,
                                            model, config)
    a = 1.0 - np.exp(-RATE_CUTOFF * ctx.dt)
    if ctx.prev_workspace is None:
        rate = np.zeros(2)
    else:
        raw = (np.array([d, phi]) - np.array(ctx.prev_workspace)) / ctx.dt
        rate = ctx.workspace_rate + a * (raw - ctx.workspace_rate)
    ctx.prev_workspace = (d, phi)
    ctx.workspace_rate = rate
    grads = workspace_gradients(state.arm_joints, model, config, jac)
    sig = deactivation_sigma(f_xy, f_phi, grads, v_ee_a, rate[0], rate[1])
    return WeightingFactors(*sig), (d, phi)


def control_step(state, reference, sensors, config, model, ctx):
    """Run one control cycle and advance ``ctx`` in place.

    Parameters
    ----------
    state : WholeBodyState
        Measured configuration of base and arm.
    reference : Reference
        End-effector velocity reference in the world frame.
    sensors : Sensors
        External wrench on the end effector (world frame) and the obstacle
        discs ``(center, radius)`` seen by the distance sensor.
    config : ControllerConfig
    model : RobotModel
    ctx : LoopContext

    Returns
    -------
    ControlOutputs
        ``singular`` is set, with zero commands, if even the damped
        resolution fails.
    """
    dt = ctx.dt
    phi_b = float(state.base_pose[2])
    prm = config.dmp
    R_wb6 = block_rotation(rot_z(phi_b))
    R_ba6 = model.mount_rotation6
    force = np.asarray(sensors.force, dtype=float)
    ax = list(WB_AXES)

    # (1) whole-body primitive
    if reference.goal_offset is not None:
        ctx.wb_dmp = replace(ctx.wb_dmp,
                             g=ctx.wb_origin + np.asarray(reference.goal_offset, dtype=float))
    v_ref = np.asarray(reference.velocity, dtype=float)
    wb_in = CouplingInputs(velocity_cmd=v_ref[ax], external_force=force[ax],
                           admittance_gain=config.hri_gain, hri_switch=config.hri_switch)
    ctx.wb_dmp = wholebody_cdmp_step(ctx.wb_dmp, wb_in, ctx.deviation_integral[ax],
                                     replace(prm, dims=4), dt)
    v_ee_w = v_ref.copy()
    v_ee_w[ax] = ctx.wb_dmp.ydot

    # (2) into the base frame
    v_ee_b = R_wb6.T @ v_ee_w

    # (3) weighting factors
    metrics = movement_capability(state.arm_joints, model, config.cm_params)
    jac = arm_jacobian(state.arm_joints, model)
    ws = (0.0, 0.0)
    if config.mode == "IntuitivePHRI":
        factors, ws = _adapt_sigma(state, model, config, ctx, metrics,
                                   R_ba6.T @ v_ee_b, jac)
    else:
        factors = config.mode_factors()
        pos_a = model.arm_mount_rotation.T @ (state.ee_position_in_base
                                             - model.arm_mount_translation)
        ws = _cone_terms(pos_a, model, config.workspace)[:2]

    # (4) weighted least-norm with the capability null-space term
    cmp = config.cm_params
    grad = None
    if metrics.capability < cmp.cm_upper:
        try:
            grad = cm_gradient(state.arm_joints, model, cmp, jac)
        except DegenerateGradient:
            grad = None
    null_v = null_space_velocity(grad, cmp.null_gain) if cmp.null_gain > 0.0 else None
    j_wb = whole_body_jacobian(state, model)
    Q = weighting_matrix(factors)
    damped = False
    try:
        v_wb = resolve_wln(v_ee_b, j_wb, Q, null_v)
    except SingularTask:
        damped = True
        v_wb = resolve_wln(v_ee_b, j_wb, Q, null_v, damping=TASK_DAMPING)
    if not np.all(np.isfinite(v_wb)):
        zero6 = np.zeros(6)
        return ControlOutputs(zero6, np.zeros(3), metrics,
                              (factors.sigma_xy, factors.sigma_phi), zero6,
                              np.zeros(3), np.zeros(3), zero6, v_ee_w, 0.0, ws,
                              True, True)
    v_a = v_wb[:6]
    v_b = v_wb[6:]

    # (5) base primitive with obstacle avoidance
    f_avoid = np.zeros(3)
    if sensors.obstacles:
        f_avoid[:2] = repulsive_force(ctx.base_dmp.y[:2], sensors.obstacles,
                                      config.field, model.base_radius)
    base_in = CouplingInputs(velocity_cmd=_base_to_world(v_b, phi_b), avoid_force=f_avoid)
    ctx.base_dmp = base_cdmp_step(ctx.base_dmp, base_in, replace(prm, dims=3), dt)
    v_b_pre = _world_to_base(ctx.base_dmp.ydot, phi_b)

    # (6) low-pass filter
    if config.filter_enabled:
        ctx.filter, v_b_ref = lowpass_step(ctx.filter, v_b_pre, config.filter)
    else:
        v_b_ref = v_b_pre.copy()

    # (7) compensation of the filtering/avoidance deviation
    alpha = transition_alpha(metrics.capability, cmp.cm_upper, cmp.cm_lower) * config.comp_switch
    comp = compensate(v_b_ref - v_b, j_wb[:, 6:], R_ba6, grad, alpha,
                      bool(config.comp_switch))

    # (8) arm hybrid stiffness/force primitive
    k_p, k_d, k_f = config.force_gains
    f_arm = R_ba6.T @ (R_wb6.T @ force)
    arm_in = CouplingInputs(velocity_cmd=v_a + comp.arm_correction, external_force=f_arm,
                            desired_force=np.asarray(config.desired_force, dtype=float),
                            stiffness_gain=k_p, stiffness_rate_gain=k_d, force_gain=k_f,
                            selection=np.asarray(config.selection, dtype=float),
                            hri_switch=config.hri_switch)
    ctx.arm_dmp = arm_cdmp_step(ctx.arm_dmp, arm_in, replace(prm, dims=6), dt)
    v_a_ref = ctx.arm_dmp.ydot.copy()

    # (9) deviation bookkeeping in the world frame
    dev_w = R_wb6 @ (R_ba6 @ comp.ee_deviation)
    ctx.deviation_integral = accumulate_deviation(ctx.deviation_integral, dev_w, dt)

    return ControlOutputs(
        arm_velocity_ref=v_a_ref, base_velocity_ref=np.asarray(v_b_ref, dtype=float),
        metrics=metrics, sigma_applied=(factors.sigma_xy, factors.sigma_phi),
        ee_deviation=comp.ee_deviation, base_velocity_pre=v_b_pre,
        base_velocity_wln=v_b.copy(), arm_velocity_wln=v_a.copy(),
        ee_velocity_world=v_ee_w, alpha=float(comp.alpha_used), workspace=tuple(ws),
        damped=damped)
