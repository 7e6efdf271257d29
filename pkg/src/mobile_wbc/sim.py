"""Deterministic plant, world and sensor emulation.

The base is a linear velocity lag with a lightly damped flex mode excited by
base acceleration; the arm is an ideal Cartesian velocity actuator resolved
through its Jacobian.  Obstacles are discs, the contact surface is a spring
plane and the distance sensor samples at 15 Hz.
"""
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy.linalg import expm

from .controller import (ControllerConfig, LoopContext, Reference, Sensors,
                         control_step)
from .errors import SingularTask
from .kinematics import (RobotModel, WholeBodyState, arm_jacobian, block_rotation,
                         rot_z, whole_body_jacobian)
from .redundancy import SINGULAR_DAMPING, SINGULAR_THRESHOLD

SENSOR_RATE = 15.0
DISTANCE_FLOOR = 1e-3
# logged d_obs when the world holds no obstacles
NO_OBSTACLE_DISTANCE = 1.0e3


@dataclass(frozen=True)
class BasePlantParams:
    bandwidth: float = 6.0
    flex_freq: float = 25.0
    flex_damping: float = 0.08
    flex_gain: float = 5.0

    def __post_init__(self):
        if self.bandwidth <= 0.0 or self.flex_freq <= 0.0:
            raise ValueError("bandwidth and flex_freq must be positive")
        if not 0.0 < self.flex_damping < 1.0:
            raise ValueError("flex_damping must lie in (0, 1)")
        if self.flex_gain < 0.0:
            raise ValueError("flex_gain must be non-negative")


@dataclass(frozen=True)
class BasePlantState:
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    flex: np.ndarray = field(default_factory=lambda: np.zeros(2))
    flex_rate: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def vector(self):
        return np.concatenate([self.velocity, self.flex, self.flex_rate])


@lru_cache(maxsize=32)
def _plant_matrices(params, dt):
    b, w, z, g = params.bandwidth, params.flex_freq, params.flex_damping, params.flex_gain
    A = np.zeros((7, 7))
    B = np.zeros((7, 3))
    A[:3, :3] = -b * np.eye(3)
    B[:3, :3] = b * np.eye(3)
    A[3:5, 5:7] = np.eye(2)
    A[5:7, 3:5] = -w * w * np.eye(2)
    A[5:7, 5:7] = -2.0 * z * w * np.eye(2)
    # flex excitation -g * base acceleration, base acceleration = b (u - v)
    A[5:7, 0:2] += g * b * np.eye(2)
    B[5:7, 0:2] = -g * b * np.eye(2)
    aug = np.zeros((10, 10))
    aug[:7, :7] = A
    aug[:7, 7:] = B
    E = expm(aug * dt)
    return E[:7, :7].copy(), E[:7, 7:].copy()


def base_plant_step(cmd, plant_state, params, dt):
    """Advance the base plant by one zero-order-hold step.

    Returns
    -------
    state : BasePlantState
    velocity : ndarray, shape (3,)
        Actual base twist in ``T_b``.
    vibration : ndarray, shape (3,)
        Flex displacement of the arm mount in ``T_b`` (z is always 0).
    """
    Ad, Bd = _plant_matrices(params, dt)
    x = Ad @ plant_state.vector() + Bd @ np.asarray(cmd, dtype=float)
    new = BasePlantState(x[:3], x[3:5], x[5:7])
    return new, x[:3].copy(), np.array([x[3], x[4], 0.0])


def arm_plant_step(cmd, q_a, model, dt):
    """Resolve a Cartesian arm command to joint rates, integrate and clamp."""
    J = arm_jacobian(q_a, model)
    cmd = np.asarray(cmd, dtype=float)
    if np.linalg.svd(J, compute_uv=False)[-1] < SINGULAR_THRESHOLD:
        lam2 = SINGULAR_DAMPING ** 2
        qd = J.T @ np.linalg.solve(J @ J.T + lam2 * np.eye(6), cmd)
    else:
        qd = np.linalg.solve(J, cmd)
    return np.clip(np.asarray(q_a, dtype=float) + dt * qd,
                   model.joint_lower, model.joint_upper)


@dataclass(frozen=True)
class Obstacle:
    """Disc obstacle moving at constant velocity or along timed waypoints.

    ``waypoints`` rows are ``(t, x, y)``; the position is interpolated
    linearly and held constant outside the covered interval.
    """

    center: tuple
    radius: float
    velocity: tuple = (0.0, 0.0)
    waypoints: tuple = None

    def __post_init__(self):
        if self.radius < 0.0:
            raise ValueError("obstacle radius must be non-negative")
        if self.waypoints is not None:
            times = [w[0] for w in self.waypoints]
            if any(b <= a for a, b in zip(times, times[1:])):
                raise ValueError("waypoint times must be strictly increasing")

    def at_time(self, t, previous_center, dt):
        if self.waypoints is None:
            c = np.asarray(previous_center) + dt * np.asarray(self.velocity, dtype=float)
        else:
            w = np.asarray(self.waypoints, dtype=float)
            c = np.array([np.interp(t, w[:, 0], w[:, 1]), np.interp(t, w[:, 0], w[:, 2])])
        return replace(self, center=tuple(float(v) for v in c))


@dataclass(frozen=True)
class ContactSurface:
    """Spring plane; ``normal`` points from the surface into free space."""

    point: tuple
    normal: tuple
    stiffness: float = 1000.0

    def __post_init__(self):
        if self.stiffness <= 0.0:
            raise ValueError("surface stiffness must be positive")
        n = np.asarray(self.normal, dtype=float)
        if n.shape != (3,) or np.linalg.norm(n) == 0.0:
            raise ValueError("surface normal must be a nonzero 3-vector")


@dataclass(frozen=True)
class World:
    """Obstacles, optional contact surface and a scripted external wrench.

    ``force_script`` rows are ``(t, fx, fy, fz, mx, my, mz)`` in ``T_w``,
    linearly interpolated and held at the ends.
    """

    obstacles: tuple = ()
    contact_surface: ContactSurface = None
    force_script: tuple = ()
    time: float = 0.0

    def __post_init__(self):
        times = [r[0] for r in self.force_script]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("force script times must be strictly increasing")

    def scripted_force(self, t=None):
        t = self.time if t is None else t
        if not self.force_script:
            return np.zeros(6)
        s = np.asarray(self.force_script, dtype=float)
        return np.array([np.interp(t, s[:, 0], s[:, i]) for i in range(1, 7)])

    @property
    def force(self):
        return self.scripted_force()


def world_step(world, t, dt):
    """World state at ``t + dt`` (obstacles advanced, script time updated)."""
    t1 = t + dt
    obs = tuple(o.at_time(t1, o.center, dt) for o in world.obstacles)
    return replace(world, obstacles=obs, time=t1)


def contact_force(surface, ee_position):
    """Spring reaction on the end effector, zero torque."""
    n = np.asarray(surface.normal, dtype=float)
    n = n / np.linalg.norm(n)
    depth = -float(np.dot(np.asarray(ee_position, dtype=float)
                          - np.asarray(surface.point, dtype=float), n))
    out = np.zeros(6)
    if depth > 0.0:
        out[:3] = surface.stiffness * depth * n
    return out


def measure_obstacle_distance(world, base_pose, footprint_radius):
    """Smallest disc-to-disc surface distance, floored at 1 mm.

    Instantaneous; :class:`ObstacleSensor` adds the 15 Hz sample-and-hold.
    """
    if not world.obstacles:
        return NO_OBSTACLE_DISTANCE
    p = np.asarray(base_pose, dtype=float)[:2]
    d = min(np.hypot(*(p - np.asarray(o.center))) - o.radius - footprint_radius
            for o in world.obstacles)
    return max(float(d), DISTANCE_FLOOR)


class ObstacleSensor:
    """Distance sensor sampled at ``rate`` Hz with zero-order hold."""

    def __init__(self, rate=SENSOR_RATE):
        self.rate = rate
        self._slot = None
        self.distance = NO_OBSTACLE_DISTANCE
        self.obstacles = ()

    def update(self, world, base_pose, footprint_radius, t):
        slot = int(np.floor(t * self.rate + 1e-9))
        if slot != self._slot:
            self._slot = slot
            self.distance = measure_obstacle_distance(world, base_pose, footprint_radius)
            self.obstacles = tuple((np.array(o.center, dtype=float), o.radius)
                                   for o in world.obstacles)
        return self.distance


def _vec(prefix, names):
    return [f"{prefix}_{n}" for n in names]


_XYZ = ("x", "y", "z")
_TWIST = ("x", "y", "z", "wx", "wy", "wz")
_PLANAR = ("x", "y", "phi")
_JOINTS = tuple(str(i) for i in range(1, 7))

LOG_COLUMNS = tuple(
    ["t"] + _vec("qb", _PLANAR) + _vec("qa", _JOINTS) + _vec("va_ref", _TWIST)
    + _vec("vb_pre", _PLANAR) + _vec("vb_ref", _PLANAR) + _vec("vee_cmd", _TWIST)
    + _vec("ee", _XYZ) + _vec("ee_cmd", _XYZ)
    + ["f_x", "f_y", "f_z", "m_x", "m_y", "m_z"]
    + ["cm", "alpha", "sigma_xy", "sigma_phi", "d_obs"]
    + _vec("dev", _TWIST) + _vec("dev_int", _TWIST)
    + _vec("va_wln", _TWIST) + _vec("vb_wln", _PLANAR) + ["ws_d", "ws_phi"]
    + ["vib_x", "vib_y"]
)


class ScenarioLog:
    """Per-cycle records with the fixed column layout ``LOG_COLUMNS``."""

    columns = LOG_COLUMNS

    def __init__(self, rows=None):
        self._rows = [] if rows is None else list(rows)
        self._cache = None

    def append(self, row):
        self._rows.append(np.asarray(row, dtype=float))
        self._cache = None

    def __len__(self):
        return len(self._rows)

    @property
    def data(self):
        if self._cache is None:
            self._cache = (np.vstack(self._rows) if self._rows
                           else np.empty((0, len(self.columns))))
        return self._cache

    def column(self, name):
        return self.data[:, self.columns.index(name)]

    def __getitem__(self, name):
        return self.column(name)

    def block(self, prefix, names):
        return np.column_stack([self.column(c) for c in _vec(prefix, names)])


@dataclass
class Scenario:
    """Everything :func:`run_scenario` needs, already validated.

    ``reference`` maps time to a :class:`Reference`; ``schedule`` holds
    ``(time, ControllerConfig)`` pairs applied once the clock reaches them.
    """

    model: RobotModel = field(default_factory=RobotModel)
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    plant: BasePlantParams = field(default_factory=BasePlantParams)
    world: World = field(default_factory=World)
    base_pose: tuple = (0.0, 0.0, 0.0)
    arm_joints: tuple = (0.0,) * 6
    reference: object = None
    schedule: tuple = ()
    duration: float = 1.0
    dt: float = 0.01
    seed: int = 0
    force_noise: float = 0.0
    name: str = "scenario"


def run_scenario(scenario, model=None, controller_config=None, duration=None, seed=None):
    """Lockstep 100 Hz loop: world, sensors, controller, plants, log.

    Raises
    ------
    SingularTask
        If a cycle cannot be resolved even with damping; the message carries
        the cycle index.
    """
    model = scenario.model if model is None else model
    cfg = scenario.controller if controller_config is None else controller_config
    duration = scenario.duration if duration is None else duration
    seed = scenario.seed if seed is None else seed
    dt = scenario.dt
    n_cycles = int(round(duration / dt))
    rng = np.random.default_rng(seed)
    reference = scenario.reference or (lambda t: Reference())
    schedule = sorted(scenario.schedule, key=lambda e: e[0])
    next_event = 0

    world = replace(scenario.world, obstacles=tuple(
        o.at_time(0.0, o.center, 0.0) for o in scenario.world.obstacles), time=0.0)
    pose = np.asarray(scenario.base_pose, dtype=float).copy()
    q_a = np.asarray(scenario.arm_joints, dtype=float).copy()
    plant = BasePlantState()
    vib = np.zeros(3)
    sensor = ObstacleSensor()
    state = WholeBodyState.from_configuration(pose, q_a, model)
    ctx = LoopContext.initial(state, model, dt)
    ee_cmd = state.ee_world_position()
    log = ScenarioLog()

    for k in range(n_cycles):
        t = k * dt
        while next_event < len(schedule) and schedule[next_event][0] <= t + 1e-9:
            cfg = schedule[next_event][1]
            next_event += 1
        state = WholeBodyState.from_configuration(pose, q_a, model)
        R_w = rot_z(pose[2])
        ee_true = np.array([pose[0], pose[1], 0.0]) + R_w @ (state.ee_position_in_base + vib)
        force = world.force
        if world.contact_surface is not None:
            force = force + contact_force(world.contact_surface, ee_true)
        if scenario.force_noise > 0.0:
            force = force + rng.normal(0.0, scenario.force_noise, 6)
        d_obs = sensor.update(world, pose, model.base_radius, t)

        out = control_step(state, reference(t), Sensors(force, sensor.obstacles),
                           cfg, model, ctx)
        if out.singular:
            raise SingularTask(f"cycle {k} (t = {t:.2f} s): damped resolution failed")

        cmd = np.concatenate([out.arm_velocity_ref, out.base_velocity_ref])
        v_cmd_w = block_rotation(R_w) @ (whole_body_jacobian(state, model) @ cmd)
        log.append(np.concatenate([
            [t], pose, q_a, out.arm_velocity_ref, out.base_velocity_pre,
            out.base_velocity_ref, v_cmd_w, ee_true, ee_cmd, force,
            [out.metrics.capability, out.alpha, out.sigma_applied[0],
             out.sigma_applied[1], d_obs],
            out.ee_deviation, ctx.deviation_integral, out.arm_velocity_wln,
            out.base_velocity_wln, out.workspace, vib[:2],
        ]))

        plant, v_act, vib = base_plant_step(out.base_velocity_ref, plant, scenario.plant, dt)
        pose = pose + dt * np.array([*(R_w[:2, :2] @ v_act[:2]), v_act[2]])
        q_a = arm_plant_step(out.arm_velocity_ref, q_a, model, dt)
        ee_cmd = ee_cmd + dt * v_cmd_w[:3]
        world = world_step(world, t, dt)
    return log
