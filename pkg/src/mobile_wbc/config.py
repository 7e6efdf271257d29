"""Versioned JSON scenario format.

A scenario file is a JSON object whose sections mirror the dataclasses
below.  Every field has a default, unknown keys are rejected and each
violated rule raises :class:`ValidationError` carrying the dotted field path
and a constraint name.  :func:`build_scenario` turns a parsed
:class:`ScenarioConfig` into the runtime :class:`~mobile_wbc.sim.Scenario`.
"""
import copy
import json
from dataclasses import asdict, dataclass, field, fields, replace
from importlib import resources

import numpy as np

from .controller import ControllerConfig, LocalWorkspaceParams, Reference
from .coordination import FilterParams
from .dmp import CdmpParams, RepulsiveFieldParams
from .errors import ParseError, ValidationError
from .kinematics import REFERENCE_LIMITS_DEG, REFERENCE_LINKS, RobotModel
from .redundancy import CmOptimizationParams, WeightingFactors
from .sim import (BasePlantParams, ContactSurface, Obstacle, Scenario, World)

SCHEMA_VERSION = 1


def _spec(default, kind="float", check=None, n=None, section=None):
    """Field with validation metadata.

    ``kind`` is one of float, int, bool, str, vec, rows, section, sections;
    ``check`` names the constraint (see ``_CHECKS``).
    """
    meta = {"kind": kind, "check": check, "n": n, "section": section}
    if kind == "section" and default is not None:
        return field(default_factory=default, metadata=meta)
    if isinstance(default, (list, dict)):
        return field(default_factory=lambda: copy.deepcopy(default), metadata=meta)
    return field(default=default, metadata=meta)


_CHECKS = {
    "positive": (lambda v: v > 0.0, "must be > 0"),
    "non_negative": (lambda v: v >= 0.0, "must be >= 0"),
    "unit_interval": (lambda v: 0.0 <= v <= 1.0, "must lie in [0, 1]"),
    "open_unit_interval": (lambda v: 0.0 < v < 1.0, "must lie in (0, 1)"),
    "switch": (lambda v: v in (0, 1), "must be 0 or 1"),
    "selection": (lambda v: all(x in (0.0, 1.0) for x in v), "entries must be 0 or 1"),
    "mode": (lambda v: v in ("Locomotion", "Manipulation", "LocoManipulation",
                             "IntuitivePHRI"), "unknown motion mode"),
    "reference_type": (lambda v: v in ("idle", "velocity", "goals", "drag"),
                       "must be idle, velocity, goals or drag"),
    "increasing": (lambda v: all(b[0] > a[0] for a, b in zip(v, v[1:])),
                   "times must be strictly increasing"),
}


@dataclass
class RobotSection:
    arm_links: list = _spec([list(r) for r in REFERENCE_LINKS], "rows", n=4)
    joint_lower_deg: tuple = _spec(tuple(-v for v in REFERENCE_LIMITS_DEG), "vec", n=6)
    joint_upper_deg: tuple = _spec(tuple(REFERENCE_LIMITS_DEG), "vec", n=6)
    base_radius: float = _spec(0.3, check="positive")
    arm_mount_rotation: list = _spec([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
                                     "rows", n=3)
    arm_mount_translation: tuple = _spec((0.0, 0.0, 0.35), "vec", n=3)


@dataclass
class InitialSection:
    base_pose: tuple = _spec((0.0, 0.0, 0.0), "vec", n=3)
    arm_joints_deg: tuple = _spec((0.0,) * 6, "vec", n=6)


@dataclass
class ControllerSection:
    mode: str = _spec("LocoManipulation", "str", "mode")
    sigma_xy: float = _spec(0.5, check="unit_interval")
    sigma_phi: float = _spec(0.5, check="unit_interval")
    null_gain: float = _spec(0.1, check="non_negative")
    cm_upper: float = _spec(0.04, check="positive")
    cm_lower: float = _spec(0.035, check="positive")
    jl_scale: float = _spec(2.0e4, check="positive")
    grad_step: float = _spec(1e-5, check="positive")
    filter_enabled: bool = _spec(True, "bool")
    filter_cutoff: float = _spec(2.0 * np.pi, check="positive")
    filter_damping: float = _spec(1.0, check="positive")
    obstacle_gain: float = _spec(0.01, check="non_negative")
    obstacle_threshold: float = _spec(0.5, check="positive")
    extend_lower: float = _spec(0.75, check="positive")
    extend_upper: float = _spec(0.8, check="positive")
    deflect_lower_deg: float = _spec(30.0, check="positive")
    deflect_upper_deg: float = _spec(35.0, check="positive")
    hri_gain: float = _spec(0.05, check="non_negative")
    hri_switch: int = _spec(0, "int", "switch")
    comp_switch: int = _spec(1, "int", "switch")
    selection: tuple = _spec((1.0,) * 6, "vec", "selection", n=6)
    stiffness_gain: float = _spec(0.0, check="non_negative")
    stiffness_rate_gain: float = _spec(0.0, check="non_negative")
    force_gain: float = _spec(0.0, check="non_negative")
    desired_force: tuple = _spec((0.0,) * 6, "vec", n=6)
    dmp_tau: float = _spec(1.0, check="positive")
    dmp_alpha_z: float = _spec(25.0, check="positive")
    dmp_beta_z: float = _spec(6.25, check="positive")
    dmp_alpha_s: float = _spec(4.0, check="positive")


@dataclass
class PlantSection:
    bandwidth: float = _spec(6.0, check="positive")
    flex_freq: float = _spec(25.0, check="positive")
    flex_damping: float = _spec(0.08, check="open_unit_interval")
    flex_gain: float = _spec(5.0, check="non_negative")


@dataclass
class ObstacleSection:
    center: tuple = _spec((0.0, 0.0), "vec", n=2)
    radius: float = _spec(0.2, check="non_negative")
    velocity: tuple = _spec((0.0, 0.0), "vec", n=2)
    waypoints: list = _spec(None, "rows", "increasing", n=3)


@dataclass
class SurfaceSection:
    point: tuple = _spec((0.0, 0.0, 0.0), "vec", n=3)
    normal: tuple = _spec((-1.0, 0.0, 0.0), "vec", n=3)
    stiffness: float = _spec(1000.0, check="positive")


@dataclass
class WorldSection:
    obstacles: list = _spec([], "sections", section=ObstacleSection)
    surface: SurfaceSection = _spec(None, "section", section=SurfaceSection)
    force_script: list = _spec([], "rows", "increasing", n=7)
    force_noise: float = _spec(0.0, check="non_negative")


@dataclass
class SegmentSection:
    start: float = _spec(0.0, check="non_negative")
    end: float = _spec(1.0e9, check="non_negative")
    velocity: tuple = _spec((0.0,) * 6, "vec", n=6)


@dataclass
class GoalSection:
    time: float = _spec(0.0, check="non_negative")
    offset: tuple = _spec((0.0,) * 4, "vec", n=4)


@dataclass
class ReferenceSection:
    type: str = _spec("idle", "str", "reference_type")
    segments: list = _spec([], "sections", section=SegmentSection)
    goals: list = _spec([], "sections", section=GoalSection)


@dataclass
class ScheduleSection:
    time: float = _spec(0.0, check="non_negative")
    set: dict = _spec({}, "dict")


@dataclass
class ScenarioConfig:
    version: int = _spec(SCHEMA_VERSION, "int")
    name: str = _spec("scenario", "str")
    description: str = _spec("", "str")
    duration: float = _spec(1.0, check="positive")
    dt: float = _spec(0.01, check="positive")
    seed: int = _spec(0, "int")
    robot: RobotSection = _spec(RobotSection, "section", section=RobotSection)
    initial: InitialSection = _spec(InitialSection, "section", section=InitialSection)
    controller: ControllerSection = _spec(ControllerSection, "section",
                                          section=ControllerSection)
    plant: PlantSection = _spec(PlantSection, "section", section=PlantSection)
    world: WorldSection = _spec(WorldSection, "section", section=WorldSection)
    reference: ReferenceSection = _spec(ReferenceSection, "section",
                                        section=ReferenceSection)
    schedule: list = _spec([], "sections", section=ScheduleSection)


# ---------------------------------------------------------------- parsing

def _join(path, key):
    return f"{path}.{key}" if path else str(key)


def _number(value, path, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(path, "type", f"expected a number, got {value!r}")
    if integer:
        if isinstance(value, float) and not value.is_integer():
            raise ValidationError(path, "type", f"expected an integer, got {value!r}")
        return int(value)
    v = float(value)
    if not np.isfinite(v):
        raise ValidationError(path, "finite", "must be finite")
    return v


def _vector(value, path, n):
    if not isinstance(value, (list, tuple)):
        raise ValidationError(path, "type", f"expected a list of {n} numbers")
    if n is not None and len(value) != n:
        raise ValidationError(path, "length", f"expected {n} entries, got {len(value)}")
    return tuple(_number(v, _join(path, i)) for i, v in enumerate(value))


def _convert(meta, value, path):
    kind = meta["kind"]
    if kind == "float":
        return _number(value, path)
    if kind == "int":
        return _number(value, path, integer=True)
    if kind == "bool":
        if not isinstance(value, bool):
            raise ValidationError(path, "type", "expected true or false")
        return value
    if kind == "str":
        if not isinstance(value, str):
            raise ValidationError(path, "type", "expected a string")
        return value
    if kind == "vec":
        return _vector(value, path, meta["n"])
    if kind == "rows":
        if value is None:
            return None
        if not isinstance(value, list):
            raise ValidationError(path, "type", "expected a list of rows")
        return [list(_vector(r, _join(path, i), meta["n"])) for i, r in enumerate(value)]
    if kind == "section":
        return None if value is None else _build(meta["section"], value, path)
    if kind == "sections":
        if not isinstance(value, list):
            raise ValidationError(path, "type", "expected a list of objects")
        return [_build(meta["section"], v, _join(path, i)) for i, v in enumerate(value)]
    if kind == "dict":
        if not isinstance(value, dict):
            raise ValidationError(path, "type", "expected an object")
        return dict(value)
    raise AssertionError(kind)


def _build(cls, data, path):
    if not isinstance(data, dict):
        raise ValidationError(path or "<root>", "type", "expected an object")
    known = {f.name: f for f in fields(cls)}
    for key in data:
        if key not in known:
            raise ValidationError(_join(path, key), "unknown_key", "unknown field")
    kwargs = {}
    for name, f in known.items():
        if name not in data:
            continue
        p = _join(path, name)
        value = _convert(f.metadata, data[name], p)
        check = f.metadata["check"]
        if check is not None and value is not None:
            ok, msg = _CHECKS[check]
            if not ok(value):
                raise ValidationError(p, check, f"{value!r} {msg}")
        kwargs[name] = value
    return cls(**kwargs)


def _reject_duplicates(pairs):
    out = {}
    for key, value in pairs:
        if key in out:
            raise ParseError(f"duplicate key {key!r}")
        out[key] = value
    return out


def load_json(text):
    """Decode scenario text, rejecting duplicate keys."""
    try:
        return json.loads(text, object_pairs_hook=_reject_duplicates)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def _cross_checks(cfg):
    c = cfg.controller
    if cfg.version != SCHEMA_VERSION:
        raise ValidationError("version", "version", f"unsupported schema version {cfg.version}")
    if not c.cm_lower < c.cm_upper:
        raise ValidationError("controller.cm_lower", "ordered", "must be below cm_upper")
    if not c.extend_lower < c.extend_upper:
        raise ValidationError("controller.extend_lower", "ordered", "must be below extend_upper")
    if not c.deflect_lower_deg < c.deflect_upper_deg:
        raise ValidationError("controller.deflect_lower_deg", "ordered",
                              "must be below deflect_upper_deg")
    if c.mode == "LocoManipulation":
        for name in ("sigma_xy", "sigma_phi"):
            if not 0.0 < getattr(c, name) < 1.0:
                raise ValidationError(f"controller.{name}", "open_unit_interval",
                                      "LocoManipulation needs weighting factors in (0, 1)")
    if c.filter_cutoff * cfg.dt >= 1.0:
        raise ValidationError("controller.filter_cutoff", "stability",
                              "filter_cutoff * dt must stay below 1")
    steps = cfg.duration / cfg.dt
    if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
        raise ValidationError("duration", "integral_steps", "duration must be a multiple of dt")
    if cfg.reference.type == "drag" and not cfg.world.force_script:
        raise ValidationError("world.force_script", "required",
                              "a drag reference needs a force script")
    r = cfg.robot
    if len(r.arm_links) != 6:
        raise ValidationError("robot.arm_links", "length", "expected 6 link rows")
    if any(lo >= hi for lo, hi in zip(r.joint_lower_deg, r.joint_upper_deg)):
        raise ValidationError("robot.joint_lower_deg", "ordered",
                              "lower limits must be below upper limits")
    controller_fields = {f.name for f in fields(ControllerSection)}
    for i, entry in enumerate(cfg.schedule):
        for key in entry.set:
            section, _, name = key.partition(".")
            if section != "controller" or name not in controller_fields:
                raise ValidationError(f"schedule.{i}.set.{key}", "schedulable",
                                      "only controller.<field> entries can be scheduled")
    try:
        build_scenario(cfg)
    except ValueError as exc:
        raise ValidationError("<scenario>", "invalid", str(exc)) from None


def config_from_dict(data):
    cfg = _build(ScenarioConfig, data, "")
    _cross_checks(cfg)
    return cfg


def parse_config(text, overrides=()):
    """Parse and validate scenario text.

    Parameters
    ----------
    text : str
        JSON document.
    overrides : iterable of str
        ``dotted.path=value`` assignments applied before validation; values
        are decoded as JSON when possible, otherwise kept as strings.

    Raises
    ------
    ParseError
        Malformed JSON or a repeated key.
    ValidationError
        A field breaks a constraint.
    """
    data = load_json(text)
    if not isinstance(data, dict):
        raise ValidationError("<root>", "type", "expected an object")
    for item in overrides:
        apply_override(data, item)
    return config_from_dict(data)


def apply_override(data, item):
    key, sep, raw = item.partition("=")
    if not sep or not key:
        raise ValidationError(item, "override", "expected key=value")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    parts = key.split(".")
    node = data
    for i, part in enumerate(parts[:-1]):
        if isinstance(node, list):
            node = node[_index(node, part, parts[:i + 1])]
        else:
            node = node.setdefault(part, {})
    last = parts[-1]
    if isinstance(node, list):
        node[_index(node, last, parts)] = value
    elif isinstance(node, dict):
        node[last] = value
    else:
        raise ValidationError(key, "override", "path does not name an object field")


def _index(node, part, parts):
    try:
        idx = int(part)
        node[idx]
    except (ValueError, IndexError):
        raise ValidationError(".".join(parts), "override", "bad list index") from None
    return idx


def config_to_dict(cfg):
    return asdict(cfg)


def dump_config(cfg):
    """Canonical JSON text; ``parse_config(dump_config(c)) == c``."""
    return json.dumps(config_to_dict(cfg), indent=2) + "\n"


# ---------------------------------------------------------------- bundled

def bundled_scenarios():
    names = [p.name[:-5] for p in resources.files("mobile_wbc.scenarios").iterdir()
             if p.name.endswith(".json")]
    return sorted(names)


def bundled_scenario_text(name):
    path = resources.files("mobile_wbc.scenarios") / f"{name}.json"
    if not path.is_file():
        raise FileNotFoundError(f"no bundled scenario named {name!r}")
    return path.read_text(encoding="utf-8")


def load_bundled(name, overrides=()):
    return parse_config(bundled_scenario_text(name), overrides)


# ---------------------------------------------------------------- runtime

def build_model(r):
    return RobotModel(arm_links=np.array(r.arm_links, dtype=float),
                      joint_lower=np.radians(r.joint_lower_deg),
                      joint_upper=np.radians(r.joint_upper_deg),
                      base_radius=r.base_radius,
                      arm_mount_rotation=np.array(r.arm_mount_rotation, dtype=float),
                      arm_mount_translation=np.array(r.arm_mount_translation))


def build_controller(c, dt=0.01):
    return ControllerConfig(
        factors=WeightingFactors(c.sigma_xy, c.sigma_phi),
        cm_params=CmOptimizationParams(c.null_gain, c.cm_upper, c.cm_lower,
                                       c.jl_scale, c.grad_step),
        filter=FilterParams(c.filter_cutoff, c.filter_damping, dt),
        field=RepulsiveFieldParams(c.obstacle_gain, c.obstacle_threshold),
        workspace=LocalWorkspaceParams(c.extend_lower, c.extend_upper,
                                       np.radians(c.deflect_lower_deg),
                                       np.radians(c.deflect_upper_deg)),
        dmp=CdmpParams(c.dmp_tau, c.dmp_alpha_z, c.dmp_beta_z, c.dmp_alpha_s),
        hri_gain=c.hri_gain, hri_switch=c.hri_switch, comp_switch=c.comp_switch,
        selection=tuple(c.selection),
        force_gains=(c.stiffness_gain, c.stiffness_rate_gain, c.force_gain),
        desired_force=tuple(c.desired_force), mode=c.mode,
        filter_enabled=c.filter_enabled)


def build_world(w):
    obstacles = tuple(
        Obstacle(center=tuple(o.center), radius=o.radius, velocity=tuple(o.velocity),
                 waypoints=None if o.waypoints is None else tuple(map(tuple, o.waypoints)))
        for o in w.obstacles)
    surface = None
    if w.surface is not None:
        surface = ContactSurface(tuple(w.surface.point), tuple(w.surface.normal),
                                 w.surface.stiffness)
    return World(obstacles=obstacles, contact_surface=surface,
                 force_script=tuple(map(tuple, w.force_script)))


class _ReferenceProfile:
    """Time-indexed reference built from a :class:`ReferenceSection`."""

    def __init__(self, section):
        self.kind = section.type
        self.segments = [(s.start, s.end, np.array(s.velocity)) for s in section.segments]
        self.goals = sorted(((g.time, np.array(g.offset)) for g in section.goals),
                            key=lambda x: x[0])

    def __call__(self, t):
        v = np.zeros(6)
        if self.kind == "velocity":
            for start, end, vel in self.segments:
                if start - 1e-9 <= t < end - 1e-9:
                    v = v + vel
        offset = None
        if self.kind == "goals":
            offset = np.zeros(4)
            for when, off in self.goals:
                if t + 1e-9 >= when:
                    offset = off
        return Reference(velocity=v, goal_offset=offset)


def build_scenario(cfg):
    """Runtime :class:`Scenario` (model, controller, world, schedule)."""
    ctrl = build_controller(cfg.controller, cfg.dt)
    schedule = []
    section = cfg.controller
    for entry in sorted(cfg.schedule, key=lambda e: e.time):
        updates = {k.partition(".")[2]: v for k, v in entry.set.items()}
        data = asdict(section)
        data.update(updates)
        section = _build(ControllerSection, data, "schedule.controller")
        schedule.append((entry.time, build_controller(section, cfg.dt)))
    return Scenario(
        model=build_model(cfg.robot), controller=ctrl,
        plant=BasePlantParams(cfg.plant.bandwidth, cfg.plant.flex_freq,
                              cfg.plant.flex_damping, cfg.plant.flex_gain),
        world=build_world(cfg.world), base_pose=tuple(cfg.initial.base_pose),
        arm_joints=tuple(np.radians(cfg.initial.arm_joints_deg)),
        reference=_ReferenceProfile(cfg.reference), schedule=tuple(schedule),
        duration=cfg.duration, dt=cfg.dt, seed=cfg.seed,
        force_noise=cfg.world.force_noise, name=cfg.name)


def with_overrides(cfg, overrides):
    """Copy of ``cfg`` with ``key=value`` overrides applied and re-validated."""
    data = config_to_dict(cfg)
    for item in overrides:
        apply_override(data, item)
    return config_from_dict(data)
