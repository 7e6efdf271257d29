"""Property-based checks of the library invariants."""
import numpy as np
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mobile_wbc.config import dump_config, parse_config
from mobile_wbc.controller import ControllerConfig, deactivation_sigma, workspace_factors
from mobile_wbc.coordination import (FilterParams, FilterState, compensate, lowpass_step,
                                     transition_alpha)
from mobile_wbc.dmp import (CdmpParams, CdmpState, CouplingInputs, RepulsiveFieldParams,
                            admittance_coupled_step, canonical_step, dmp_step,
                            obstacle_coupled_step, repulsive_force, stiffness_coupled_step)
from mobile_wbc.kinematics import (RobotModel, WholeBodyState, arm_jacobian, base_jacobian,
                                   forward_kinematics, rot_z, whole_body_jacobian,
                                   world_to_base_rotation)
from mobile_wbc.redundancy import (CmOptimizationParams, WeightingFactors, cm_gradient,
                                   movement_capability, null_space_projector,
                                   null_space_velocity, resolve_wln, weighting_matrix)
from mobile_wbc.sim import BasePlantParams, BasePlantState, base_plant_step

MODEL = RobotModel()
CM = CmOptimizationParams()
PROFILE = settings(max_examples=60, deadline=None,
                   suppress_health_check=[HealthCheck.too_slow])

inner = st.floats(0.05, 0.95)
joints = arrays(float, 6, elements=st.floats(-1.2, 1.2))
twist = arrays(float, 6, elements=st.floats(-1.0, 1.0))
planar = arrays(float, 3, elements=st.floats(-1.0, 1.0))
pose = st.tuples(st.floats(-3, 3), st.floats(-3, 3), st.floats(-np.pi, np.pi)).map(np.array)


def _state(q, p=np.zeros(3)):
    return WholeBodyState.from_configuration(p, q, MODEL)


def _well_conditioned(q):
    return np.linalg.svd(arm_jacobian(q, MODEL), compute_uv=False)[-1] > 1e-2


# kinematics ---------------------------------------------------------------

@PROFILE
@given(joints, st.integers(0, 5), st.integers(-3, 3))
def test_fk_periodic(q, joint, turns):
    q2 = q.copy()
    q2[joint] += 2 * np.pi * turns
    p1, R1 = forward_kinematics(q, MODEL)
    p2, R2 = forward_kinematics(q2, MODEL)
    assert np.allclose(p1, p2, atol=1e-9) and np.allclose(R1, R2, atol=1e-9)


@PROFILE
@given(joints, st.floats(-20, 20))
def test_rotations_orthonormal(q, phi):
    for R in (forward_kinematics(q, MODEL)[1], world_to_base_rotation(phi), rot_z(phi)):
        assert np.max(np.abs(R.T @ R - np.eye(3))) < 1e-12


@PROFILE
@given(arrays(float, 3, elements=st.floats(-5, 5)))
def test_base_jacobian_sparsity(p):
    assert np.count_nonzero(base_jacobian(p)) <= 7


# redundancy ---------------------------------------------------------------

@PROFILE
@given(joints, pose, twist, twist, inner, inner)
def test_wln_task_consistency(q, p, v, v0, sxy, sphi):
    assume(_well_conditioned(q))
    J = whole_body_jacobian(_state(q, p), MODEL)
    Q = weighting_matrix(WeightingFactors(sxy, sphi))
    for n0 in (None, null_space_velocity(v0, 0.1)):
        out = resolve_wln(v, J, Q, n0)
        assert np.linalg.norm(J @ out - v) < 1e-9


@PROFILE
@given(joints, pose, inner, inner)
def test_projector_idempotent(q, p, sxy, sphi):
    assume(_well_conditioned(q))
    J = whole_body_jacobian(_state(q, p), MODEL)
    N = null_space_projector(J, weighting_matrix(WeightingFactors(sxy, sphi)))
    assert np.max(np.abs(N @ N - N)) < 1e-9 and np.max(np.abs(J @ N)) < 1e-9


@PROFILE
@given(joints, pose, twist, inner, inner, st.integers(0, 2 ** 32 - 1))
def test_wln_weighted_norm_optimal(q, p, v, sxy, sphi, seed):
    assume(_well_conditioned(q))
    J = whole_body_jacobian(_state(q, p), MODEL)
    Q = weighting_matrix(WeightingFactors(sxy, sphi))
    W = np.linalg.inv(Q)
    V = resolve_wln(v, J, Q)
    N = null_space_projector(J, Q)
    base = 0.5 * V @ W @ V
    deltas = N @ np.random.default_rng(seed).normal(size=(9, 50))
    for d in deltas.T:
        assert base <= 0.5 * (V + d) @ W @ (V + d) + 1e-12


@PROFILE
@given(arrays(float, 6, elements=st.floats(-3.2, 3.2)))
def test_capability_bounds(q):
    cm = movement_capability(q, MODEL, CM)
    assert 0.0 <= cm.joint_limit_penalty < 1.0
    assert cm.capability >= 0.0


@PROFILE
@given(joints, st.integers(0, 5), st.booleans())
def test_capability_zero_at_limit(q, joint, upper):
    q = q.copy()
    q[joint] = (MODEL.joint_upper if upper else MODEL.joint_lower)[joint]
    assert movement_capability(q, MODEL, CM).capability == 0.0


@PROFILE
@given(joints)
def test_null_space_ascent(q):
    assume(_well_conditioned(q))
    g = cm_gradient(q, MODEL, CM)
    assume(np.linalg.norm(g) > 1e-6)
    J = whole_body_jacobian(_state(q), MODEL)
    Q = weighting_matrix(WeightingFactors(0.5, 0.5))
    v = resolve_wln(np.zeros(6), J, Q, null_space_velocity(g, 0.1))
    dt = 1e-4
    q1 = q + dt * np.linalg.solve(arm_jacobian(q, MODEL), v[:6])
    c0 = movement_capability(q, MODEL, CM).capability
    assert movement_capability(q1, MODEL, CM).capability > c0


# coordination -------------------------------------------------------------

@PROFILE
@given(joints, pose, planar, planar, twist, st.floats(0.0, 1.0))
def test_compensation_identities(q, p, vb, vb_flt, grad, alpha):
    assume(np.linalg.norm(grad) > 1e-3)
    st_ = _state(q, p)
    J = whole_body_jacobian(st_, MODEL)
    R = MODEL.mount_rotation6
    res = compensate(vb_flt - vb, J[:, 6:], R, grad, alpha)
    req = compensate(vb_flt - vb, J[:, 6:], R, grad, 0.0).arm_correction
    # ee_deviation is the removed component with its sign flipped
    assert np.allclose(res.arm_correction - res.ee_deviation, req, atol=1e-12)
    assert abs(grad @ res.arm_correction - (1 - alpha) * (grad @ req)) < 1e-9
    va = np.zeros(6)
    exact = J @ np.concatenate([va + req, vb_flt])
    assert np.allclose(exact, J @ np.concatenate([va, vb]), atol=1e-9)


@PROFILE
@given(st.floats(-1.0, 1.0), st.floats(0.001, 0.5), st.floats(0.001, 0.5))
def test_alpha_range_and_monotone(x, lo, gap):
    up = lo + gap
    a = transition_alpha(x, up, lo)
    assert 0.0 <= a <= 1.0
    assert transition_alpha(x + 0.01, up, lo) <= a
    assert transition_alpha(up, up, lo) == 0.0 and transition_alpha(lo, up, lo) == 1.0


@settings(max_examples=3, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0.5, 10.0))
def test_filter_bibo(seed, bound):
    rng = np.random.default_rng(seed)
    u = rng.uniform(-bound, bound, size=(100000, 3))
    fs, peak, params = FilterState(), 0.0, FilterParams()
    for row in u:
        fs, y = lowpass_step(fs, row, params)
        peak = max(peak, abs(y).max())
    # critically damped: the impulse response is non-negative with unit area
    assert peak <= bound * (1 + 1e-9)


# dmp ----------------------------------------------------------------------

@PROFILE
@given(arrays(float, 3, elements=st.floats(-2, 2)), arrays(float, 3, elements=st.floats(-2, 2)),
       st.floats(0.5, 2.0))
def test_goal_convergence(y0, g, tau):
    assume(np.linalg.norm(y0 - g) > 1e-3)
    p = CdmpParams(tau=tau)
    steppers = (lambda s: dmp_step(s, None, p, 0.01),
                lambda s: obstacle_coupled_step(s, np.zeros(3), None, p, 0.01),
                lambda s: stiffness_coupled_step(s, CouplingInputs(), p, 0.01),
                lambda s: admittance_coupled_step(s, CouplingInputs(), p, 0.01))
    for step in steppers:
        state = CdmpState.at_rest(y0, g)
        for _ in range(int(round(10 * tau / 0.01))):
            state = step(state)
        assert np.linalg.norm(state.y - g) < 1e-3 * np.linalg.norm(y0 - g)


@PROFILE
@given(st.floats(0.1, 100.0), st.floats(0.2, 5.0))
def test_phase_monotone(alpha_s, tau):
    p = CdmpParams(alpha_s=alpha_s, tau=tau)
    s = 1.0
    for _ in range(200):
        nxt = canonical_step(s, p, 0.01)
        assert 0.0 < nxt and (nxt < s or nxt == s == np.finfo(float).tiny)
        s = nxt


@PROFILE
@given(arrays(float, 2, elements=st.floats(-5, 5)), arrays(float, 2, elements=st.floats(-5, 5)))
def test_acceleration_coupling_superposition(a, b):
    p = CdmpParams(dims=2)

    def settle(c):
        s = CdmpState.at_rest(np.zeros(2))
        for _ in range(1500):
            s = obstacle_coupled_step(s, c, None, p, 0.01)
        return s.y

    assert np.allclose(settle(a + b), settle(a) + settle(b), atol=1e-9)


@PROFILE
@given(st.tuples(st.floats(-3, 3), st.floats(-3, 3)).map(np.array),
       st.tuples(st.floats(-3, 3), st.floats(-3, 3)).map(np.array))
def test_repulsion_zero_outside_threshold(base, obs):
    field = RepulsiveFieldParams()
    gap = np.linalg.norm(base - obs) - 0.2 - 0.3
    f = repulsive_force(base, [(obs, 0.2)], field, 0.3)
    if gap > field.threshold:
        assert np.all(f == 0.0)
    assert np.all(np.isfinite(f))


# controller ---------------------------------------------------------------

@PROFILE
@given(joints, twist, twist, twist, st.floats(-1, 1), st.floats(-1, 1))
def test_sigma_range(q, g1, g2, v, dr, pr):
    st_ = _state(q)
    cfg = ControllerConfig(mode="IntuitivePHRI", hri_switch=1)
    f_xy, f_phi, _, _ = workspace_factors(q, st_.ee_pose_in_base, MODEL, cfg)
    assert 0.0 <= f_xy <= 1.0 and 0.0 <= f_phi <= 1.0
    s_xy, s_phi = deactivation_sigma(f_xy, f_phi, (g1, g2), v, dr, pr)
    assert 0.0 <= s_xy <= 1.0 and 0.0 <= s_phi <= 1.0
    if dr < 0.0:
        assert s_xy == 1.0
    if pr < 0.0:
        assert s_phi == 1.0


# sim and config -----------------------------------------------------------

@PROFILE
@given(arrays(float, (30, 3), elements=st.floats(-1, 1)), st.floats(-10, 10))
def test_plant_scales_linearly(u, k):
    def drive(cmds):
        s, out = BasePlantState(), []
        for c in cmds:
            s, v, f = base_plant_step(c, s, BasePlantParams(), 0.01)
            out.append(np.concatenate([v, f]))
        return np.array(out)

    assert np.allclose(drive(k * u), k * drive(u), atol=1e-9)


@PROFILE
@given(st.sampled_from(["Locomotion", "Manipulation", "LocoManipulation", "IntuitivePHRI"]),
       inner, inner, st.floats(0.0, 1.0), st.integers(1, 500), st.integers(0, 10 ** 6),
       st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5), st.floats(0, 1)), max_size=3),
       st.booleans())
def test_config_round_trip(mode, sxy, sphi, kn, steps, seed, obstacles, flt):
    import json

    doc = {"version": 1, "duration": steps / 100, "seed": seed,
           "controller": {"mode": mode, "sigma_xy": sxy, "sigma_phi": sphi,
                          "null_gain": kn, "filter_enabled": flt},
           "world": {"obstacles": [{"center": [x, y], "radius": r} for x, y, r in obstacles]}}
    cfg = parse_config(json.dumps(doc))
    assert parse_config(dump_config(cfg)) == cfg
    assert dump_config(parse_config(dump_config(cfg))) == dump_config(cfg)
