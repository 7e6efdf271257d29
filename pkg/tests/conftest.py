import numpy as np
import pytest

from mobile_wbc import _backend, kinematics, redundancy
from mobile_wbc.config import build_scenario, bundled_scenarios, load_bundled, with_overrides
from mobile_wbc.kinematics import RobotModel, WholeBodyState
from mobile_wbc.sim import run_scenario

BACKENDS = ["python"] + (["compiled"] if _backend.kernels_c is not None else [])


@pytest.fixture(params=BACKENDS)
def backend(request, monkeypatch):
    """Run the test once per available kernel implementation."""
    k = _backend.kernels_py if request.param == "python" else _backend.kernels_c
    monkeypatch.setattr(kinematics, "kernels", k)
    monkeypatch.setattr(redundancy, "kernels", k)
    return request.param


@pytest.fixture
def model():
    return RobotModel()


def kkt_solve(J, Q, v, v0=None):
    """Dense KKT solution of min 1/2 (V-V0)' W (V-V0) s.t. J V = v, W = Q^-1."""
    W = np.linalg.inv(Q)
    v0 = np.zeros(J.shape[1]) if v0 is None else v0
    K = np.block([[W, J.T], [J, np.zeros((6, 6))]])
    rhs = np.concatenate([W @ v0, v])
    return np.linalg.solve(K, rhs)[:J.shape[1]]


def random_joints(rng, scale=1.2):
    """Joint vector well inside the reference limits."""
    return rng.uniform(-scale, scale, 6)


def random_state(rng, model, q=None):
    if q is None:
        q = random_joints(rng)
    pose = np.array([rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-np.pi, np.pi)])
    return WholeBodyState.from_configuration(pose, q, model)


_LOGS = {}


def scenario_log(name, overrides=()):
    """Run a bundled scenario once per session and cache the log."""
    key = (name, tuple(overrides))
    if key not in _LOGS:
        cfg = with_overrides(load_bundled(name), list(overrides))
        _LOGS[key] = run_scenario(build_scenario(cfg))
    return _LOGS[key]


@pytest.fixture(scope="session")
def bundled_names():
    return bundled_scenarios()


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[key])
