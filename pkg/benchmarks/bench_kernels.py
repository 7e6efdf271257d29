"""Compare the compiled and pure-Python kinematic kernels.

Run with ``python benchmarks/bench_kernels.py [--repeat N]``.  Prints the
best-of-N time per call for each kernel and the speed-up, then times one
bundled scenario end to end under each backend.
"""
import argparse
import time
import timeit

import numpy as np

from mobile_wbc import _backend, kinematics, redundancy
from mobile_wbc.config import build_scenario, load_bundled
from mobile_wbc.kinematics import REFERENCE_LINKS, RobotModel
from mobile_wbc.sim import run_scenario


def _cases():
    model = RobotModel()
    links = np.ascontiguousarray(REFERENCE_LINKS, dtype=float)
    lo, hi = model.joint_lower, model.joint_upper
    q = np.array([0.1, 0.5, -0.9, 0.3, 0.7, -0.2])
    return {
        "fk": lambda k: k.fk(q, links),
        "fk_jacobian": lambda k: k.fk_jacobian(q, links),
        "capability": lambda k: k.capability(q, links, lo, hi, 2e4),
        "capability_stencil": lambda k: k.capability_stencil(q, links, lo, hi, 2e4, 1e-5),
    }


def _per_call(fn, number, repeat):
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def _scenario_time(kernels, name):
    kinematics.kernels, redundancy.kernels = kernels, kernels
    scenario = build_scenario(load_bundled(name))
    start = time.perf_counter()
    run_scenario(scenario)
    return time.perf_counter() - start


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--number", type=int, default=2000)
    parser.add_argument("--scenario", default="trajectory_tracking")
    args = parser.parse_args()

    py, c = _backend.kernels_py, _backend.kernels_c
    if c is None:
        print("compiled extension not built; only the python kernels are available")
    print(f"{'kernel':<20} {'python us':>10} {'compiled us':>12} {'speed-up':>9}")
    for name, call in _cases().items():
        t_py = _per_call(lambda: call(py), args.number, args.repeat) * 1e6
        if c is None:
            print(f"{name:<20} {t_py:10.2f}")
            continue
        t_c = _per_call(lambda: call(c), args.number, args.repeat) * 1e6
        print(f"{name:<20} {t_py:10.2f} {t_c:12.2f} {t_py / t_c:8.1f}x")

    original = kinematics.kernels, redundancy.kernels
    try:
        t_py = _scenario_time(py, args.scenario)
        line = f"\nscenario {args.scenario}: python {t_py:.2f} s"
        if c is not None:
            t_c = _scenario_time(c, args.scenario)
            line += f", compiled {t_c:.2f} s ({t_py / t_c:.1f}x)"
        print(line)
    finally:
        kinematics.kernels, redundancy.kernels = original


if __name__ == "__main__":
    main()
