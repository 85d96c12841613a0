"""Compare the compiled kernels with the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Times constraint assembly, the QP projection and the Hausdorff distance on
fixed random inputs, then one full doorway trial with each backend.
"""

import argparse
import time

import numpy as np

from spgpnav import _fallback

try:
    from spgpnav import _core
except ImportError:
    _core = None


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def _inputs(seed=0, n=8, walls=6):
    rng = np.random.default_rng(seed)
    pos = rng.uniform(-4, 4, (n, 2))
    vel = rng.normal(0, 0.5, (n, 2))
    radii = np.full(n, 0.2)
    alphas = np.full(n, 0.5)
    seg_a = rng.uniform(-4, 4, (walls, 2))
    seg_b = seg_a + rng.uniform(-2, 2, (walls, 2))
    return (pos, vel, radii, alphas, np.zeros((0, 2)), np.zeros(0), seg_a, seg_b,
            np.full(walls, 0.1), 10.0, 0.02, 3.0, 1)


def _qp_problems(count=200, seed=1):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        n = int(rng.integers(2, 7))
        m = int(rng.integers(1, 3 * n))
        G = rng.normal(size=(m, n))
        b = rng.normal(size=m) + 0.5
        out.append((G, b, rng.normal(size=n)))
    return out


def _trial(backend):
    # swap the kernels in place for one end-to-end run
    from spgpnav import kernels
    from spgpnav.scenarios import build_scenario
    from spgpnav.simulator import run

    saved = kernels.assemble, kernels.solve_qp, kernels.hausdorff
    kernels.assemble, kernels.solve_qp, kernels.hausdorff = (
        backend.assemble, backend.solve_qp, backend.hausdorff)
    try:
        return run(build_scenario("doorway", 2), 0, True)[1].steps
    finally:
        kernels.assemble, kernels.solve_qp, kernels.hausdorff = saved


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    backends = [("python", _fallback)]
    if _core is not None:
        backends.append(("cython", _core))
    else:
        print("compiled extension not built; timing the fallback only")

    args_asm = _inputs()
    problems = _qp_problems()
    rng = np.random.default_rng(2)
    A = rng.normal(size=(200, 2))
    B = rng.normal(size=(200, 2))

    cases = {
        "assemble (8 agents, 6 walls) x100":
            lambda mod: [mod.assemble(*args_asm) for _ in range(100)],
        "solve_qp (200 problems)":
            lambda mod: [mod.solve_qp(G, b, u) for G, b, u in problems],
        "hausdorff (200 x 200) x20":
            lambda mod: [mod.hausdorff(A, B) for _ in range(20)],
        "doorway trial (2 agents)": _trial,
    }
    print(f"{'case':<36}" + "".join(f"{name:>12}" for name, _ in backends) + f"{'speedup':>10}")
    for label, fn in cases.items():
        times = [_best(lambda: fn(mod), args.repeat) for _, mod in backends]
        row = f"{label:<36}" + "".join(f"{t * 1e3:>10.2f}ms" for t in times)
        if len(times) == 2:
            row += f"{times[0] / times[1]:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
