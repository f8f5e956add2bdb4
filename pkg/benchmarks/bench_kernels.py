"""Benchmark the compiled kernel core against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--elements N]

Times each batch kernel on representative Taylor-Hood-sized inputs and one
full velocity-step assembly per backend.  Requires the compiled extension
for the comparison; without it only the fallback column is reported.
"""

import argparse
import os
import time

import numpy as np

from boussinesq_afem.kernels import _fallback

try:
    from boussinesq_afem.kernels import _core
except ImportError:
    _core = None


def _time(fn, *args, repeat=5):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def bench_kernels(ne: int):
    rng = np.random.default_rng(0)
    nq, nl, nlp = 25, 6, 3
    gphys = rng.normal(size=(ne, nq, nl, 2))
    phi = rng.normal(size=(nq, nl))
    phi_p = rng.normal(size=(nq, nlp))
    conv = rng.normal(size=(ne, nq, 2))
    coef = rng.normal(size=(ne, nq))
    detw = rng.uniform(0.1, 1.0, size=(ne, nq))
    vals = rng.normal(size=(ne, nq, 2))

    cases = [
        ("grad_grad", (gphys, detw)),
        ("mass", (phi, detw)),
        ("scaled_mass", (phi, coef, detw)),
        ("transport", (phi, gphys, conv, detw)),
        ("transport_dual", (phi, gphys, conv, detw)),
        ("div_blocks", (phi_p, gphys, detw)),
        ("load", (phi, coef, detw)),
        ("sq_norm", (vals, detw)),
    ]
    print(f"\nkernel batches, {ne} elements x {nq} points x {nl} basis:")
    header = f"{'kernel':16s} {'fallback':>12s} {'compiled':>12s} {'speedup':>9s}"
    print(header)
    print("-" * len(header))
    for name, args in cases:
        args = tuple(np.ascontiguousarray(a) for a in args)
        t_fall = _time(getattr(_fallback, name), *args)
        if _core is not None:
            t_core = _time(getattr(_core, name), *args)
            print(f"{name:16s} {t_fall * 1e3:10.2f}ms {t_core * 1e3:10.2f}ms "
                  f"{t_fall / t_core:8.2f}x")
        else:
            print(f"{name:16s} {t_fall * 1e3:10.2f}ms {'n/a':>12s} {'':>9s}")


def bench_assembly(ne_target: int):
    from boussinesq_afem.adaptivity import mark
    from boussinesq_afem.assembly import assemble_oseen, family_spaces
    from boussinesq_afem.config import ProblemConfig
    from boussinesq_afem.estimator import compute_indicators
    from boussinesq_afem.mesh import bisect, build_initial_mesh
    from boussinesq_afem.solver import picard_solve
    from boussinesq_afem.spaces import FieldVec

    cfg = ProblemConfig(alpha=1.5)
    mesh = build_initial_mesh("square", 4)
    while mesh.n_elements < ne_target:
        spaces = family_spaces(mesh, cfg.element_family)
        state = picard_solve(mesh, spaces, cfg)
        indicators = compute_indicators(mesh, state, cfg)
        mesh = bisect(mesh, mark(indicators, 0.6))
    velocity, pressure, temperature = family_spaces(mesh, cfg.element_family)
    w = FieldVec.zeros(velocity)
    t_prev = FieldVec.zeros(temperature)
    t = _time(assemble_oseen, mesh, velocity, pressure, w, t_prev, cfg,
              repeat=3)
    backend = "compiled" if (_core is not None and os.environ.get(
        "BOUSSINESQ_AFEM_PURE_PY") != "1") else "fallback"
    print(f"\nfull velocity-step assembly on {mesh.n_elements} elements "
          f"({backend} backend active): {t * 1e3:.1f}ms")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--elements", type=int, default=4000)
    args = parser.parse_args()
    if _core is None:
        print("compiled kernels unavailable; showing fallback timings only")
    bench_kernels(args.elements)
    bench_assembly(min(args.elements, 3000))


if __name__ == "__main__":
    main()
