"""Compare the compiled kernel backend against the pure-python reference.

Assembles the single- and double-layer matrices at a handful of contour
frequencies with both backends, times the sweeps, and checks that the
entries agree to rounding. Run from the repository root:

    python3 benchmarks/bench_assembly.py --refinement 2 --quad-order 4
"""

import argparse
import sys
import time

import numpy as np

from cqbem import icosphere
from cqbem.cq import make_contour
from cqbem.kernels import AssemblyPlan, PotentialPlan, available_backends


def time_sweep(plan: AssemblyPlan, nodes, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        for s in nodes:
            plan.assemble_operators(s)
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--refinement", type=int, default=2,
                    help="icosphere subdivision level (default 2, 320 panels)")
    ap.add_argument("--quad-order", type=int, default=4)
    ap.add_argument("--nodes", type=int, default=6,
                    help="number of contour frequencies to assemble at")
    ap.add_argument("--repeats", type=int, default=3,
                    help="timing repeats, best of")
    args = ap.parse_args(argv)

    backends = available_backends()
    if "compiled" not in backends:
        print("compiled backend is not built; run pip install -e . first")
        return 1

    mesh = icosphere(args.refinement, radius=0.5)
    contour = make_contour("bdf2", 0.05, 40)
    nodes = contour.nodes[:: max(1, contour.n_distinct // args.nodes)][: args.nodes]
    obs = np.array([[2.0, 0.3, 0.1], [0.0, -1.8, 0.4]])

    print(f"mesh: {mesh.n_triangles} panels, {mesh.n_vertices} vertices; "
          f"quad order {args.quad_order}; {len(nodes)} frequencies")

    plans = {}
    for backend in ("reference", "compiled"):
        t0 = time.perf_counter()
        plans[backend] = AssemblyPlan(mesh, args.quad_order, backend=backend)
        print(f"{backend:>10}: plan built in {time.perf_counter() - t0:.2f} s "
              f"({plans[backend].cache_bytes() / 1e6:.1f} MB of quadrature tables)")

    worst = 0.0
    for s in nodes:
        v_ref, k_ref = plans["reference"].assemble_operators(s)
        v_com, k_com = plans["compiled"].assemble_operators(s)
        scale = max(np.abs(v_ref).max(), np.abs(k_ref).max())
        worst = max(worst,
                    np.abs(v_ref - v_com).max() / scale,
                    np.abs(k_ref - k_com).max() / scale)
    print(f"cross-backend agreement over {len(nodes)} frequencies: {worst:.2e}")

    rows = []
    for backend in ("reference", "compiled"):
        sweep = time_sweep(plans[backend], nodes, args.repeats)
        pot = PotentialPlan(mesh, obs, args.quad_order, backend=backend)
        pot.eval(nodes[0])
        t0 = time.perf_counter()
        for s in nodes:
            pot.eval(s)
        pot_time = time.perf_counter() - t0
        rows.append((backend, sweep / len(nodes), pot_time / len(nodes)))

    print(f"\n{'backend':>10} {'assemble V+K':>14} {'potential row':>14}")
    for backend, per_node, pot_node in rows:
        print(f"{backend:>10} {per_node * 1e3:>11.1f} ms {pot_node * 1e3:>11.1f} ms")
    ref, com = rows[0][1], rows[1][1]
    print(f"\nspeedup on operator assembly: {ref / com:.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
