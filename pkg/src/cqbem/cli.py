"""Command line front end.

    cqbem run config.toml -o results/
    cqbem converge --method bdf2 --steps 16,32,64
    cqbem validate-mesh scatterer.off
    cqbem selftest

Exit codes: 0 success, 1 numerical or verification failure, 2 bad
usage, configuration or input files.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import load_config
from .cq import METHODS, parse_method, scalar_weights
from .errors import CqbemError, MarchError
from .io_csv import write_density_csv, write_field_csv, write_report_json
from .march import run_simulation
from .mesh import load_mesh, validate_mesh
from .verify import (manufactured_scenario, run_convergence_study,
                     run_self_convergence_study)


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    mesh = cfg.build_mesh()
    wave = cfg.build_wave()
    obs = np.asarray(cfg.observation_points) if cfg.observation_points else None
    progress = None if args.quiet else lambda msg: print(f"  {msg}", flush=True)
    result = run_simulation(
        mesh, wave, method=cfg.method, kappa=cfg.resolved_kappa, n_steps=cfg.n_steps,
        quad_order=cfg.quad_order, near_factor=cfg.near_factor, backend=cfg.backend,
        observation_points=obs, clearance=cfg.clearance,
        n_nodes=cfg.n_nodes, radius=cfg.contour_radius, solver=cfg.solver,
        progress=progress,
    )
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    write_density_csv(outdir / "density.csv", result.times, result.density)
    written = ["density.csv"]
    if result.field is not None:
        write_field_csv(outdir / "field.csv", result.times, result.observation_points,
                        result.field)
        written.append("field.csv")
    write_report_json(outdir / "report.json", result.report.as_dict())
    written.append("report.json")
    if not args.quiet:
        print(result.report.summary())
    print(f"wrote {', '.join(written)} to {outdir}")
    return 0


def _cmd_converge(args) -> int:
    steps = [int(tok) for tok in args.steps.split(",") if tok]
    scenario = manufactured_scenario(refinement=args.refinement, radius=args.radius,
                                     horizon=args.horizon, signal_tau=args.tau)
    progress = None if args.quiet else lambda msg: print(f"  {msg}", flush=True)
    runner = run_self_convergence_study if args.self_convergence else run_convergence_study
    study = runner(args.method, steps, scenario,
                   quad_order=args.quad_order, backend=args.backend,
                   progress=progress)
    print(study.summary())
    lower = study.expected_order - args.order_window
    upper = study.expected_order + args.order_window
    if lower <= study.observed_order <= upper:
        print(f"PASS: observed order {study.observed_order:.2f} within "
              f"[{lower:.2f}, {upper:.2f}]")
        return 0
    print(f"FAIL: observed order {study.observed_order:.2f} outside "
          f"[{lower:.2f}, {upper:.2f}]")
    return 1


def _cmd_validate_mesh(args) -> int:
    mesh = load_mesh(args.mesh, validate=False)
    diagnostics = validate_mesh(mesh, auto_orient=not args.no_orient)
    print(diagnostics.summary())
    return 0 if diagnostics.ok else 1


def _cmd_selftest(args) -> int:
    """Closed-form scalar convolution checks, no mesh involved."""
    kappa = 0.05
    n = 40
    steps = np.arange(n)
    failures = 0
    # Scalar transfers are free to evaluate, so a wide low-damping contour
    # keeps aliasing well below the tolerances.
    contour = {"n_nodes": 4 * (n + 1), "radius": 0.75}

    def check(label: str, got, want, tol: float) -> None:
        nonlocal failures
        got = np.asarray(got)
        want = np.asarray(want)
        err = float(np.abs(got - want).max() / np.abs(want).max())
        status = "PASS" if err <= tol else "FAIL"
        if status == "FAIL":
            failures += 1
        print(f"{status} {label}: relative deviation {err:.2e} (tol {tol:.0e})")

    check("backward_euler integrates 1/s to kappa steps",
          scalar_weights("backward_euler", kappa, n, lambda s: 1.0 / s, **contour),
          np.full(n, kappa), 1e-8)
    check("bdf2 integrates 1/s with geometric startup",
          scalar_weights("bdf2", kappa, n, lambda s: 1.0 / s, **contour),
          kappa * (1.0 - (1.0 / 3.0) ** (steps + 1)),
          1e-8)
    trap_exact = np.full(n, kappa)
    trap_exact[0] = kappa / 2
    check("trapezoidal integrates 1/s to half-weighted endpoints",
          scalar_weights("trapezoidal", kappa, n, lambda s: 1.0 / s, **contour),
          trap_exact, 1e-8)
    check("identity transfer gives a unit impulse",
          scalar_weights("bdf2", kappa, n, lambda s: 1.0, **contour),
          np.eye(n)[0], 1e-12)
    return 0 if failures == 0 else 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cqbem",
        description="transient acoustic scattering by boundary elements "
        "and convolution quadrature",
    )
    parser.add_argument("--version", action="version", version=f"cqbem {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="solve a configured problem")
    p_run.add_argument("config", help="TOML configuration file")
    p_run.add_argument("-o", "--output", default="cqbem-out", help="output directory")
    p_run.add_argument("-q", "--quiet", action="store_true")
    p_run.set_defaults(func=_cmd_run)

    p_conv = sub.add_parser("converge", help="time-refinement study on the "
                            "manufactured sphere problem")
    p_conv.add_argument("--method", required=True,
                        help=f"one of {', '.join(METHODS)}")
    p_conv.add_argument("--steps", required=True,
                        help="comma-separated increasing step counts, e.g. 16,32,64")
    p_conv.add_argument("--refinement", type=int, default=1)
    p_conv.add_argument("--radius", type=float, default=0.5)
    p_conv.add_argument("--horizon", type=float, default=None)
    p_conv.add_argument("--tau", type=float, default=None)
    p_conv.add_argument("--quad-order", type=int, default=6)
    p_conv.add_argument("--backend", default="auto")
    p_conv.add_argument("--order-window", type=float, default=0.3,
                        help="acceptable deviation from the expected order")
    p_conv.add_argument("--self-convergence", action="store_true",
                        help="measure order from rung differences instead of "
                        "the exact solution (cancels the spatial error floor)")
    p_conv.add_argument("-q", "--quiet", action="store_true")
    p_conv.set_defaults(func=_cmd_converge)

    p_mesh = sub.add_parser("validate-mesh", help="check a surface mesh file")
    p_mesh.add_argument("mesh")
    p_mesh.add_argument("--no-orient", action="store_true",
                        help="do not flip inward-oriented meshes")
    p_mesh.set_defaults(func=_cmd_validate_mesh)

    p_self = sub.add_parser("selftest", help="scalar convolution quadrature checks")
    p_self.set_defaults(func=_cmd_selftest)
    return parser


def cli_main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "method", None) is not None and args.command == "converge":
        try:
            args.method = parse_method(args.method)
        except CqbemError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
    try:
        return args.func(args)
    except MarchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except CqbemError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    sys.exit(cli_main())
