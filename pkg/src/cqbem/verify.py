"""Verification against a manufactured exterior solution.

A causal point source placed inside the scatterer radiates the incident
field. Sound-soft scattering then has a closed-form answer outside: the
scattered field is exactly the negated incident field (both solve the
wave equation with the same boundary trace and decay, so uniqueness of
the exterior problem forces them equal). Measuring the solver's field
against that mirror at a few exterior points exercises every stage of
the pipeline: assembly, weight recovery, marching and potentials.

Time refinement at fixed mesh should then show the multistep method's
classical order until the spatial error floor is reached.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .cq import method_order, parse_method
from .march import RunReport, SimulationResult, run_simulation
from .mesh import SurfaceMesh, validate_mesh
from .shapes import icosphere
from .spaces import CausalSignal, IncidentWave


@dataclass(frozen=True)
class Scenario:
    """A fully specified scattering problem with known exterior solution."""

    mesh: SurfaceMesh
    wave: IncidentWave
    observation_points: NDArray[np.float64]
    horizon: float


def manufactured_scenario(refinement: int = 2, radius: float = 0.5,
                          source=(0.1, 0.06, 0.04),
                          observation_points=((2.0, 0.3, 0.1),),
                          horizon: float | None = None,
                          signal_m: int = 9,
                          signal_tau: float | None = None) -> Scenario:
    """Icosphere scatterer with an off-center interior source.

    Defaults: unit-diameter sphere, horizon of four diameters, pulse time
    scale a few percent of the horizon so the wave rises, passes the
    observation points and decays well inside the time window.
    """
    mesh = icosphere(refinement, radius)
    validate_mesh(mesh)
    if horizon is None:
        horizon = 8.0 * radius
    if signal_tau is None:
        signal_tau = 0.0625 * horizon
    src = np.asarray(source, dtype=np.float64)
    if np.linalg.norm(src) >= radius:
        raise ValueError(f"source {source} is not inside the sphere of radius {radius}")
    obs = np.atleast_2d(np.asarray(observation_points, dtype=np.float64))
    wave = IncidentWave(tuple(src), CausalSignal(m=signal_m, tau=signal_tau))
    return Scenario(mesh, wave, obs, float(horizon))


def exact_scattered_field(wave: IncidentWave, points, times) -> NDArray[np.float64]:
    """The manufactured answer: minus the incident field, outside only."""
    return -wave(points, times)


def binomial_filter(trace: NDArray[np.float64]):
    """Three-point (1, 2, 1)/4 average along the time axis.

    Damps the alternating component that trapezoidal time stepping leaves
    in the solution while only perturbing smooth signals at second order.
    Returns the filtered interior samples and the matching index slice.
    """
    if trace.shape[0] < 3:
        raise ValueError("need at least three time samples to filter")
    inner = slice(1, trace.shape[0] - 1)
    filtered = 0.25 * (trace[:-2] + 2.0 * trace[1:-1] + trace[2:])
    return filtered, inner


def measure_field_error(result: SimulationResult, wave: IncidentWave,
                        averaged: bool = False) -> float:
    """Relative max-norm error of the observation trace.

    With averaged=True both computed and exact traces pass through the
    binomial filter first, so the comparison sees the smooth part of the
    discretization error.
    """
    if result.field is None:
        raise ValueError("simulation was run without observation points")
    exact = exact_scattered_field(wave, result.observation_points, result.times)
    computed = result.field
    if averaged:
        computed, _ = binomial_filter(computed)
        exact, _ = binomial_filter(exact)
    denom = float(np.abs(exact).max())
    if denom == 0.0:
        raise ValueError("exact field is identically zero on the trace; no scale for errors")
    return float(np.abs(computed - exact).max() / denom)


def estimate_order(kappas, errors, stall_ratio: float = 1.4) -> float:
    """Observed convergence order from the last refinement pair still
    improving by at least stall_ratio.

    Once time refinement hits the fixed spatial error floor the pairwise
    ratios collapse toward one; trailing stalled pairs say nothing about
    the time discretization and are skipped.
    """
    kappas = np.asarray(kappas, dtype=np.float64)
    errors = np.asarray(errors, dtype=np.float64)
    if kappas.shape[0] != errors.shape[0] or kappas.shape[0] < 2:
        raise ValueError("need matching kappa/error sequences with at least two entries")
    slopes = np.log(errors[:-1] / errors[1:]) / np.log(kappas[:-1] / kappas[1:])
    improving = np.flatnonzero(errors[:-1] / errors[1:] >= stall_ratio)
    pick = int(improving[-1]) if improving.size else slopes.shape[0] - 1
    return float(slopes[pick])


@dataclass
class ConvergenceStudy:
    method: str
    n_steps: list[int]
    kappas: NDArray[np.float64]
    errors: NDArray[np.float64]
    pair_orders: NDArray[np.float64]
    observed_order: float
    expected_order: int
    averaged: bool
    reports: list[RunReport] = field(default_factory=list)

    def summary(self) -> str:
        head = (
            f"{self.method}: expected order {self.expected_order}, "
            f"observed {self.observed_order:.2f}"
            + (" (on averaged trace)" if self.averaged else "")
        )
        lines = [head, f"{'steps':>8} {'kappa':>12} {'rel error':>12} {'order':>7}"]
        for i, n in enumerate(self.n_steps):
            order = f"{self.pair_orders[i - 1]:7.2f}" if i else " " * 7
            lines.append(f"{n:>8d} {self.kappas[i]:>12.5g} {self.errors[i]:>12.4e} {order}")
        return "\n".join(lines)


@dataclass
class SelfConvergenceStudy:
    """Order measurement from consecutive-rung differences.

    Comparing each solution with the next refinement on the shared coarse
    time grid cancels the fixed spatial error exactly, which otherwise
    floors fine-step errors and hides the time order. The difference
    between rungs N and 2N scales like kappa_N^p (times 1 - 2^-p), so
    ratios of consecutive differences still expose the order p.
    """

    method: str
    n_steps: list[int]
    kappas: NDArray[np.float64]
    diffs: NDArray[np.float64]
    pair_orders: NDArray[np.float64]
    observed_order: float
    expected_order: int
    averaged: bool
    finest_error: float
    density_diffs: NDArray[np.float64] = field(default_factory=lambda: np.empty(0))
    density_orders: NDArray[np.float64] = field(default_factory=lambda: np.empty(0))
    reports: list[RunReport] = field(default_factory=list)

    def summary(self) -> str:
        head = (
            f"{self.method} self-convergence: expected order {self.expected_order}, "
            f"observed {self.observed_order:.2f}"
            + (" (on averaged traces)" if self.averaged else "")
            + f"; finest rung vs exact {self.finest_error:.3e}"
        )
        lines = [head, f"{'steps':>8} {'kappa':>12} {'rung diff':>12} {'order':>7}"]
        for i, n in enumerate(self.n_steps[:-1]):
            order = f"{self.pair_orders[i - 1]:7.2f}" if i else " " * 7
            lines.append(f"{n:>8d} {self.kappas[i]:>12.5g} {self.diffs[i]:>12.4e} {order}")
        if self.density_diffs.size:
            diffs = " ".join(f"{d:.3e}" for d in self.density_diffs)
            orders = " ".join(f"{p:.2f}" for p in self.density_orders)
            lines.append(
                f"density rung diffs (relative to coarsest peak): {diffs}; "
                f"pair orders {orders}"
            )
        return "\n".join(lines)


def run_self_convergence_study(method: str, n_steps_list, scenario: Scenario | None = None,
                               quad_order: int = 6, backend: str = "auto",
                               averaged: bool | None = None, near_factor: float = 2.0,
                               max_workers: int | None = None,
                               progress=None) -> SelfConvergenceStudy:
    """Solve on a doubling ladder and difference neighbouring rungs.

    Step counts must double so the time grids nest and traces can be
    compared sample by sample without interpolation.
    """
    method = parse_method(method)
    if scenario is None:
        scenario = manufactured_scenario()
    if averaged is None:
        averaged = method == "trapezoidal"
    n_steps_list = [int(n) for n in n_steps_list]
    if len(n_steps_list) < 3:
        raise ValueError("need at least three rungs for one order estimate")
    if any(b != 2 * a for a, b in zip(n_steps_list, n_steps_list[1:])):
        raise ValueError("n_steps_list must double at every rung")

    traces = []
    densities = []
    reports = []
    results = []
    for n in n_steps_list:
        kappa = scenario.horizon / n
        if progress is not None:
            progress(f"ladder rung: {n} steps, kappa {kappa:.5g}")
        result = run_simulation(
            scenario.mesh, scenario.wave, method=method, kappa=kappa, n_steps=n,
            quad_order=quad_order, near_factor=near_factor, backend=backend,
            observation_points=scenario.observation_points,
            max_workers=max_workers, progress=progress,
        )
        traces.append(result.field)
        densities.append(result.density)
        reports.append(result.report)
        results.append(result)

    exact = exact_scattered_field(scenario.wave, scenario.observation_points,
                                  results[-1].times)
    scale = float(np.abs(exact).max())
    diffs = []
    for coarse, fine in zip(traces, traces[1:]):
        if averaged:
            a, _ = binomial_filter(coarse)
            b = binomial_filter(fine)[0][1::2]
        else:
            a = coarse
            b = fine[::2]
        diffs.append(float(np.abs(a - b).max() / scale))
    diffs = np.asarray(diffs)
    kappas = scenario.horizon / np.asarray(n_steps_list, dtype=np.float64)
    pair_orders = np.log2(diffs[:-1] / diffs[1:])
    observed = estimate_order(kappas[: len(diffs)], diffs)
    finest_error = measure_field_error(results[-1], scenario.wave, averaged)

    # The surface density gets the same rung differencing. Normalizing by
    # the coarsest rung keeps the report honest when a finer rung blows up
    # (the trapezoidal density does at large step counts, see march).
    def reduce(trace):
        if averaged:
            return binomial_filter(trace)[0]
        return trace

    dens_scale = float(np.abs(reduce(densities[0])).max())
    density_diffs = []
    for coarse, fine in zip(densities, densities[1:]):
        a = reduce(coarse)
        b = reduce(fine)[1::2] if averaged else fine[::2]
        density_diffs.append(float(np.abs(a - b).max() / dens_scale))
    density_diffs = np.asarray(density_diffs)
    density_orders = np.log2(density_diffs[:-1] / density_diffs[1:])

    return SelfConvergenceStudy(
        method=method, n_steps=n_steps_list, kappas=kappas, diffs=diffs,
        pair_orders=pair_orders, observed_order=observed,
        expected_order=method_order(method), averaged=averaged,
        finest_error=finest_error, density_diffs=density_diffs,
        density_orders=density_orders, reports=reports,
    )


def run_convergence_study(method: str, n_steps_list, scenario: Scenario | None = None,
                          quad_order: int = 6, backend: str = "auto",
                          averaged: bool | None = None, near_factor: float = 2.0,
                          max_workers: int | None = None, progress=None) -> ConvergenceStudy:
    """Solve the manufactured scenario on a ladder of time resolutions.

    The mesh stays fixed; only the step count changes, so the horizon is
    shared and errors are comparable. averaged=None applies the binomial
    filter exactly for the trapezoidal rule, which needs it.
    """
    method = parse_method(method)
    if scenario is None:
        scenario = manufactured_scenario()
    if averaged is None:
        averaged = method == "trapezoidal"
    n_steps_list = [int(n) for n in n_steps_list]
    if sorted(n_steps_list) != n_steps_list or len(set(n_steps_list)) != len(n_steps_list):
        raise ValueError("n_steps_list must be strictly increasing")

    errors = []
    reports = []
    kappas = []
    for n in n_steps_list:
        kappa = scenario.horizon / n
        if progress is not None:
            progress(f"ladder rung: {n} steps, kappa {kappa:.5g}")
        result = run_simulation(
            scenario.mesh, scenario.wave, method=method, kappa=kappa, n_steps=n,
            quad_order=quad_order, near_factor=near_factor, backend=backend,
            observation_points=scenario.observation_points,
            max_workers=max_workers, progress=progress,
        )
        errors.append(measure_field_error(result, scenario.wave, averaged))
        reports.append(result.report)
        kappas.append(kappa)

    kappas = np.asarray(kappas)
    errors = np.asarray(errors)
    pair_orders = np.log(errors[:-1] / errors[1:]) / np.log(kappas[:-1] / kappas[1:])
    observed = estimate_order(kappas, errors)
    return ConvergenceStudy(
        method=method, n_steps=n_steps_list, kappas=kappas, errors=errors,
        pair_orders=pair_orders, observed_order=observed,
        expected_order=method_order(method), averaged=averaged, reports=reports,
    )
