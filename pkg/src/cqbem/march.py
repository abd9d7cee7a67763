"""Time marching for the sound-soft scattering problem.

Unknown is the density lam approximating the normal trace of the
scattered field; data is the incident trace phi sampled at the vertices.
With convolution weights W_V (single layer, tested against panel
constants) and W_K (double layer against vertex hats) the implicit step
reads

    W_V[0] lam[n] = 1/2 I phi[n] - sum_{m=0..n} W_K[m] phi[n-m]
                                 - sum_{m=1..n} W_V[m] lam[n-m]

where I is the panel-vertex coupling matrix. The scattered field at
observation points is recovered from the same contour sweep:

    u[n] = - sum_m W_S[m] lam[n-m] - sum_m W_D[m] phi[n-m].

Two interchangeable solvers cover this system. march() materializes the
weight matrices and runs the forward substitution literally, which is
transparent and cheap for short runs. spectral_solve() transforms the
damped data to the contour nodes, solves one complex system per node and
transforms back; it uses far less memory and stays stable for the
trapezoidal generator, whose marching recursion is fragile (details in
its docstring). run_simulation defaults to the spectral path.

Sign conventions were pinned down on the static sphere: with unit data
the single-layer equation returns unit density and the recovered
exterior field is the decaying monopole with flipped sign, as the
sound-soft condition demands.
"""

from __future__ import annotations

import os
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from numpy.typing import NDArray

from .cq import ContourPlan, make_contour, weights_from_half_spectrum
from .errors import MarchError
from .kernels import AssemblyPlan, PotentialPlan
from .mesh import SurfaceMesh
from .spaces import IncidentWave, assemble_coupling_matrix, build_space, sample_data


@dataclass
class OperatorWeights:
    """Convolution weights of all operator families on one contour."""

    contour: ContourPlan
    single_layer: NDArray[np.float64]            # (M, panels, panels)
    double_layer: NDArray[np.float64]            # (M, panels, vertices)
    pot_single: NDArray[np.float64] | None       # (M, points, panels)
    pot_double: NDArray[np.float64] | None       # (M, points, vertices)
    realness: dict[str, float] = field(default_factory=dict)
    sweep_seconds: float = 0.0
    fft_seconds: float = 0.0


def compute_weights(assembly: AssemblyPlan, contour: ContourPlan,
                    potentials: PotentialPlan | None = None,
                    n_weights: int | None = None,
                    max_workers: int | None = None,
                    progress=None) -> OperatorWeights:
    """Sweep the distinct contour nodes once and recover all weight families.

    Each node needs one assembly pass; nodes are independent, so they are
    fanned out over threads (the compiled sweep releases the GIL). Results
    land in preallocated slots, keeping the outcome independent of thread
    scheduling.
    """
    mesh = assembly.mesh
    nd = contour.n_distinct
    n_pan = mesh.n_triangles
    n_ver = mesh.n_vertices
    half_v = np.empty((nd, n_pan, n_pan), dtype=np.complex128)
    half_k = np.empty((nd, n_pan, n_ver), dtype=np.complex128)
    half_s = half_d = None
    if potentials is not None:
        n_obs = potentials.points.shape[0]
        half_s = np.empty((nd, n_obs, n_pan), dtype=np.complex128)
        half_d = np.empty((nd, n_obs, n_ver), dtype=np.complex128)

    done = 0

    def sweep(l: int) -> None:
        nonlocal done
        s = contour.nodes[l]
        half_v[l], half_k[l] = assembly.assemble_operators(s)
        if potentials is not None:
            half_s[l], half_d[l] = potentials.eval(s)
        done += 1
        if progress is not None and (done % max(1, nd // 10) == 0 or done == nd):
            progress(f"frequency sweep {done}/{nd}")

    t0 = time.perf_counter()
    workers = max_workers if max_workers is not None else min(os.cpu_count() or 1, 8)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(sweep, range(nd)))
    else:
        for l in range(nd):
            sweep(l)
    t1 = time.perf_counter()

    realness: dict[str, float] = {}
    w_v, realness["single_layer"] = weights_from_half_spectrum(contour, half_v, n_weights)
    del half_v
    w_k, realness["double_layer"] = weights_from_half_spectrum(contour, half_k, n_weights)
    del half_k
    w_s = w_d = None
    if potentials is not None:
        w_s, realness["pot_single"] = weights_from_half_spectrum(contour, half_s, n_weights)
        w_d, realness["pot_double"] = weights_from_half_spectrum(contour, half_d, n_weights)
    t2 = time.perf_counter()
    if progress is not None:
        progress("weights recovered")
    return OperatorWeights(contour, w_v, w_k, w_s, w_d, realness,
                           sweep_seconds=t1 - t0, fft_seconds=t2 - t1)


@dataclass
class MarchResult:
    density: NDArray[np.float64]     # (n_times, panels)
    max_residual: float
    factorization: str


def march(weights_v, weights_k, coupling, data,
          residual_tol: float = 1e-10, scaling: float = 1.0,
          progress=None) -> MarchResult:
    """Forward substitution through the block-lower-triangular system.

    scaling < 1 runs the recursion in exponentially damped variables:
    weights are multiplied by scaling^m, data rows by scaling^n, and the
    solved density is scaled back by scaling^(-n) at the end. In exact
    arithmetic the result is identical, but rounding perturbations now
    decay along the march instead of feeding marginally stable modes.
    The trapezoidal generator needs this: it maps the unit circle onto
    the imaginary axis, where the single-layer symbol has interior
    resonances, so its undamped recursion amplifies noise exponentially.
    Passing the weight-recovery contour radius is the natural choice.
    """
    weights_v = np.asarray(weights_v)
    weights_k = np.asarray(weights_k)
    data = np.asarray(data)
    n_times = data.shape[0]
    if weights_v.shape[0] < n_times or weights_k.shape[0] < n_times:
        raise MarchError(
            f"need at least {n_times} weight matrices, have "
            f"{weights_v.shape[0]} (single layer) and {weights_k.shape[0]} (double layer)"
        )
    if not 0.0 < scaling <= 1.0:
        raise MarchError(f"scaling must lie in (0, 1], got {scaling}")
    if scaling != 1.0:
        damp = scaling ** np.arange(n_times)
        weights_v = weights_v[:n_times] * damp[:, None, None]
        weights_k = weights_k[:n_times] * damp[:, None, None]
        data = data * damp[:, None]

    w0 = weights_v[0]
    try:
        factor = sla.cho_factor(w0)
        solve = lambda rhs: sla.cho_solve(factor, rhs)
        fact_name = "cholesky"
    except np.linalg.LinAlgError:
        factor = sla.lu_factor(w0)
        solve = lambda rhs: sla.lu_solve(factor, rhs)
        fact_name = "lu"
    w0_norm = float(np.linalg.norm(w0))

    # The double-layer history only involves known data, so it is one
    # batched convolution up front.
    rhs_fixed = 0.5 * data @ coupling.T
    for m in range(n_times):
        rhs_fixed[m:] -= data[: n_times - m] @ weights_k[m].T

    density = np.zeros((n_times, weights_v.shape[1]))
    worst = 0.0
    for n in range(n_times):
        rhs = rhs_fixed[n].copy()
        if n:
            rhs -= np.einsum("mjk,mk->j", weights_v[1 : n + 1], density[n - 1 :: -1])
        lam = solve(rhs)
        # One round of iterative refinement costs two triangular solves and
        # keeps the residual at rounding level even for harsh step matrices.
        lam += solve(rhs - w0 @ lam)
        denom = w0_norm * float(np.linalg.norm(lam)) + float(np.linalg.norm(rhs))
        if denom > 0.0:
            res = float(np.linalg.norm(w0 @ lam - rhs)) / denom
            worst = max(worst, res)
            if res > residual_tol:
                raise MarchError(
                    f"implicit solve at step {n} left relative residual {res:.3e} "
                    f"(tolerance {residual_tol:.1e}); the step matrix is too ill-conditioned"
                )
        density[n] = lam
        if progress is not None and n_times >= 20 and (n + 1) % max(1, n_times // 5) == 0:
            progress(f"march {n + 1}/{n_times}")
    if scaling != 1.0:
        density *= (1.0 / scaling) ** np.arange(n_times)[:, None]
    return MarchResult(density, worst, fact_name)


def postprocess_field(weights_s, weights_d, density, data) -> NDArray[np.float64]:
    """Scattered field at the observation points for all time steps."""
    n_times = density.shape[0]
    n_obs = weights_s.shape[1]
    u = np.zeros((n_times, n_obs))
    for m in range(n_times):
        u[m:] -= density[: n_times - m] @ weights_s[m].T
        u[m:] -= data[: n_times - m] @ weights_d[m].T
    return u


@dataclass
class SpectralResult:
    density: NDArray[np.float64]            # (n_times, panels)
    field: NDArray[np.float64] | None       # (n_times, points)
    max_residual: float                     # worst relative node-solve residual
    realness: dict[str, float]
    skipped_nodes: int = 0                  # nodes dropped for negligible data


def spectral_solve(assembly: AssemblyPlan, contour: ContourPlan, coupling, data,
                   potentials: PotentialPlan | None = None,
                   residual_tol: float = 1e-8,
                   node_skip_tol: float = 1e-14,
                   max_workers: int | None = None,
                   progress=None) -> SpectralResult:
    """Solve the convolution system through the damped frequency domain.

    The data is damped by radius^n, zero-padded to the contour length and
    transformed; one complex linear system per distinct node gives the
    density spectrum, and the inverse transform of the mirrored spectrum
    undoes the damping. Algebraically this solves the same lower-triangular
    system as march() up to an aliasing error of order radius^L, but every
    linear solve happens at a contour node with positive real part, where
    the single-layer operator is well conditioned. That detour matters for
    the trapezoidal generator: its pole at zeta = -1 sends part of the unit
    circle to arbitrarily large frequencies where the first-kind operator
    loses invertibility, so the time-marching recursion amplifies
    perturbations exponentially once the step count is large. The node
    solves never visit that region.

    Nodes whose transformed data falls below node_skip_tol times the peak
    are not solved at all. For smooth pulses the density spectrum at such
    nodes is negligible, while the frequencies involved can be so extreme
    (again the trapezoidal pole) that the assembled kernel is pure
    quadrature noise and a solve would return garbage amplified far above
    the signal. Pass node_skip_tol=0 to disable the filter.

    Memory stays small as well: no weight stacks are formed, only spectra
    of size (nodes, dofs).
    """
    data = np.asarray(data, dtype=np.float64)
    n_times = data.shape[0]
    L = contour.n_nodes
    if n_times > L:
        raise MarchError(f"{n_times} time rows need at least {n_times} contour nodes, have {L}")
    nd = contour.n_distinct
    damp = contour.radius ** np.arange(n_times)
    padded = np.zeros((L, data.shape[1]))
    padded[:n_times] = data * damp[:, None]
    data_hat = np.fft.fft(padded, axis=0)[:nd]

    n_pan = coupling.shape[0]
    dens_hat = np.zeros((nd, n_pan), dtype=np.complex128)
    field_hat = None
    if potentials is not None:
        field_hat = np.zeros((nd, potentials.points.shape[0]), dtype=np.complex128)
    residuals = np.zeros(nd)
    data_norms = np.linalg.norm(data_hat, axis=1)
    skip_below = node_skip_tol * float(data_norms.max())
    done = 0
    skipped = 0

    def solve_node(l: int) -> None:
        nonlocal done, skipped
        if data_norms[l] <= skip_below:
            skipped += 1
            done += 1
            return
        s = contour.nodes[l]
        v_mat, k_mat = assembly.assemble_operators(s)
        rhs = 0.5 * (coupling @ data_hat[l]) - k_mat @ data_hat[l]
        x = sla.solve(v_mat, rhs)
        norm_rhs = float(np.linalg.norm(rhs))
        if norm_rhs > 0.0:
            residuals[l] = float(np.linalg.norm(v_mat @ x - rhs)) / norm_rhs
        dens_hat[l] = x
        if potentials is not None:
            s_map, d_map = potentials.eval(s)
            field_hat[l] = -(s_map @ x) - d_map @ data_hat[l]
        done += 1
        if progress is not None and (done % max(1, nd // 10) == 0 or done == nd):
            progress(f"frequency solve {done}/{nd}")

    workers = max_workers if max_workers is not None else min(os.cpu_count() or 1, 8)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(solve_node, range(nd)))
    else:
        for l in range(nd):
            solve_node(l)

    worst = float(residuals.max())
    if worst > residual_tol:
        raise MarchError(
            f"frequency-domain solve left relative residual {worst:.3e} "
            f"(tolerance {residual_tol:.1e}); the operator is too ill-conditioned"
        )
    realness: dict[str, float] = {}
    density, realness["density"] = weights_from_half_spectrum(contour, dens_hat, n_times)
    field = None
    if potentials is not None:
        field, realness["field"] = weights_from_half_spectrum(contour, field_hat, n_times)
    return SpectralResult(density, field, worst, realness, skipped)


@dataclass
class RunReport:
    """Provenance and health record of one simulation."""

    method: str
    kappa: float
    n_steps: int
    n_nodes: int
    radius: float
    quad_order: int
    near_factor: float
    backend: str
    n_panels: int
    n_vertices: int
    pair_counts: dict[str, int]
    cache_bytes: int
    solver: str
    factorization: str
    realness: dict[str, float]
    solver_residual: float
    timings: dict[str, float]

    def as_dict(self) -> dict:
        return {
            "method": self.method,
            "kappa": self.kappa,
            "n_steps": self.n_steps,
            "n_nodes": self.n_nodes,
            "radius": self.radius,
            "quad_order": self.quad_order,
            "near_factor": self.near_factor,
            "backend": self.backend,
            "n_panels": self.n_panels,
            "n_vertices": self.n_vertices,
            "pair_counts": dict(self.pair_counts),
            "cache_bytes": self.cache_bytes,
            "solver": self.solver,
            "factorization": self.factorization,
            "realness": {k: float(v) for k, v in self.realness.items()},
            "solver_residual": self.solver_residual,
            "timings": {k: round(float(v), 6) for k, v in self.timings.items()},
        }

    def summary(self) -> str:
        total = sum(self.timings.values())
        lines = [
            f"method {self.method}, {self.n_steps} steps of {self.kappa:.6g} "
            f"({self.n_nodes} contour nodes, radius {self.radius:.6g})",
            f"mesh: {self.n_panels} panels, {self.n_vertices} vertices; "
            f"backend {self.backend}, quadrature order {self.quad_order}",
            f"pair cache {self.cache_bytes / 1e6:.1f} MB "
            + " ".join(f"{k}={v}" for k, v in sorted(self.pair_counts.items())),
            f"{self.solver} solver residual {self.solver_residual:.2e} "
            f"({self.factorization}), realness {max(self.realness.values()):.2e}",
            "timings [s]: " + " ".join(f"{k}={v:.2f}" for k, v in self.timings.items())
            + f" total={total:.2f}",
        ]
        return "\n".join(lines)


@dataclass
class SimulationResult:
    times: NDArray[np.float64]
    density: NDArray[np.float64]
    observation_points: NDArray[np.float64] | None
    field: NDArray[np.float64] | None
    report: RunReport


def run_simulation(mesh: SurfaceMesh, wave: IncidentWave, *, method: str,
                   kappa: float, n_steps: int, quad_order: int = 6,
                   near_factor: float = 2.0, backend: str = "auto",
                   observation_points=None, clearance: float | None = None,
                   n_nodes: int | None = None, radius: float | None = None,
                   solver: str = "spectral",
                   residual_tol: float | None = None,
                   max_workers: int | None = None,
                   progress=None) -> SimulationResult:
    """End-to-end solve: sample data, sweep the contour, solve, evaluate.

    solver selects between the frequency-domain path ("spectral", the
    default: one well-conditioned complex solve per contour node) and the
    time-stepping path ("march": explicit convolution weights and forward
    substitution). They agree up to an aliasing error of order radius^L;
    only the spectral path is safe for the trapezoidal generator at large
    step counts, see spectral_solve.

    The mesh is expected to be validated (closed, outward-oriented);
    load_mesh and the shape generators take care of that.
    """
    if solver not in ("spectral", "march"):
        raise MarchError(f"solver must be 'spectral' or 'march', got {solver!r}")
    timings: dict[str, float] = {}
    t0 = time.perf_counter()
    test_space = build_space(mesh, "P0")
    data_space = build_space(mesh, "P1")
    coupling = assemble_coupling_matrix(test_space, data_space)
    times = np.arange(n_steps + 1) * kappa
    data = sample_data(data_space, wave, times)
    timings["setup"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    plan_key = ("assembly", quad_order, near_factor, backend)
    assembly = mesh._plan_cache.get(plan_key)
    if assembly is None:
        assembly = AssemblyPlan(mesh, quad_order, near_factor, backend)
        mesh._plan_cache[plan_key] = assembly
    potentials = None
    obs = None
    if observation_points is not None:
        obs = np.atleast_2d(np.asarray(observation_points, dtype=np.float64))
        pot_key = ("potential", quad_order, clearance, backend, obs.tobytes())
        potentials = mesh._plan_cache.get(pot_key)
        if potentials is None:
            potentials = PotentialPlan(mesh, obs, quad_order, clearance, backend)
            mesh._plan_cache[pot_key] = potentials
    timings["plan"] = time.perf_counter() - t0

    contour = make_contour(method, kappa, n_steps, n_nodes, radius)
    if solver == "march" and contour.method == "trapezoidal":
        warnings.warn(
            "the time-marching recursion is unreliable for the trapezoidal "
            "generator at large step counts; the spectral solver handles "
            "those runs",
            stacklevel=2,
        )
    if solver == "spectral":
        t0 = time.perf_counter()
        solved = spectral_solve(
            assembly, contour, coupling, data, potentials,
            residual_tol=1e-8 if residual_tol is None else residual_tol,
            max_workers=max_workers, progress=progress,
        )
        timings["solve"] = time.perf_counter() - t0
        density = solved.density
        field_vals = solved.field
        realness = solved.realness
        factorization = "lu per node"
    else:
        weights = compute_weights(assembly, contour, potentials,
                                  max_workers=max_workers, progress=progress)
        timings["sweep"] = weights.sweep_seconds
        timings["weights"] = weights.fft_seconds
        t0 = time.perf_counter()
        stepped = march(weights.single_layer, weights.double_layer, coupling, data,
                        residual_tol=1e-10 if residual_tol is None else residual_tol,
                        scaling=contour.radius, progress=progress)
        timings["march"] = time.perf_counter() - t0
        density = stepped.density
        realness = weights.realness
        factorization = stepped.factorization

        field_vals = None
        t0 = time.perf_counter()
        if potentials is not None:
            field_vals = postprocess_field(weights.pot_single, weights.pot_double,
                                           density, data)
        timings["field"] = time.perf_counter() - t0

    solver_residual = solved.max_residual if solver == "spectral" else stepped.max_residual
    report = RunReport(
        method=contour.method, kappa=contour.kappa, n_steps=n_steps,
        n_nodes=contour.n_nodes, radius=contour.radius, quad_order=quad_order,
        near_factor=near_factor, backend=assembly.backend,
        n_panels=mesh.n_triangles, n_vertices=mesh.n_vertices,
        pair_counts=assembly.pair_counts(), cache_bytes=assembly.cache_bytes(),
        solver=solver, factorization=factorization, realness=realness,
        solver_residual=solver_residual, timings=timings,
    )
    return SimulationResult(times, density, obs, field_vals, report)
