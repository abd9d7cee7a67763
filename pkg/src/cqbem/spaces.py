"""Boundary element spaces, boundary data and the incident field.

Two spaces on the same triangulation: piecewise constants per panel (the
unknown density lives here) and continuous piecewise linears on vertices
(boundary data sampled by vertex interpolation). The coupling matrix
pairs the two; its (i, k) entry integrates the vertex-k hat function over
panel i, which is area_i / 3 for each corner of the panel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .errors import CqbemError
from .mesh import SurfaceMesh, points_inside


@dataclass(frozen=True)
class BoundarySpace:
    """A discrete function space on a surface mesh.

    kind "P0": one dof per panel. kind "P1": one dof per vertex,
    continuous piecewise-linear hat functions.
    """

    mesh: SurfaceMesh
    kind: str

    @property
    def n_dofs(self) -> int:
        return self.mesh.n_triangles if self.kind == "P0" else self.mesh.n_vertices

    def dof_positions(self) -> NDArray[np.float64]:
        """Representative point per dof: panel centroid (P0) or vertex (P1)."""
        return self.mesh.centroids if self.kind == "P0" else self.mesh.vertices


def build_space(mesh: SurfaceMesh, kind: str) -> BoundarySpace:
    """Create a P0 or P1 space on the mesh."""
    if kind not in ("P0", "P1"):
        raise ValueError(f"unknown space kind {kind!r} (expected 'P0' or 'P1')")
    return BoundarySpace(mesh, kind)


def assemble_coupling_matrix(test_space: BoundarySpace, data_space: BoundarySpace) -> NDArray[np.float64]:
    """Mass-type matrix <N_i, M_k> between panel constants and vertex hats.

    Row sums equal the panel areas (the hats partition unity).
    """
    if test_space.kind != "P0" or data_space.kind != "P1":
        raise CqbemError(
            f"coupling matrix needs (P0, P1) spaces, got ({test_space.kind}, {data_space.kind})"
        )
    if test_space.mesh is not data_space.mesh:
        raise CqbemError("coupling matrix requires both spaces on the same mesh")
    mesh = test_space.mesh
    out = np.zeros((mesh.n_triangles, mesh.n_vertices))
    third = mesh.areas / 3.0
    for local in range(3):
        np.add.at(out, (np.arange(mesh.n_triangles), mesh.triangles[:, local]), third)
    return out


@dataclass(frozen=True)
class CausalSignal:
    """Smooth causal pulse psi(t) = amplitude * (t/tau)^m * exp(-t/tau) for t > 0.

    Vanishes identically for t <= 0 together with its first m-1 derivatives,
    so boundary data switch on smoothly. Peak value amplitude * m^m e^-m
    at t = m * tau.
    """

    m: int = 9
    tau: float = 1.0
    amplitude: float = 1.0

    def __post_init__(self):
        if self.m < 2:
            raise ValueError("signal exponent m must be >= 2 for usable smoothness")
        if self.tau <= 0:
            raise ValueError("signal time scale tau must be positive")

    def __call__(self, t):
        t = np.asarray(t, dtype=np.float64)
        u = np.where(t > 0, t / self.tau, 0.0)
        return self.amplitude * u**self.m * np.exp(-u)

    def derivative(self, t, order: int):
        """Exact derivative of given order (0, 1 or 2)."""
        if order not in (0, 1, 2):
            raise ValueError(f"derivatives available up to order 2, requested {order}")
        t = np.asarray(t, dtype=np.float64)
        u = np.where(t > 0, t / self.tau, 0.0)
        decay = np.exp(-u)
        m = self.m
        if order == 0:
            poly = u**m
        elif order == 1:
            poly = (m * u ** (m - 1) - u**m) / self.tau
        else:
            poly = (m * (m - 1) * u ** (m - 2) - 2 * m * u ** (m - 1) + u**m) / self.tau**2
        return np.where(t > 0, self.amplitude * poly * decay, 0.0)

    def peak(self) -> float:
        return float(self.amplitude * self.m**self.m * np.exp(-self.m))


def eval_signal_derivatives(signal: CausalSignal, t, order: int = 2) -> NDArray[np.float64]:
    """Stack of derivatives [psi, psi', ..., psi^(order)] evaluated at t."""
    return np.stack([signal.derivative(t, k) for k in range(order + 1)])


@dataclass(frozen=True)
class IncidentWave:
    """Spherical pulse radiated from an interior point source.

    u_inc(x, t) = psi(t - |x - source|) / (4 pi |x - source|).
    """

    source: tuple[float, float, float]
    signal: CausalSignal

    def __call__(self, points, t):
        """Field values at points (n, 3) and times t (scalar or (nt,)): (nt, n)."""
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        r = np.linalg.norm(pts - np.asarray(self.source), axis=1)
        tt = np.atleast_1d(np.asarray(t, dtype=np.float64))
        return self.signal(tt[:, None] - r[None, :]) / (4.0 * np.pi * r[None, :])


def sample_data(data_space: BoundarySpace, wave: IncidentWave, times) -> NDArray[np.float64]:
    """Boundary data coefficients by vertex interpolation of the incident trace.

    Returns (n_times, n_vertices). The source must lie strictly inside the
    scatterer, otherwise the scattered-field setup does not apply.
    """
    if data_space.kind != "P1":
        raise CqbemError(f"boundary data live in the P1 space, got {data_space.kind}")
    src = np.asarray(wave.source, dtype=np.float64)
    if not points_inside(data_space.mesh, src[None, :])[0]:
        raise CqbemError(f"incident-wave source {src.tolist()} must lie strictly inside the surface")
    return wave(data_space.mesh.vertices, times)
