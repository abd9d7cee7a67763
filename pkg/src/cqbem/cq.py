"""Convolution quadrature: multistep generating functions, contour nodes
and weight recovery by scaled inverse FFT.

A time-domain convolution with transfer function F(s) is discretized as

    (F * g)(t_n)  ~  sum_{m=0..n} W[m] g[n - m],

where the weights are Taylor coefficients of F(delta(zeta) / kappa) and
delta is the generating polynomial of the underlying multistep method.
The coefficients are recovered numerically on a circle of radius rho < 1:

    W[n] = rho^(-n) / L * sum_l F(delta(rho zeta_L^(-l)) / kappa) zeta_L^(l n)

which is an inverse FFT of the node values. Since F maps conjugate
frequencies to conjugate values for real-valued kernels, only the first
L/2 + 1 nodes are evaluated and the rest mirrored.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .errors import ConfigError, ContourError

METHODS = ("backward_euler", "bdf2", "trapezoidal")

_ALIASES = {
    "backward_euler": "backward_euler",
    "be": "backward_euler",
    "euler": "backward_euler",
    "bdf1": "backward_euler",
    "bdf2": "bdf2",
    "trapezoidal": "trapezoidal",
    "trap": "trapezoidal",
}

_ORDERS = {"backward_euler": 1, "bdf2": 2, "trapezoidal": 2}


def parse_method(name: str) -> str:
    """Normalize a method name, accepting common short spellings."""
    try:
        return _ALIASES[name.strip().lower()]
    except KeyError:
        raise ConfigError(f"unknown time-stepping method {name!r}; choose from {METHODS}") from None


def method_order(method: str) -> int:
    """Classical convergence order of the multistep method."""
    return _ORDERS[parse_method(method)]


def generating_polynomial(method: str, zeta):
    """delta(zeta) of the multistep method, vectorized over zeta.

    The implicit Euler and BDF2 generators are polynomials; the
    trapezoidal generator is the rational 2 (1 - zeta) / (1 + zeta).
    """
    method = parse_method(method)
    zeta = np.asarray(zeta)
    if method == "backward_euler":
        return 1.0 - zeta
    if method == "bdf2":
        return 1.5 - 2.0 * zeta + 0.5 * zeta**2
    return 2.0 * (1.0 - zeta) / (1.0 + zeta)


def step_frequency(method: str, kappa: float, zeta):
    """The complex frequency delta(zeta) / kappa attached to step size kappa."""
    return generating_polynomial(method, zeta) / kappa


@dataclass(frozen=True)
class ContourPlan:
    """Frozen description of one weight-recovery contour.

    nodes holds the distinct frequencies s_l for l = 0 .. L/2; the second
    half of the circle is implied by conjugation.
    """

    method: str
    kappa: float
    n_steps: int
    n_nodes: int
    radius: float
    nodes: NDArray[np.complex128] = field(repr=False)

    @property
    def n_distinct(self) -> int:
        return self.n_nodes // 2 + 1


def make_contour(method: str, kappa: float, n_steps: int,
                 n_nodes: int | None = None, radius: float | None = None) -> ContourPlan:
    """Choose contour size and radius, and tabulate the distinct nodes.

    Defaults: L = 2 (n_steps + 1) nodes and radius eps^(1 / 2L), which
    balances aliasing of late weights against amplification of FFT
    rounding, both then near sqrt(eps).
    """
    method = parse_method(method)
    if kappa <= 0:
        raise ConfigError("step size kappa must be positive")
    if n_steps < 0:
        raise ConfigError("n_steps must be nonnegative")
    if n_nodes is None:
        n_nodes = 2 * (n_steps + 1)
    if n_nodes < 2 or n_nodes % 2:
        raise ConfigError(f"contour needs an even node count >= 2, got {n_nodes}")
    if n_nodes < n_steps + 2:
        raise ConfigError("contour too short: need n_nodes >= n_steps + 2 to avoid aliasing")
    if radius is None:
        radius = float(np.finfo(np.float64).eps) ** (1.0 / (2 * n_nodes))
    if not 0.0 < radius < 1.0:
        raise ContourError(f"contour radius must be in (0, 1), got {radius}")

    half = np.arange(n_nodes // 2 + 1)
    zeta = radius * np.exp(-2j * np.pi * half / n_nodes)
    nodes = step_frequency(method, kappa, zeta)
    if np.any(nodes.real <= 0.0):
        raise ContourError(
            "contour produced frequencies with nonpositive real part; "
            "the Laplace transforms are not defined there"
        )
    return ContourPlan(method, float(kappa), int(n_steps), int(n_nodes), float(radius), nodes)


def weights_from_half_spectrum(plan: ContourPlan, half_spectrum, n_weights: int | None = None,
                               imag_tol: float = 1e-8):
    """Recover real convolution weights from transfer values on the contour.

    half_spectrum has shape (L/2 + 1, ...) with entries F(s_l). Returns
    (weights, residue): weights is real with shape (n_weights, ...) and
    residue is the largest relative imaginary part discarded, which must
    stay below imag_tol or the spectrum was inconsistent with a real
    convolution kernel.

    Works column-chunked so operator-sized spectra never triple in memory.
    """
    half = np.asarray(half_spectrum, dtype=np.complex128)
    L = plan.n_nodes
    if half.shape[0] != plan.n_distinct:
        raise ContourError(
            f"half spectrum has {half.shape[0]} rows, contour expects {plan.n_distinct}"
        )
    if n_weights is None:
        n_weights = plan.n_steps + 1
    if n_weights > L:
        raise ContourError(f"cannot recover {n_weights} weights from {L} nodes")

    tail = half.shape[1:]
    cols = int(np.prod(tail, dtype=np.int64)) if tail else 1
    flat = half.reshape(half.shape[0], cols)
    out = np.empty((n_weights, cols))
    scale = plan.radius ** (-np.arange(n_weights))
    worst = 0.0
    chunk = max(1, 4_000_000 // max(L, 1))
    for start in range(0, cols, chunk):
        stop = min(start + chunk, cols)
        full = np.empty((L, stop - start), dtype=np.complex128)
        full[: L // 2 + 1] = flat[:, start:stop]
        full[L // 2 + 1 :] = np.conj(flat[L // 2 - 1 : 0 : -1, start:stop])
        w = np.fft.ifft(full, axis=0)[:n_weights]
        w *= scale[:, None]
        floor = max(np.abs(w.real).max(), 1e-300)
        worst = max(worst, float(np.abs(w.imag).max() / floor))
        out[:, start:stop] = w.real
    if worst > imag_tol:
        raise ContourError(
            f"weight recovery left relative imaginary residue {worst:.3e} "
            f"(tolerance {imag_tol:.1e}); transfer values are not conjugate-symmetric"
        )
    weights = out.reshape((n_weights,) + tail)
    return weights, worst


def scalar_weights(method: str, kappa: float, n_weights: int, transfer,
                   n_nodes: int | None = None, radius: float | None = None):
    """Convolution weights of a scalar transfer function F(s).

    Shares the operator code path: evaluate on the distinct half contour,
    mirror, inverse FFT.
    """
    plan = make_contour(method, kappa, n_weights - 1, n_nodes, radius)
    half = np.array([transfer(s) for s in plan.nodes], dtype=np.complex128)
    weights, _ = weights_from_half_spectrum(plan, half, n_weights)
    return weights


def discrete_convolution(weights, data):
    """Causal discrete convolution sum_{m<=n} W[m] data[n-m].

    weights (M, ...) and data (N, ...); missing weights beyond M are
    treated as zero. Utility for tests and small studies, not a hot path.
    """
    weights = np.asarray(weights)
    data = np.asarray(data)
    n = data.shape[0]
    if weights.ndim == 1 and data.ndim == 1:
        return np.convolve(weights, data)[:n]
    dtype = np.result_type(weights, data)
    if weights.ndim == 3:
        out = np.zeros((n, weights.shape[1]), dtype=dtype)
        for m in range(min(weights.shape[0], n)):
            out[m:] += data[: n - m] @ weights[m].T
    else:
        out = np.zeros(data.shape, dtype=dtype)
        for m in range(min(weights.shape[0], n)):
            out[m:] += weights[m] * data[: n - m]
    return out
