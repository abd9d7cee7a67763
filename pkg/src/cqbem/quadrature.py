"""Quadrature rules for Galerkin panel-pair integrals.

Separated pairs use a tensor Gauss rule on each triangle (q x q points via
a collapsed-square chart). Pairs that touch need regularizing coordinate
transforms: the pair domain is split into subcones around the singular set
and each piece is rescaled so that a 1/|x-y| kernel becomes bounded and
analytic, giving geometric convergence in q. Three cases are covered:

* coincident panels: 6 pieces, weight w*(1-w)^2*alpha on [0,1]^4,
* edge neighbours:   6 pieces, weight rho^2*(...) on [0,1]^4,
* vertex neighbours: 2 pieces, weight rho^3*tau on [0,1]^4.

Rules are emitted as flat arrays of barycentric node pairs plus weights.
The weights integrate over the product of *reference* triangles: multiply
by 4*area_x*area_y (pair rules) or 2*area (single-triangle rule) to get
surface integrals. Barycentric coordinates double as the nodal values of
the piecewise-linear hat functions, which the assembly stage exploits.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.typing import NDArray

__all__ = [
    "gauss01",
    "triangle_rule",
    "PairRule",
    "coincident_rule",
    "edge_rule",
    "vertex_rule",
    "regularized_pair_integral",
]


@lru_cache(maxsize=32)
def gauss01(q: int) -> tuple[NDArray, NDArray]:
    """Gauss-Legendre nodes and weights on [0, 1]."""
    if q < 1:
        raise ValueError("need at least one Gauss point")
    x, w = np.polynomial.legendre.leggauss(q)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=32)
def triangle_rule(q: int) -> tuple[NDArray, NDArray]:
    """Tensor rule on the reference triangle, q*q nodes.

    Returns (bary, w): barycentric coordinates (q^2, 3) and weights (q^2,)
    with sum(w) = 1/2. Surface integrals over a panel of area A are
    2*A*sum(w_i * f(x_i)). Built on the collapsed chart
    P(s, t) = s(1-t)*V0 + s*t*V1 + (1-s)*V2 with Jacobian proportional to s.
    """
    g, gw = gauss01(q)
    s, t = np.meshgrid(g, g, indexing="ij")
    ws, wt = np.meshgrid(gw, gw, indexing="ij")
    s, t = s.ravel(), t.ravel()
    bary = np.column_stack([s * (1.0 - t), s * t, 1.0 - s])
    w = (ws * wt).ravel() * s
    return bary, w


@dataclass(frozen=True)
class PairRule:
    """Quadrature nodes for one touching-pair category.

    ``bary_x``/``bary_y`` are (M, 3) barycentric coordinates in the local
    vertex order of each triangle; ``w`` sums to 1/4 (the squared measure
    of the reference triangle).
    """

    category: str
    bary_x: NDArray[np.float64]
    bary_y: NDArray[np.float64]
    w: NDArray[np.float64]

    def __len__(self) -> int:
        return len(self.w)


def _simplex_bary(a: NDArray, b: NDArray) -> NDArray:
    # chart x(a, b) = V0 + a(V1-V0) + b(V2-V1) on 0 <= b <= a <= 1
    return np.column_stack([1.0 - a, a - b, b])


def _grid4(q: int):
    g, gw = gauss01(q)
    u = np.stack(np.meshgrid(g, g, g, g, indexing="ij"), axis=-1).reshape(-1, 4)
    w = np.stack(np.meshgrid(gw, gw, gw, gw, indexing="ij"), axis=-1).reshape(-1, 4).prod(axis=1)
    return u[:, 0], u[:, 1], u[:, 2], u[:, 3], w


@lru_cache(maxsize=32)
def coincident_rule(q: int) -> PairRule:
    """Rule for x and y on the same panel (both triangles in identical order).

    Built by splitting the difference z = y - x into six cones around z = 0
    and rescaling each cone radially; all pieces share the weight
    w*(1-w)^2*alpha, which cancels the 1/|x-y| blow-up.
    """
    w, eta, alpha, beta, gwt = _grid4(q)
    base = gwt * w * (1.0 - w) ** 2 * alpha

    a0 = (1.0 - w) * alpha
    b0 = a0 * beta
    pieces = [
        (a0, b0, a0 + w, b0 + w * eta),
        (w * (1.0 - eta) + a0, b0, w * (1.0 - eta) + a0 + w * eta, b0 + w),
        (w + a0, b0, a0 + w * eta, b0 + w * eta),
    ]
    bx, by, ws = [], [], []
    for ax, bxx, ay, byy in pieces:
        for (a1, b1, a2, b2) in ((ax, bxx, ay, byy), (ay, byy, ax, bxx)):
            bx.append(_simplex_bary(a1, b1))
            by.append(_simplex_bary(a2, b2))
            ws.append(base)
    return PairRule("coincident", np.vstack(bx), np.vstack(by), np.concatenate(ws))


@lru_cache(maxsize=32)
def vertex_rule(q: int) -> PairRule:
    """Rule for panels sharing exactly one vertex.

    Both triangles must be passed with the shared vertex first. Radial
    scaling about the common point, split by which panel carries the
    larger radial coordinate.
    """
    rho, beta, tau, betap, gwt = _grid4(q)
    base = gwt * rho**3 * tau

    ax, bxx = rho, rho * beta
    ay, byy = rho * tau, rho * tau * betap
    bx = np.vstack([_simplex_bary(ax, bxx), _simplex_bary(ay, byy)])
    by = np.vstack([_simplex_bary(ay, byy), _simplex_bary(ax, bxx)])
    return PairRule("vertex", bx, by, np.concatenate([base, base]))


def _edge_chart_bary(s: NDArray, t: NDArray) -> NDArray:
    # chart P(s, t) = s(1-t)*V0 + s*t*V1 + (1-s)*V2; shared edge at s = 1
    return np.column_stack([s * (1.0 - t), s * t, 1.0 - s])


@lru_cache(maxsize=32)
def edge_rule(q: int) -> PairRule:
    """Rule for panels sharing an edge.

    Both triangles must be passed with the shared edge as their first two
    local vertices *in the same direction* (the rule identifies the edge
    traces of the two charts). The singular set (both points on the edge
    at equal edge parameter) is resolved by scaling the three small
    quantities (distance of x to the edge, distance of y to the edge,
    edge-parameter offset) and splitting by which one dominates.
    """
    rho, k1, k2, chi, gwt = _grid4(q)

    bx, by, ws = [], [], []

    def emit(p, qq, tau, tx_scale, swap):
        sx, sy = 1.0 - p, 1.0 - qq
        tx = tx_scale * chi
        ty = tx + tau
        wgt = gwt * rho**2 * tx_scale * sx * sy
        bxx = _edge_chart_bary(sx, tx)
        byy = _edge_chart_bary(sy, ty)
        if swap:
            bxx, byy = byy, bxx
        bx.append(bxx)
        by.append(byy)
        ws.append(wgt)

    for swap in (False, True):
        emit(rho, rho * k1, rho * k2, 1.0 - rho * k2, swap)  # x-height dominates
        emit(rho * k1, rho, rho * k2, 1.0 - rho * k2, swap)  # y-height dominates
        emit(rho * k1, rho * k2, rho, 1.0 - rho, swap)       # edge offset dominates
    return PairRule("edge", np.vstack(bx), np.vstack(by), np.concatenate(ws))


_RULES = {"coincident": coincident_rule, "edge": edge_rule, "vertex": vertex_rule}


def _align_shared(xverts: NDArray, yverts: NDArray, n_shared: int) -> tuple[list[int], list[int]]:
    """Local vertex orders putting shared corners first, matched by coordinates."""
    scale = max(np.abs(xverts).max(), np.abs(yverts).max(), 1.0)
    shared = [
        (i, j)
        for i in range(3)
        for j in range(3)
        if np.linalg.norm(xverts[i] - yverts[j]) <= 1e-12 * scale
    ]
    if len(shared) != n_shared:
        raise ValueError(f"expected {n_shared} shared corners, found {len(shared)}")
    px = [i for i, _ in shared]
    py = [j for _, j in shared]
    px += [i for i in range(3) if i not in px]
    py += [j for j in range(3) if j not in py]
    return px, py


def regularized_pair_integral(category, xverts, yverts, kernel, q: int = 6) -> complex:
    """Galerkin integral of ``kernel(x, y)`` over a touching panel pair.

    Args:
        category: "coincident", "edge" or "vertex".
        xverts, yverts: (3, 3) corner arrays; shared corners must coincide
            exactly (they are matched by coordinates).
        kernel: vectorized callable k(x, y) on (M, 3) point arrays.
        q: Gauss points per dimension of the transformed rule.

    Returns:
        The integral of N_i(x) k(x, y) over both panels with piecewise-
        constant N_i = 1 (pure kernel integral).
    """
    xverts = np.asarray(xverts, dtype=np.float64).reshape(3, 3)
    yverts = np.asarray(yverts, dtype=np.float64).reshape(3, 3)
    if category not in _RULES:
        raise ValueError(f"unknown pair category {category!r}")
    if category == "coincident":
        if not np.allclose(xverts, yverts):
            raise ValueError("coincident rule requires identical panels")
        px = py = [0, 1, 2]
    else:
        px, py = _align_shared(xverts, yverts, 2 if category == "edge" else 1)
    rule = _RULES[category](q)
    vx, vy = xverts[px], yverts[py]
    x = rule.bary_x @ vx
    y = rule.bary_y @ vy
    ax = 0.5 * np.linalg.norm(np.cross(vx[1] - vx[0], vx[2] - vx[0]))
    ay = 0.5 * np.linalg.norm(np.cross(vy[1] - vy[0], vy[2] - vy[0]))
    return complex(4.0 * ax * ay * np.sum(rule.w * kernel(x, y)))
