"""Boundary-operator assembly at fixed complex frequency.

The Helmholtz-with-decay kernels share one structure: a frequency factor
(exp(-s r), optionally times 1 + s r) multiplied by frequency-independent
geometry. An AssemblyPlan classifies every panel pair once, lays down
quadrature distances and amplitudes in flat caches, and then each
frequency sweep is a single pass over those caches. The sweep runs in the
compiled extension when it is importable, with a numpy fallback that
produces bitwise-comparable results to rounding.

Pair taxonomy:

  coincident   same panel            custom 4D singular rule, single layer only
                                     (the normal projection vanishes on a flat panel)
  edge         two shared vertices   custom 4D singular rule
  vertex       one shared vertex     custom 4D singular rule
  near         disjoint but closer   tensor Gauss at elevated order
               than near_factor times the larger panel diameter
  far          everything else      tensor Gauss at base order
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from ..errors import ClearanceError, ConfigError
from ..mesh import SurfaceMesh, surface_distance
from ..quadrature import PairRule, coincident_rule, edge_rule, triangle_rule, vertex_rule
from . import reference

try:
    from . import _core
except ImportError:
    _core = None

FOUR_PI = 4.0 * np.pi


def available_backends() -> tuple[str, ...]:
    return ("compiled", "reference") if _core is not None else ("reference",)


def resolve_backend(name: str = "auto"):
    """Map a backend name to (label, reduce function)."""
    if name == "auto":
        name = "compiled" if _core is not None else "reference"
    if name == "compiled":
        if _core is None:
            raise ConfigError(
                "compiled backend requested but the extension is not built; "
                "reinstall without CQBEM_PURE=1 or use backend='reference'"
            )
        return name, _core.reduce_pairs
    if name == "reference":
        return name, reference.reduce_pairs
    raise ConfigError(f"unknown backend {name!r} (expected 'auto', 'compiled' or 'reference')")


@dataclass
class _PairGroup:
    """One homogeneous batch of panel pairs sharing a quadrature rule."""

    category: str
    pair_x: NDArray[np.int64]      # panel index of the outer (test) variable
    pair_y: NDArray[np.int64]      # panel index of the inner (trial) variable
    vids_x: NDArray[np.int64]      # global vertex ids, rule-local order, (n, 3)
    vids_y: NDArray[np.int64]
    r: NDArray[np.float64]         # flat (n * nnz,) point-pair distances
    a_v: NDArray[np.float64]       # weight / (4 pi r)
    a_ky: NDArray[np.float64]      # weight (x - y) . normal_y / (4 pi r^3)
    a_kx: NDArray[np.float64]      # weight (y - x) . normal_x / (4 pi r^3)
    hat_x: NDArray[np.float64]     # rule-level hat table (nnz, 3)
    hat_y: NDArray[np.float64]
    with_k: bool

    @property
    def n_pairs(self) -> int:
        return self.pair_x.shape[0]

    def nbytes(self) -> int:
        return self.r.nbytes + self.a_v.nbytes + self.a_ky.nbytes + self.a_kx.nbytes


def _cyclic_from(pos: int) -> list[int]:
    return [pos, (pos + 1) % 3, (pos + 2) % 3]


def _touch_permutations(tri_x, tri_y, n_shared: int):
    """Local vertex orders putting shared vertices first, consistently.

    Vertex contact: shared vertex becomes local 0 on both panels. Edge
    contact: the shared edge becomes local (0, 1) traversed in the same
    global order on both panels, which the edge rule's chart requires.
    """
    shared = sorted(set(tri_x) & set(tri_y))
    lx = list(tri_x)
    ly = list(tri_y)
    if n_shared == 1:
        return _cyclic_from(lx.index(shared[0])), _cyclic_from(ly.index(shared[0]))
    u, v = shared
    perm_x = [lx.index(u), lx.index(v), 3 - lx.index(u) - lx.index(v)]
    perm_y = [ly.index(u), ly.index(v), 3 - ly.index(u) - ly.index(v)]
    return perm_x, perm_y


def _classify_pairs(mesh: SurfaceMesh, near_factor: float):
    """Split all unordered panel pairs by contact and proximity."""
    tris = mesh.triangles
    n = mesh.n_triangles
    iu, ju = np.triu_indices(n, k=1)
    shared_counts = np.zeros(iu.shape[0], dtype=np.int64)
    chunk = 200_000
    for start in range(0, iu.shape[0], chunk):
        sl = slice(start, min(start + chunk, iu.shape[0]))
        eq = tris[iu[sl]][:, :, None] == tris[ju[sl]][:, None, :]
        shared_counts[sl] = eq.any(axis=2).sum(axis=1)

    touching = shared_counts > 0
    vertex_pairs = np.flatnonzero(shared_counts == 1)
    edge_pairs = np.flatnonzero(shared_counts == 2)
    apart = np.flatnonzero(~touching)

    # Proximity by minimum corner-to-corner distance, a cheap upper bound
    # on the true gap that is adequate for rule selection.
    corners = mesh.corner_coords()
    gap = np.empty(apart.shape[0])
    for start in range(0, apart.shape[0], chunk):
        sl = apart[start : start + chunk]
        d = corners[iu[sl]][:, :, None, :] - corners[ju[sl]][:, None, :, :]
        gap[start : start + sl.shape[0]] = np.sqrt((d * d).sum(axis=3)).min(axis=(1, 2))
    limit = near_factor * np.maximum(mesh.diameters[iu[apart]], mesh.diameters[ju[apart]])
    near_mask = gap < limit
    return {
        "vertex": (iu[vertex_pairs], ju[vertex_pairs]),
        "edge": (iu[edge_pairs], ju[edge_pairs]),
        "near": (iu[apart[near_mask]], ju[apart[near_mask]]),
        "far": (iu[apart[~near_mask]], ju[apart[~near_mask]]),
    }


def _tensor_group(mesh, pi, pj, q, category):
    """Cache for non-touching pairs: product Gauss rule of order q per panel."""
    bary, w1 = triangle_rule(q)
    nq = bary.shape[0]
    nnz = nq * nq
    corners = mesh.corner_coords()
    pts = np.einsum("zk,jkd->jzd", bary, corners)
    wts = 2.0 * mesh.areas[:, None] * w1[None, :]
    hat_x = np.ascontiguousarray(np.repeat(bary, nq, axis=0))
    hat_y = np.ascontiguousarray(np.tile(bary, (nq, 1)))

    n = pi.shape[0]
    r = np.empty(n * nnz)
    a_v = np.empty(n * nnz)
    a_ky = np.empty(n * nnz)
    a_kx = np.empty(n * nnz)
    chunk = max(1, 2_000_000 // nnz)
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        ii = pi[start:stop]
        jj = pj[start:stop]
        d = pts[ii][:, :, None, :] - pts[jj][:, None, :, :]
        rr = np.sqrt((d * d).sum(axis=3))
        weight = wts[ii][:, :, None] * wts[jj][:, None, :]
        dot_ny = np.einsum("cabd,cd->cab", d, mesh.normals[jj])
        dot_nx = np.einsum("cabd,cd->cab", d, mesh.normals[ii])
        inv_r3 = weight / (FOUR_PI * rr**3)
        sl = slice(start * nnz, stop * nnz)
        r[sl] = rr.reshape(-1)
        a_v[sl] = (weight / (FOUR_PI * rr)).reshape(-1)
        a_ky[sl] = (dot_ny * inv_r3).reshape(-1)
        a_kx[sl] = (-dot_nx * inv_r3).reshape(-1)
    return _PairGroup(
        category, pi, pj, mesh.triangles[pi].astype(np.int64), mesh.triangles[pj].astype(np.int64),
        r, a_v, a_ky, a_kx, hat_x, hat_y, with_k=True,
    )


def _singular_group(mesh, pi, pj, rule: PairRule):
    """Cache for touching pairs using one of the regularized 4D rules.

    Local vertex order is permuted so shared vertices sit where the rule
    expects them; the permuted global ids keep the hat scatter aligned.
    """
    corners = mesh.corner_coords()
    tris = mesh.triangles
    nnz = rule.w.shape[0]
    n = pi.shape[0]
    coincident = rule.category == "coincident"
    n_shared = {"coincident": 3, "edge": 2, "vertex": 1}[rule.category]

    r = np.empty(n * nnz)
    a_v = np.empty(n * nnz)
    a_ky = np.zeros(n * nnz) if not coincident else np.empty(0)
    a_kx = np.zeros(n * nnz) if not coincident else np.empty(0)
    vids_x = np.empty((n, 3), dtype=np.int64)
    vids_y = np.empty((n, 3), dtype=np.int64)
    for p in range(n):
        i, j = int(pi[p]), int(pj[p])
        if coincident:
            perm_x = perm_y = [0, 1, 2]
        else:
            perm_x, perm_y = _touch_permutations(tris[i], tris[j], n_shared)
        vx = corners[i][perm_x]
        vy = corners[j][perm_y]
        vids_x[p] = tris[i][perm_x]
        vids_y[p] = tris[j][perm_y]
        x = rule.bary_x @ vx
        y = rule.bary_y @ vy
        d = x - y
        rr = np.sqrt((d * d).sum(axis=1))
        weight = 4.0 * mesh.areas[i] * mesh.areas[j] * rule.w
        sl = slice(p * nnz, (p + 1) * nnz)
        r[sl] = rr
        a_v[sl] = weight / (FOUR_PI * rr)
        if not coincident:
            inv_r3 = weight / (FOUR_PI * rr**3)
            a_ky[sl] = (d @ mesh.normals[j]) * inv_r3
            a_kx[sl] = -(d @ mesh.normals[i]) * inv_r3
    if coincident:
        # Flat panels: (x - y) is orthogonal to the normal, the double-layer
        # self contribution vanishes identically.
        a_ky = np.zeros(0)
        a_kx = np.zeros(0)
    return _PairGroup(
        rule.category, pi, pj, vids_x, vids_y, r, a_v, a_ky, a_kx,
        np.ascontiguousarray(rule.bary_x), np.ascontiguousarray(rule.bary_y),
        with_k=not coincident,
    )


class AssemblyPlan:
    """Reusable frequency-sweep plan for one mesh and quadrature setup.

    Building the plan does all pair classification and geometry work;
    assemble_operators(s) is then comparatively cheap and can be called
    for as many frequencies as needed (from multiple threads, the caches
    are read-only).
    """

    def __init__(self, mesh: SurfaceMesh, quad_order: int = 6, near_factor: float = 2.0,
                 backend: str = "auto"):
        if quad_order < 2:
            raise ConfigError("quad_order must be at least 2")
        if near_factor < 0:
            raise ConfigError("near_factor must be nonnegative")
        self.mesh = mesh
        self.quad_order = quad_order
        self.near_factor = near_factor
        self.backend, self._reduce = resolve_backend(backend)

        buckets = _classify_pairs(mesh, near_factor)
        all_panels = np.arange(mesh.n_triangles, dtype=np.int64)
        self._groups: list[_PairGroup] = []
        if buckets["far"][0].size:
            self._groups.append(_tensor_group(mesh, *buckets["far"], quad_order, "far"))
        if buckets["near"][0].size:
            self._groups.append(_tensor_group(mesh, *buckets["near"], quad_order + 2, "near"))
        if buckets["edge"][0].size:
            self._groups.append(_singular_group(mesh, *buckets["edge"], edge_rule(quad_order)))
        if buckets["vertex"][0].size:
            self._groups.append(_singular_group(mesh, *buckets["vertex"], vertex_rule(quad_order)))
        self._groups.append(_singular_group(mesh, all_panels, all_panels, coincident_rule(quad_order)))

    def pair_counts(self) -> dict[str, int]:
        return {g.category: g.n_pairs for g in self._groups}

    def cache_bytes(self) -> int:
        return sum(g.nbytes() for g in self._groups)

    def assemble_operators(self, s: complex, need_k: bool = True):
        """Single-layer matrix (panels x panels) and double-layer matrix
        (panels x vertices) at complex frequency s, in one cache pass."""
        mesh = self.mesh
        v_mat = np.zeros((mesh.n_triangles, mesh.n_triangles), dtype=np.complex128)
        k_mat = np.zeros((mesh.n_triangles, mesh.n_vertices), dtype=np.complex128) if need_k else None
        s = complex(s)
        for g in self._groups:
            with_k = bool(need_k and g.with_k)
            a_ky = g.a_ky if with_k else g.a_v
            a_kx = g.a_kx if with_k else g.a_v
            v, ky, kx = self._reduce(g.r, g.a_v, a_ky, a_kx, g.hat_x, g.hat_y,
                                     s, g.n_pairs, with_k)
            if g.category == "coincident":
                v_mat[g.pair_x, g.pair_x] = v
            else:
                v_mat[g.pair_x, g.pair_y] = v
                v_mat[g.pair_y, g.pair_x] = v
            if with_k:
                for c in range(3):
                    np.add.at(k_mat, (g.pair_x, g.vids_y[:, c]), ky[:, c])
                    np.add.at(k_mat, (g.pair_y, g.vids_x[:, c]), kx[:, c])
        return (v_mat, k_mat) if need_k else (v_mat, None)

    def assemble_single_layer(self, s: complex) -> NDArray[np.complex128]:
        return self.assemble_operators(s, need_k=False)[0]

    def assemble_double_layer(self, s: complex) -> NDArray[np.complex128]:
        return self.assemble_operators(s, need_k=True)[1]


def default_clearance(mesh: SurfaceMesh) -> float:
    """Observation points should keep at least a mean panel diameter of
    distance from the surface; closer than that the plain Gauss rule on
    the potentials loses accuracy."""
    return float(mesh.diameters.mean())


def check_clearance(mesh: SurfaceMesh, points, clearance: float | None = None) -> float:
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if clearance is None:
        clearance = default_clearance(mesh)
    dist = surface_distance(mesh, pts)
    worst = int(np.argmin(dist))
    if dist[worst] < clearance:
        raise ClearanceError(
            f"observation point {pts[worst].tolist()} is {dist[worst]:.3g} from the surface, "
            f"closer than the clearance {clearance:.3g}; move it away or refine the mesh"
        )
    return float(dist[worst])


class PotentialPlan:
    """Layer-potential evaluation at fixed off-surface points.

    Same cache-and-sweep pattern as AssemblyPlan with (point, panel)
    pairs: eval(s) returns the single-layer map (points x panels) and the
    double-layer map (points x vertices).
    """

    def __init__(self, mesh: SurfaceMesh, points, quad_order: int = 6,
                 clearance: float | None = None, backend: str = "auto"):
        self.mesh = mesh
        self.points = np.atleast_2d(np.asarray(points, dtype=np.float64)).copy()
        self.quad_order = quad_order
        self.backend, self._reduce = resolve_backend(backend)
        check_clearance(mesh, self.points, clearance)

        bary, w1 = triangle_rule(quad_order)
        nq = bary.shape[0]
        corners = mesh.corner_coords()
        y = np.einsum("zk,jkd->jzd", bary, corners)
        wts = 2.0 * mesh.areas[:, None] * w1[None, :]

        n_pts = self.points.shape[0]
        n_pan = mesh.n_triangles
        d = self.points[:, None, None, :] - y[None, :, :, :]
        rr = np.sqrt((d * d).sum(axis=3))
        weight = np.broadcast_to(wts[None, :, :], rr.shape)
        dot_ny = np.einsum("pjzd,jd->pjz", d, mesh.normals)
        self._r = rr.reshape(-1).copy()
        self._a_s = (weight / (FOUR_PI * rr)).reshape(-1)
        self._a_d = (dot_ny * weight / (FOUR_PI * rr**3)).reshape(-1)
        self._zero = np.zeros_like(self._a_s)
        self._hat = np.ascontiguousarray(bary)
        self._pair_pt, self._pair_pan = np.divmod(np.arange(n_pts * n_pan), n_pan)

    def eval(self, s: complex):
        n_pts = self.points.shape[0]
        mesh = self.mesh
        v, ky, _ = self._reduce(self._r, self._a_s, self._a_d, self._zero,
                                self._hat, self._hat, complex(s),
                                n_pts * mesh.n_triangles, True)
        s_map = v.reshape(n_pts, mesh.n_triangles)
        d_map = np.zeros((n_pts, mesh.n_vertices), dtype=np.complex128)
        vids = mesh.triangles[self._pair_pan]
        for c in range(3):
            np.add.at(d_map, (self._pair_pt, vids[:, c].astype(np.int64)), ky[:, c])
        return s_map, d_map


def eval_single_layer_potential(mesh, points, s, quad_order: int = 6,
                                clearance: float | None = None):
    """One-shot single-layer potential map at complex frequency s."""
    return PotentialPlan(mesh, points, quad_order, clearance).eval(s)[0]


def eval_double_layer_potential(mesh, points, s, quad_order: int = 6,
                                clearance: float | None = None):
    """One-shot double-layer potential map at complex frequency s."""
    return PotentialPlan(mesh, points, quad_order, clearance).eval(s)[1]
