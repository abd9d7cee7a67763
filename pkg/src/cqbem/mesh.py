"""Flat-panel triangulations of closed surfaces.

A mesh is a float64 vertex array plus an int32 triangle array whose rows
index vertices counter-clockwise as seen from outside, so panel normals
point into the exterior domain. Loading supports OFF and Gmsh v2 ASCII
files. Validation checks that the surface is a closed, consistently
oriented 2-manifold with non-degenerate panels, and re-orients a mesh
whose enclosed volume comes out negative by flipping every triangle.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from .errors import MeshFormatError, MeshTopologyError

logger = logging.getLogger(__name__)

_DEGENERATE_REL_AREA = 1e-12


class SurfaceMesh:
    """Immutable triangle mesh with cached panel geometry.

    Attributes:
        vertices: (nv, 3) float64 coordinates.
        triangles: (nt, 3) int32 vertex indices, CCW from outside.
        areas: (nt,) panel areas.
        normals: (nt, 3) unit outward normals (zero for degenerate panels).
        centroids: (nt, 3) panel centroids.
        diameters: (nt,) longest edge per panel.
    """

    def __init__(self, vertices: NDArray[np.float64], triangles: NDArray[np.int32]):
        vertices = np.ascontiguousarray(vertices, dtype=np.float64)
        triangles = np.ascontiguousarray(triangles, dtype=np.int32)
        if vertices.ndim != 2 or vertices.shape[1] != 3:
            raise MeshFormatError(f"vertex array must be (n, 3), got {vertices.shape}")
        if triangles.ndim != 2 or triangles.shape[1] != 3:
            raise MeshFormatError(f"triangle array must be (n, 3), got {triangles.shape}")
        if triangles.size and (triangles.min() < 0 or triangles.max() >= len(vertices)):
            raise MeshFormatError("triangle indices out of range")

        self.vertices = vertices
        self.triangles = triangles

        corners = vertices[triangles]  # (nt, 3, 3)
        e01 = corners[:, 1] - corners[:, 0]
        e02 = corners[:, 2] - corners[:, 0]
        cross = np.cross(e01, e02)
        two_area = np.linalg.norm(cross, axis=1)
        self.areas = 0.5 * two_area
        with np.errstate(invalid="ignore", divide="ignore"):
            normals = cross / two_area[:, None]
        normals[~np.isfinite(normals).all(axis=1)] = 0.0
        self.normals = normals
        self.centroids = corners.mean(axis=1)
        e12 = corners[:, 2] - corners[:, 1]
        edge_len = np.stack(
            [np.linalg.norm(e01, axis=1), np.linalg.norm(e02, axis=1), np.linalg.norm(e12, axis=1)]
        )
        self.diameters = edge_len.max(axis=0)
        self._edge_sq_sum = (edge_len**2).sum(axis=0)

        for arr in (self.vertices, self.triangles, self.areas, self.normals, self.centroids, self.diameters):
            arr.setflags(write=False)
        # scratch space for assembly plans keyed by quadrature settings
        self._plan_cache: dict = {}

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def corner_coords(self) -> NDArray[np.float64]:
        """Panel corner coordinates, shape (nt, 3, 3)."""
        return self.vertices[self.triangles]

    def diameter(self) -> float:
        """Diameter of the vertex cloud (exact, O(n^2) only for small meshes)."""
        v = self.vertices
        if len(v) <= 600:
            d = np.linalg.norm(v[:, None, :] - v[None, :, :], axis=-1)
            return float(d.max())
        lo, hi = v.min(axis=0), v.max(axis=0)
        return float(np.linalg.norm(hi - lo))

    def signed_volume(self) -> float:
        """Enclosed volume by the divergence theorem; negative when inward-oriented."""
        c = self.corner_coords()
        return float(np.einsum("ij,ij->", c[:, 0], np.cross(c[:, 1], c[:, 2])) / 6.0)

    def panel_qualities(self) -> NDArray[np.float64]:
        """Shape quality 4*sqrt(3)*area / sum(edge^2); 1 for equilateral, 0 degenerate."""
        with np.errstate(invalid="ignore", divide="ignore"):
            q = 4.0 * np.sqrt(3.0) * self.areas / self._edge_sq_sum
        return np.nan_to_num(q)

    def flipped(self) -> "SurfaceMesh":
        """Copy with every triangle's orientation reversed."""
        return SurfaceMesh(self.vertices, self.triangles[:, [0, 2, 1]])


@dataclass
class PanelGeometry:
    """Geometry of a single panel."""

    index: int
    corners: NDArray[np.float64]  # (3, 3)
    area: float
    normal: NDArray[np.float64]
    centroid: NDArray[np.float64]
    diameter: float


def panel_geometry(mesh: SurfaceMesh, i: int) -> PanelGeometry:
    """Return the cached geometry of panel ``i``."""
    if not 0 <= i < mesh.n_triangles:
        raise IndexError(f"panel index {i} out of range [0, {mesh.n_triangles})")
    return PanelGeometry(
        index=i,
        corners=mesh.corner_coords()[i],
        area=float(mesh.areas[i]),
        normal=mesh.normals[i],
        centroid=mesh.centroids[i],
        diameter=float(mesh.diameters[i]),
    )


@dataclass
class MeshDiagnostics:
    """Result of :func:`validate_mesh`.

    ``mesh`` is the validated mesh; when a global orientation flip was
    applied it is a new instance and ``flipped`` is True.
    """

    mesh: SurfaceMesh
    closed: bool
    oriented: bool
    flipped: bool
    signed_volume: float
    min_area: float
    max_area: float
    min_quality: float
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def summary(self) -> str:
        lines = [
            f"panels:          {self.mesh.n_triangles}",
            f"vertices:        {self.mesh.n_vertices}",
            f"closed:          {self.closed}",
            f"oriented:        {self.oriented}",
            f"flipped:         {self.flipped}",
            f"signed volume:   {self.signed_volume:.6g}",
            f"area range:      [{self.min_area:.6g}, {self.max_area:.6g}]",
            f"min quality:     {self.min_quality:.4g}",
            "status:          " + ("ok" if self.ok else "FAILED"),
        ]
        lines += [f"  - {f}" for f in self.failures]
        return "\n".join(lines)


def _edge_incidences(triangles: NDArray[np.int32]) -> dict[tuple[int, int], list[tuple[int, bool]]]:
    """Map undirected edge -> [(triangle, traversed_ascending)] incidences."""
    edges: dict[tuple[int, int], list[tuple[int, bool]]] = {}
    for t, (a, b, c) in enumerate(triangles):
        for u, v in ((a, b), (b, c), (c, a)):
            key = (u, v) if u < v else (v, u)
            edges.setdefault(key, []).append((t, u < v))
    return edges


def validate_mesh(mesh: SurfaceMesh, auto_orient: bool = True) -> MeshDiagnostics:
    """Check manifoldness, closedness, orientation and panel quality.

    A mesh that is consistently oriented but inside out (negative enclosed
    volume) is repaired by a global flip when ``auto_orient`` is set; the
    repaired mesh is returned in the diagnostics. A non-manifold edge is a
    hard failure and raises :class:`MeshTopologyError`.
    """
    failures: list[str] = []

    edges = _edge_incidences(mesh.triangles)
    over = [e for e, inc in edges.items() if len(inc) > 2]
    if over:
        raise MeshTopologyError(
            f"non-manifold surface: edge {over[0]} shared by {len(edges[over[0]])} panels"
            + (f" (+{len(over) - 1} more)" if len(over) > 1 else "")
        )

    boundary = [e for e, inc in edges.items() if len(inc) == 1]
    closed = not boundary
    if boundary:
        failures.append(f"surface not closed: {len(boundary)} boundary edges")

    # Opposite traversal directions on the two incident panels mean
    # consistent orientation across that edge.
    bad_orient = [e for e, inc in edges.items() if len(inc) == 2 and inc[0][1] == inc[1][1]]
    oriented = not bad_orient
    if bad_orient:
        failures.append(f"inconsistent orientation across {len(bad_orient)} edges")

    scale = float(mesh.diameters.max()) if mesh.n_triangles else 0.0
    degenerate = np.flatnonzero(mesh.areas <= _DEGENERATE_REL_AREA * scale**2)
    if degenerate.size:
        failures.append(f"degenerate panels: {degenerate[:8].tolist()}")

    flipped = False
    volume = mesh.signed_volume()
    if closed and oriented and not degenerate.size and volume < 0 and auto_orient:
        logger.info("mesh oriented inward (volume %.3g); flipping all panels", volume)
        mesh = mesh.flipped()
        volume = mesh.signed_volume()
        flipped = True
    if closed and oriented and not degenerate.size and volume <= 0:
        failures.append(f"non-positive enclosed volume {volume:.3g}")

    qualities = mesh.panel_qualities()
    return MeshDiagnostics(
        mesh=mesh,
        closed=closed,
        oriented=oriented,
        flipped=flipped,
        signed_volume=volume,
        min_area=float(mesh.areas.min()) if mesh.n_triangles else 0.0,
        max_area=float(mesh.areas.max()) if mesh.n_triangles else 0.0,
        min_quality=float(qualities.min()) if mesh.n_triangles else 0.0,
        failures=failures,
    )


# ---------------------------------------------------------------------------
# file loading


def _parse_off(text: str, path: str) -> tuple[NDArray, NDArray]:
    tokens: list[str] = []
    for line in text.splitlines():
        body = line.split("#", 1)[0].strip()
        if body:
            tokens.extend(body.split())
    if not tokens or tokens[0] != "OFF":
        raise MeshFormatError(f"{path}: missing OFF header")
    pos = 1
    try:
        nv, nf = int(tokens[pos]), int(tokens[pos + 1])
        pos += 3  # edge count ignored
        verts = np.array(tokens[pos : pos + 3 * nv], dtype=np.float64).reshape(nv, 3)
        pos += 3 * nv
        faces = []
        for _ in range(nf):
            k = int(tokens[pos])
            if k != 3:
                raise MeshFormatError(f"{path}: unsupported element with {k} vertices (triangles only)")
            faces.append([int(t) for t in tokens[pos + 1 : pos + 4]])
            pos += 1 + k
    except (ValueError, IndexError) as exc:
        raise MeshFormatError(f"{path}: malformed OFF data ({exc})") from exc
    return verts, np.array(faces, dtype=np.int32).reshape(nf, 3)


_GMSH_TRIANGLE = 2
_GMSH_IGNORED = {1, 15}  # line and point elements carry no surface data


def _parse_gmsh_v2(text: str, path: str) -> tuple[NDArray, NDArray]:
    lines = [ln.strip() for ln in text.splitlines()]
    sections: dict[str, list[str]] = {}
    name = None
    for ln in lines:
        if ln.startswith("$End"):
            name = None
        elif ln.startswith("$"):
            name = ln[1:]
            sections[name] = []
        elif name is not None and ln:
            sections[name].append(ln)

    fmt = sections.get("MeshFormat")
    if not fmt or not fmt[0].startswith("2"):
        version = fmt[0].split()[0] if fmt else "missing"
        raise MeshFormatError(f"{path}: unsupported Gmsh format version {version} (need 2.x ASCII)")

    try:
        node_lines = sections["Nodes"]
        n_nodes = int(node_lines[0])
        ids = np.empty(n_nodes, dtype=np.int64)
        coords = np.empty((n_nodes, 3), dtype=np.float64)
        for k, ln in enumerate(node_lines[1 : 1 + n_nodes]):
            parts = ln.split()
            ids[k] = int(parts[0])
            coords[k] = [float(x) for x in parts[1:4]]
        id_map = {int(i): k for k, i in enumerate(ids)}

        elem_lines = sections["Elements"]
        n_elems = int(elem_lines[0])
        tris = []
        for ln in elem_lines[1 : 1 + n_elems]:
            parts = [int(x) for x in ln.split()]
            etype, ntags = parts[1], parts[2]
            nodes = parts[3 + ntags :]
            if etype == _GMSH_TRIANGLE:
                tris.append([id_map[n] for n in nodes[:3]])
            elif etype not in _GMSH_IGNORED:
                raise MeshFormatError(f"{path}: unsupported element type {etype} (triangles only)")
    except (KeyError, ValueError, IndexError) as exc:
        if isinstance(exc, MeshFormatError):
            raise
        raise MeshFormatError(f"{path}: malformed Gmsh data ({exc})") from exc

    if not tris:
        raise MeshFormatError(f"{path}: no triangle elements found")
    return coords, np.array(tris, dtype=np.int32)


def load_mesh(path: str | Path, validate: bool = True) -> SurfaceMesh:
    """Load a closed surface mesh from an OFF or Gmsh v2 ASCII file.

    With ``validate`` (the default) the mesh is checked and auto-oriented;
    validation failures raise :class:`MeshError`. Pass ``validate=False``
    to obtain the raw mesh for diagnosis.
    """
    path = Path(path)
    text = path.read_text()
    suffix = path.suffix.lower()
    if suffix == ".off" or text.lstrip().startswith("OFF"):
        verts, tris = _parse_off(text, str(path))
    elif suffix == ".msh" or text.lstrip().startswith("$MeshFormat"):
        verts, tris = _parse_gmsh_v2(text, str(path))
    else:
        raise MeshFormatError(f"{path}: unrecognized mesh format (expected OFF or Gmsh v2 ASCII)")

    mesh = SurfaceMesh(verts, tris)
    if not validate:
        return mesh
    diag = validate_mesh(mesh)
    if not diag.ok:
        raise MeshTopologyError(f"{path}: invalid mesh: " + "; ".join(diag.failures))
    return diag.mesh


# ---------------------------------------------------------------------------
# point queries


def winding_number(mesh: SurfaceMesh, points: NDArray[np.float64]) -> NDArray[np.float64]:
    """Generalized winding number of each point: ~1 inside, ~0 outside.

    Sums the signed solid angle of every panel (van Oosterom-Strackee),
    divided by 4*pi. Robust for closed, outward-oriented meshes.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    corners = mesh.corner_coords()
    total = np.zeros(len(pts))
    # chunk over panels to bound the (npts, nt, 3) temporaries
    step = max(1, int(2e6 / max(len(pts), 1)))
    for lo in range(0, mesh.n_triangles, step):
        c = corners[lo : lo + step]
        a = c[None, :, 0, :] - pts[:, None, :]
        b = c[None, :, 1, :] - pts[:, None, :]
        d = c[None, :, 2, :] - pts[:, None, :]
        la = np.linalg.norm(a, axis=-1)
        lb = np.linalg.norm(b, axis=-1)
        ld = np.linalg.norm(d, axis=-1)
        numer = np.einsum("pti,pti->pt", a, np.cross(b, d))
        denom = (
            la * lb * ld
            + np.einsum("pti,pti->pt", a, b) * ld
            + np.einsum("pti,pti->pt", b, d) * la
            + np.einsum("pti,pti->pt", d, a) * lb
        )
        total += 2.0 * np.arctan2(numer, denom).sum(axis=1)
    return total / (4.0 * np.pi)


def points_inside(mesh: SurfaceMesh, points: NDArray[np.float64]) -> NDArray[np.bool_]:
    """True for points strictly inside the closed surface."""
    return winding_number(mesh, points) > 0.5


def surface_distance(mesh: SurfaceMesh, points: NDArray[np.float64]) -> NDArray[np.float64]:
    """Exact distance from each point to the triangulated surface."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    corners = mesh.corner_coords()
    best = np.full(len(pts), np.inf)
    step = max(1, int(1e6 / max(len(pts), 1)))
    for lo in range(0, mesh.n_triangles, step):
        c = corners[lo : lo + step]
        d = _point_triangle_distance(pts, c)
        best = np.minimum(best, d.min(axis=1))
    return best


def _point_triangle_distance(pts: NDArray, corners: NDArray) -> NDArray:
    """Distances (np, nt) from points to triangles (Eberly's region method)."""
    b = corners[None, :, 0, :]
    e0 = corners[None, :, 1, :] - b
    e1 = corners[None, :, 2, :] - b
    d = b - pts[:, None, :]
    a00 = np.einsum("pti,pti->pt", e0, e0)
    a01 = np.einsum("pti,pti->pt", e0, e1)
    a11 = np.einsum("pti,pti->pt", e1, e1)
    b0 = np.einsum("pti,pti->pt", e0, d)
    b1 = np.einsum("pti,pti->pt", e1, d)
    det = np.maximum(a00 * a11 - a01 * a01, 1e-300)
    s = a01 * b1 - a11 * b0
    t = a01 * b0 - a00 * b1
    # interior solution, then clamp to the triangle by solving on each edge
    s_in = s / det
    t_in = t / det
    inside = (s >= 0) & (t >= 0) & (s + t <= det)

    def clamp01(x):
        return np.clip(x, 0.0, 1.0)

    with np.errstate(invalid="ignore", divide="ignore"):
        # edge t=0: minimize over s
        s0 = clamp01(-b0 / np.maximum(a00, 1e-300))
        # edge s=0: minimize over t
        t1 = clamp01(-b1 / np.maximum(a11, 1e-300))
        # edge s+t=1: parametrize s=1-u, t=u
        u = clamp01((a00 - a01 + b1 - b0) / np.maximum(a00 - 2 * a01 + a11, 1e-300))

    def sqdist(ss, tt):
        return (
            a00 * ss * ss + 2 * a01 * ss * tt + a11 * tt * tt + 2 * b0 * ss + 2 * b1 * tt
            + np.einsum("pti,pti->pt", d, d)
        )

    q = np.minimum(np.minimum(sqdist(s0, 0.0), sqdist(0.0, t1)), sqdist(1 - u, u))
    q_in = sqdist(clamp01(s_in), clamp01(t_in))
    q = np.where(inside, np.minimum(q, q_in), q)
    return np.sqrt(np.maximum(q, 0.0))
