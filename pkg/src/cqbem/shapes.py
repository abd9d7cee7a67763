"""Reference shapes for tests, examples and benchmarks."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .mesh import SurfaceMesh


def cube(center=(0.0, 0.0, 0.0), size: float = 1.0) -> SurfaceMesh:
    """Axis-aligned cube of edge length ``size``, 12 panels, outward normals."""
    c = np.asarray(center, dtype=np.float64)
    h = 0.5 * size
    verts = c + h * np.array(
        [
            [-1, -1, -1],
            [+1, -1, -1],
            [+1, +1, -1],
            [-1, +1, -1],
            [-1, -1, +1],
            [+1, -1, +1],
            [+1, +1, +1],
            [-1, +1, +1],
        ],
        dtype=np.float64,
    )
    quads = [
        (0, 3, 2, 1),  # z = -h
        (4, 5, 6, 7),  # z = +h
        (0, 1, 5, 4),  # y = -h
        (2, 3, 7, 6),  # y = +h
        (1, 2, 6, 5),  # x = +h
        (0, 4, 7, 3),  # x = -h
    ]
    tris = []
    for a, b, cc, d in quads:
        tris += [(a, b, cc), (a, cc, d)]
    return SurfaceMesh(verts, np.array(tris, dtype=np.int32))


def icosphere(level: int = 0, radius: float = 1.0, center=(0.0, 0.0, 0.0)) -> SurfaceMesh:
    """Icosahedron subdivided ``level`` times, vertices projected to the sphere.

    Panel count is 20 * 4**level (level 2 gives 320).
    """
    if level < 0:
        raise ValueError("subdivision level must be >= 0")
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array(
        [
            [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
            [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
            [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
        ],
        dtype=np.float64,
    )
    verts /= np.linalg.norm(verts[0])
    tris = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ],
        dtype=np.int64,
    )

    verts_list = [tuple(v) for v in verts]
    for _ in range(level):
        midpoint: dict[tuple[int, int], int] = {}

        def mid(a: int, b: int) -> int:
            key = (a, b) if a < b else (b, a)
            idx = midpoint.get(key)
            if idx is None:
                p = np.asarray(verts_list[a]) + np.asarray(verts_list[b])
                p /= np.linalg.norm(p)
                idx = len(verts_list)
                verts_list.append(tuple(p))
                midpoint[key] = idx
            return idx

        new_tris = []
        for a, b, c in tris:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new_tris += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        tris = np.array(new_tris, dtype=np.int64)

    verts = np.asarray(verts_list) * radius + np.asarray(center, dtype=np.float64)
    return SurfaceMesh(verts, tris.astype(np.int32))


def write_off(path: str | Path, mesh: SurfaceMesh) -> Path:
    """Write a mesh as an ASCII OFF file and return the path."""
    path = Path(path)
    lines = ["OFF", f"{mesh.n_vertices} {mesh.n_triangles} 0"]
    lines += [" ".join(format(x, ".17g") for x in v) for v in mesh.vertices]
    lines += ["3 " + " ".join(str(i) for i in t) for t in mesh.triangles]
    path.write_text("\n".join(lines) + "\n")
    return path
