"""Mesh construction, validation, file formats and point queries."""

import numpy as np
import pytest

from cqbem import (
    MeshFormatError,
    MeshTopologyError,
    SurfaceMesh,
    cube,
    icosphere,
    load_mesh,
    points_inside,
    surface_distance,
    validate_mesh,
    winding_number,
    write_off,
)
from cqbem.mesh import panel_geometry


@pytest.fixture
def box():
    return cube(size=2.0)


def test_cube_counts_and_volume(box):
    assert box.n_vertices == 8
    assert box.n_triangles == 12
    assert box.signed_volume() == pytest.approx(8.0)
    assert box.areas.sum() == pytest.approx(24.0)


def test_cube_normals_point_outward(box):
    # centroid-to-normal alignment: outward means positive dot product
    # with the direction away from the body center
    dots = np.einsum("ij,ij->i", box.normals, box.centroids)
    assert (dots > 0).all()


def test_icosphere_refinement_quadruples_panels():
    for level, n in ((0, 20), (1, 80), (2, 320)):
        mesh = icosphere(level, radius=0.5)
        assert mesh.n_triangles == n
        radii = np.linalg.norm(mesh.vertices, axis=1)
        np.testing.assert_allclose(radii, 0.5, rtol=1e-12)


def test_icosphere_volume_approaches_sphere():
    exact = 4.0 / 3.0 * np.pi * 0.5**3
    errs = [abs(icosphere(level, 0.5).signed_volume() - exact) for level in (0, 1, 2)]
    assert errs[0] > errs[1] > errs[2]
    # the inscribed polyhedron converges at second order: one refinement
    # shrinks the deficit by about 4x
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.3)
    assert errs[2] < 0.05 * exact


def test_panel_geometry_matches_arrays(box):
    geo = panel_geometry(box, 3)
    assert geo.index == 3
    assert geo.area == pytest.approx(box.areas[3])
    np.testing.assert_array_equal(geo.corners, box.corner_coords()[3])
    with pytest.raises(IndexError):
        panel_geometry(box, 12)


def test_validate_accepts_good_mesh(box):
    diag = validate_mesh(box)
    assert diag.ok
    assert diag.closed and diag.oriented and not diag.flipped
    assert "ok" in diag.summary()


def test_validate_flips_inverted_mesh(box):
    inverted = box.flipped()
    assert inverted.signed_volume() == pytest.approx(-8.0)
    diag = validate_mesh(inverted)
    assert diag.ok and diag.flipped
    assert diag.mesh.signed_volume() == pytest.approx(8.0)
    # and without auto-orient it is reported as a failure
    diag2 = validate_mesh(inverted, auto_orient=False)
    assert not diag2.ok


def test_validate_reports_open_surface():
    verts = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=float)
    tris = np.array([[0, 1, 2], [0, 1, 3]])  # two panels, same edge direction
    diag = validate_mesh(SurfaceMesh(verts, tris), auto_orient=False)
    assert not diag.ok
    assert any("not closed" in f for f in diag.failures)
    assert any("orientation" in f for f in diag.failures)


def test_validate_rejects_nonmanifold():
    verts = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1], [0, 0, -1]], dtype=float)
    tris = np.array([[0, 1, 2], [0, 1, 3], [0, 1, 4]])
    with pytest.raises(MeshTopologyError, match="non-manifold"):
        validate_mesh(SurfaceMesh(verts, tris))


def test_constructor_rejects_bad_indices():
    verts = np.zeros((3, 3))
    with pytest.raises(MeshFormatError, match="out of range"):
        SurfaceMesh(verts, np.array([[0, 1, 3]]))


def test_arrays_are_immutable(box):
    with pytest.raises(ValueError):
        box.vertices[0, 0] = 99.0


def test_off_roundtrip(tmp_path, box):
    path = write_off(tmp_path / "box.off", box)
    again = load_mesh(path)
    np.testing.assert_allclose(again.vertices, box.vertices)
    np.testing.assert_array_equal(again.triangles, box.triangles)


def test_off_rejects_quad_elements(tmp_path):
    path = tmp_path / "quad.off"
    path.write_text("OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n")
    with pytest.raises(MeshFormatError, match="unsupported element"):
        load_mesh(path)


def test_off_rejects_garbage(tmp_path):
    path = tmp_path / "bad.off"
    path.write_text("OFF\n2 1 0\n0 0 0\n")
    with pytest.raises(MeshFormatError, match="malformed"):
        load_mesh(path)


def test_gmsh_v2_parses_triangles(tmp_path):
    # hand-written tetrahedron surface in Gmsh 2.2 ASCII, 1-based ids
    # with a gap, plus point/line elements that must be skipped
    text = """$MeshFormat
2.2 0 8
$EndMeshFormat
$Nodes
4
1 0 0 0
2 1 0 0
3 0 1 0
5 0 0 1
$EndNodes
$Elements
6
1 15 2 0 1 1
2 1 2 0 1 1 2
3 2 2 0 1 1 3 2
4 2 2 0 1 1 2 5
5 2 2 0 1 2 3 5
6 2 2 0 1 1 5 3
$EndElements
"""
    path = tmp_path / "tet.msh"
    path.write_text(text)
    mesh = load_mesh(path)
    assert mesh.n_triangles == 4
    assert mesh.signed_volume() == pytest.approx(1.0 / 6.0)


def test_gmsh_rejects_v4(tmp_path):
    path = tmp_path / "new.msh"
    path.write_text("$MeshFormat\n4.1 0 8\n$EndMeshFormat\n")
    with pytest.raises(MeshFormatError, match="version"):
        load_mesh(path)


def test_gmsh_rejects_volume_elements(tmp_path):
    text = """$MeshFormat
2.2 0 8
$EndMeshFormat
$Nodes
4
1 0 0 0
2 1 0 0
3 0 1 0
4 0 0 1
$EndNodes
$Elements
1
1 4 2 0 1 1 2 3 4
$EndElements
"""
    path = tmp_path / "vol.msh"
    path.write_text(text)
    with pytest.raises(MeshFormatError, match="unsupported element type"):
        load_mesh(path)


def test_load_unknown_format(tmp_path):
    path = tmp_path / "mesh.xyz"
    path.write_text("not a mesh\n")
    with pytest.raises(MeshFormatError, match="unrecognized"):
        load_mesh(path)


def test_winding_number_classifies(box):
    pts = np.array([
        [0.0, 0.0, 0.0], [0.9, 0.9, 0.9], [1.5, 0.0, 0.0], [0.0, 0.0, 5.0],
    ])
    w = winding_number(box, pts)
    np.testing.assert_allclose(w[:2], 1.0, atol=1e-10)
    np.testing.assert_allclose(w[2:], 0.0, atol=1e-10)
    assert list(points_inside(box, pts)) == [True, True, False, False]


def test_winding_number_on_sphere():
    mesh = icosphere(2, 1.0)
    inside = np.array([[0.0, 0.0, 0.0], [0.5, 0.3, -0.2]])
    outside = np.array([[2.0, 0.0, 0.0], [-1.2, 1.2, 1.2]])
    assert points_inside(mesh, inside).all()
    assert not points_inside(mesh, outside).any()


def test_surface_distance_cube(box):
    # cube spans [-1, 1]^3: distances are known exactly
    pts = np.array([
        [2.0, 0.0, 0.0],   # face
        [0.0, 0.0, 0.0],   # center
        [2.0, 2.0, 2.0],   # corner
        [1.0, 0.0, 0.0],   # on the surface
    ])
    d = surface_distance(box, pts)
    expected = [1.0, 1.0, np.sqrt(3.0), 0.0]
    np.testing.assert_allclose(d, expected, atol=1e-12)


def test_surface_distance_sphere_shells():
    mesh = icosphere(2, 1.0)
    pts = np.array([[1.5, 0.0, 0.0], [0.0, 2.5, 0.0]])
    d = surface_distance(mesh, pts)
    # the polyhedron lies slightly inside the sphere
    np.testing.assert_allclose(d, [0.5, 1.5], atol=0.02)
    assert (d >= [0.5 - 0.02, 1.5 - 0.02]).all()
