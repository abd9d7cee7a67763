"""Quadrature rules: measures, smooth-integrand exactness, singular kernels.

Reference values were produced by independent routes and frozen:

* the coincident self-term of the 1/(4 pi r) kernel on the unit right
  triangle was computed both by the 4D rule at high order and by pairing
  an adaptive outer rule with the closed-form in-plane Newton potential
  of a triangle (per-edge logarithm formula); both agree to 3e-10,
* smooth-pair values come from a high-order tensor product rule, which
  converges for non-singular integrands.
"""

import numpy as np
import pytest

from cqbem.quadrature import (
    PairRule,
    coincident_rule,
    edge_rule,
    gauss01,
    triangle_rule,
    vertex_rule,
    regularized_pair_integral,
)

# frozen: unit right triangle ((0,0),(1,0),(0,1)), kernel 1/(4 pi |x-y|),
# coincident double integral; rule value at q=16, cross-checked by the
# semi-analytic route described above
SELF_TERM_UNIT_RIGHT = 0.079821446904


def unit_right():
    return np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])


def test_gauss01_integrates_polynomials():
    x, w = gauss01(6)
    assert w.sum() == pytest.approx(1.0, abs=1e-15)
    for k in range(12):  # exact through degree 2q-1
        assert (w * x**k).sum() == pytest.approx(1.0 / (k + 1), abs=1e-14)


def test_triangle_rule_measure_and_moments():
    bary, w = triangle_rule(5)
    assert bary.shape == (25, 3)
    assert w.sum() == pytest.approx(0.5, abs=1e-15)
    np.testing.assert_allclose(bary.sum(axis=1), 1.0, atol=1e-14)
    assert (bary >= 0).all()
    # linear hats integrate to area/3 on the reference triangle
    np.testing.assert_allclose(w @ bary, [1.0 / 6.0] * 3, atol=1e-15)
    # a quartic monomial: int x^2 y^2 over unit right triangle = 1/180
    x = bary[:, 1]
    y = bary[:, 2]
    assert (w * x**2 * y**2).sum() == pytest.approx(1.0 / 180.0, abs=1e-15)


@pytest.mark.parametrize("factory,category,pieces", [
    (coincident_rule, "coincident", 6),
    (edge_rule, "edge", 6),
    (vertex_rule, "vertex", 2),
])
def test_pair_rules_measure_one_quarter(factory, category, pieces):
    q = 4
    rule = factory(q)
    assert isinstance(rule, PairRule)
    assert rule.category == category
    assert len(rule) == pieces * q**4
    assert rule.w.sum() == pytest.approx(0.25, abs=1e-14)
    for bary in (rule.bary_x, rule.bary_y):
        np.testing.assert_allclose(bary.sum(axis=1), 1.0, atol=1e-13)
        assert bary.min() > -1e-14


def _tensor_pair_value(xverts, yverts, kernel, q=24):
    bary, w = triangle_rule(q)
    ax = np.linalg.norm(np.cross(xverts[1] - xverts[0], xverts[2] - xverts[0])) / 2
    ay = np.linalg.norm(np.cross(yverts[1] - yverts[0], yverts[2] - yverts[0])) / 2
    x = bary @ xverts
    y = bary @ yverts
    vals = kernel(x[:, None, :], y[None, :, :])
    return 4 * ax * ay * np.einsum("a,b,ab->", w, w, vals)


@pytest.mark.parametrize("category", ["coincident", "edge", "vertex"])
def test_pair_rules_reproduce_smooth_integrals(category):
    """The 4D substitutions are measure preserving: any smooth integrand
    must come out identical to a plain product rule."""
    tri_a = np.array([[0.0, 0.0, 0.0], [1.1, 0.1, 0.0], [0.2, 0.9, 0.3]])
    if category == "coincident":
        tri_b = tri_a
    elif category == "edge":
        tri_b = np.array([tri_a[0], tri_a[1], [0.4, -0.8, 0.2]])
    else:
        tri_b = np.array([tri_a[0], [-0.9, 0.2, 0.1], [-0.1, -0.7, 0.4]])

    def kernel(x, y):
        d = x - y
        return np.exp(-((d**2).sum(axis=-1))) + 0.3 * d[..., 0]

    got = regularized_pair_integral(category, tri_a, tri_b, kernel, q=10)
    want = _tensor_pair_value(tri_a, tri_b, kernel)
    assert got == pytest.approx(want, rel=1e-12)


def test_coincident_self_term_frozen_value():
    tri = unit_right()

    def kernel(x, y):
        r = np.linalg.norm(x - y, axis=-1)
        return 1.0 / (4.0 * np.pi * r)

    got = regularized_pair_integral("coincident", tri, tri, kernel, q=10)
    assert got == pytest.approx(SELF_TERM_UNIT_RIGHT, abs=1e-9)


def test_singular_rules_converge_geometrically():
    """Error against the finest rule should collapse fast in q."""
    tri = unit_right()

    def kernel(x, y):
        r = np.linalg.norm(x - y, axis=-1)
        return 1.0 / (4.0 * np.pi * r)

    vals = {q: regularized_pair_integral("coincident", tri, tri, kernel, q=q)
            for q in (4, 8, 14)}
    e4 = abs(vals[4] - vals[14])
    e8 = abs(vals[8] - vals[14])
    assert e8 < 1e-3 * e4 or e8 < 1e-12


def test_edge_rule_handles_singular_kernel():
    tri_a = unit_right()
    tri_b = np.array([tri_a[0], tri_a[1], [0.3, -0.9, 0.4]])

    def kernel(x, y):
        r = np.linalg.norm(x - y, axis=-1)
        return 1.0 / (4.0 * np.pi * r)

    coarse = regularized_pair_integral("edge", tri_a, tri_b, kernel, q=8)
    fine = regularized_pair_integral("edge", tri_a, tri_b, kernel, q=14)
    assert coarse == pytest.approx(fine, rel=1e-8)


def test_vertex_rule_handles_singular_kernel():
    tri_a = unit_right()
    tri_b = np.array([tri_a[0], [-1.0, 0.1, 0.2], [-0.2, -0.8, 0.1]])

    def kernel(x, y):
        r = np.linalg.norm(x - y, axis=-1)
        return 1.0 / (4.0 * np.pi * r)

    coarse = regularized_pair_integral("vertex", tri_a, tri_b, kernel, q=8)
    fine = regularized_pair_integral("vertex", tri_a, tri_b, kernel, q=14)
    assert coarse == pytest.approx(fine, rel=1e-8)


def test_pair_integral_rejects_wrong_sharing():
    tri_a = unit_right()
    tri_far = tri_a + np.array([5.0, 0.0, 0.0])
    with pytest.raises(ValueError):
        regularized_pair_integral("edge", tri_a, tri_far, lambda x, y: 1.0, q=4)
    with pytest.raises(ValueError):
        regularized_pair_integral("sideways", tri_a, tri_a, lambda x, y: 1.0, q=4)
