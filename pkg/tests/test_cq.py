"""Convolution-weight machinery: contours, recovery, closed-form oracles."""

import numpy as np
import pytest

from cqbem import ConfigError, ContourError
from cqbem.cq import (
    METHODS,
    discrete_convolution,
    generating_polynomial,
    make_contour,
    method_order,
    parse_method,
    scalar_weights,
    step_frequency,
    weights_from_half_spectrum,
)

EPS = np.finfo(np.float64).eps


def test_parse_method_aliases():
    assert parse_method("be") == "backward_euler"
    assert parse_method("euler") == "backward_euler"
    assert parse_method("bdf1") == "backward_euler"
    assert parse_method("BDF2") == "bdf2"
    assert parse_method(" trap ") == "trapezoidal"
    with pytest.raises(ConfigError, match="unknown time-stepping method"):
        parse_method("rk4")


def test_method_orders():
    assert method_order("backward_euler") == 1
    assert method_order("bdf2") == 2
    assert method_order("trapezoidal") == 2


def test_generating_polynomial_frozen_values():
    # Hand-evaluated at zeta = 1/2.
    assert generating_polynomial("backward_euler", 0.5) == pytest.approx(0.5)
    assert generating_polynomial("bdf2", 0.5) == pytest.approx(0.625)
    assert generating_polynomial("trapezoidal", 0.5) == pytest.approx(2.0 / 3.0)
    # All three vanish at zeta = 1 (consistency with d/dt of a constant).
    for method in METHODS:
        assert generating_polynomial(method, 1.0) == pytest.approx(0.0, abs=1e-15)


def test_step_frequency_scales_inversely_with_kappa():
    z = 0.3 + 0.1j
    for method in METHODS:
        s1 = step_frequency(method, 0.1, z)
        s2 = step_frequency(method, 0.2, z)
        assert s1 == pytest.approx(2.0 * s2)


def test_make_contour_defaults():
    plan = make_contour("bdf2", 0.25, 16)
    assert plan.n_nodes == 2 * (16 + 1)
    assert plan.n_distinct == plan.n_nodes // 2 + 1
    assert plan.radius == pytest.approx(EPS ** (1.0 / (2 * plan.n_nodes)))
    assert 0.0 < plan.radius < 1.0
    # The l = 0 node sits on the positive real axis.
    assert plan.nodes[0].imag == pytest.approx(0.0, abs=1e-15)
    assert plan.nodes[0].real > 0


def test_contour_frequencies_have_positive_real_part():
    for method in METHODS:
        for n_steps in (0, 1, 7, 64, 257):
            plan = make_contour(method, 0.05, n_steps)
            assert np.all(plan.nodes.real > 0.0), (method, n_steps)


def test_make_contour_validation():
    with pytest.raises(ConfigError, match="kappa"):
        make_contour("be", 0.0, 8)
    with pytest.raises(ConfigError, match="n_steps"):
        make_contour("be", 0.1, -1)
    with pytest.raises(ConfigError, match="even node count"):
        make_contour("be", 0.1, 8, n_nodes=19)
    with pytest.raises(ConfigError, match="too short"):
        make_contour("be", 0.1, 8, n_nodes=8)
    with pytest.raises(ContourError, match="radius"):
        make_contour("be", 0.1, 8, radius=1.5)


def test_identity_transfer_gives_unit_impulse():
    for method in METHODS:
        w = scalar_weights(method, 0.125, 12, lambda s: 1.0 + 0.0 * s)
        e0 = np.zeros(12)
        e0[0] = 1.0
        np.testing.assert_allclose(w, e0, atol=1e-12)


def test_differentiation_weights_match_stencils():
    kappa = 0.25
    n = 10
    w = scalar_weights("backward_euler", kappa, n, lambda s: s)
    expect = np.zeros(n)
    expect[:2] = [1.0 / kappa, -1.0 / kappa]
    np.testing.assert_allclose(w, expect, atol=1e-7 / kappa)

    w = scalar_weights("bdf2", kappa, n, lambda s: s)
    expect = np.zeros(n)
    expect[:3] = [1.5 / kappa, -2.0 / kappa, 0.5 / kappa]
    np.testing.assert_allclose(w, expect, atol=1e-7 / kappa)

    # 2 (1 - zeta) / ((1 + zeta) kappa) expands to 2, -4, 4, -4, ... over kappa.
    w = scalar_weights("trapezoidal", kappa, n, lambda s: s)
    expect = 4.0 * (-1.0) ** np.arange(n) / kappa
    expect[0] = 2.0 / kappa
    np.testing.assert_allclose(w, expect, atol=1e-7 / kappa)


def test_integration_weights_match_closed_forms():
    kappa = 0.2
    n = 14
    idx = np.arange(n)

    w = scalar_weights("backward_euler", kappa, n, lambda s: 1.0 / s)
    np.testing.assert_allclose(w, np.full(n, kappa), atol=1e-8)

    # Partial fractions of 2 kappa / ((1 - zeta)(3 - zeta)).
    w = scalar_weights("bdf2", kappa, n, lambda s: 1.0 / s)
    np.testing.assert_allclose(w, kappa * (1.0 - (1.0 / 3.0) ** (idx + 1)), atol=1e-8)

    w = scalar_weights("trapezoidal", kappa, n, lambda s: 1.0 / s)
    expect = np.full(n, kappa)
    expect[0] = 0.5 * kappa
    np.testing.assert_allclose(w, expect, atol=1e-8)


def test_double_integration_backward_euler():
    kappa = 0.1
    n = 20
    w = scalar_weights("backward_euler", kappa, n, lambda s: 1.0 / s**2)
    np.testing.assert_allclose(w, kappa**2 * (np.arange(n) + 1), atol=1e-8)


def test_integration_inverts_differentiation():
    n = 24
    for method in METHODS:
        w_int = scalar_weights(method, 0.3, n, lambda s: 1.0 / s)
        w_dif = scalar_weights(method, 0.3, n, lambda s: s)
        composed = np.convolve(w_int, w_dif)[:n]
        e0 = np.zeros(n)
        e0[0] = 1.0
        np.testing.assert_allclose(composed, e0, atol=1e-6)


def test_weights_stable_under_contour_doubling():
    n = 17
    transfer = lambda s: np.exp(-1.3 * s) / s
    for method in METHODS:
        w_small = scalar_weights(method, 0.11, n, transfer)
        w_big = scalar_weights(method, 0.11, n, transfer, n_nodes=8 * n)
        scale = np.abs(w_big).max()
        np.testing.assert_allclose(w_small, w_big, atol=1e-9 * max(scale, 1.0))


def test_half_spectrum_shape_checks():
    plan = make_contour("bdf2", 0.1, 8)
    with pytest.raises(ContourError, match="rows"):
        weights_from_half_spectrum(plan, np.ones(3, dtype=complex))
    with pytest.raises(ContourError, match="cannot recover"):
        weights_from_half_spectrum(
            plan, np.ones(plan.n_distinct, dtype=complex), n_weights=plan.n_nodes + 1
        )


def test_inconsistent_spectrum_raises():
    plan = make_contour("backward_euler", 0.1, 8)
    half = np.zeros(plan.n_distinct, dtype=complex)
    half[0] = 1j  # the real-axis node must carry a real transfer value
    with pytest.raises(ContourError, match="imaginary residue"):
        weights_from_half_spectrum(plan, half)


def test_residue_reported_for_good_spectrum():
    plan = make_contour("trapezoidal", 0.1, 12)
    half = np.exp(-plan.nodes) / plan.nodes
    _, residue = weights_from_half_spectrum(plan, half)
    assert 0.0 <= residue < 1e-10


def test_discrete_convolution_scalar():
    out = discrete_convolution([1.0, 2.0], [1.0, 1.0, 1.0, 1.0])
    np.testing.assert_allclose(out, [1.0, 3.0, 3.0, 3.0])


def test_discrete_convolution_matrix_matches_loop():
    rng = np.random.default_rng(7)
    weights = rng.normal(size=(4, 2, 3))
    data = rng.normal(size=(6, 3))
    out = discrete_convolution(weights, data)
    assert out.shape == (6, 2)
    expect = np.zeros((6, 2))
    for n in range(6):
        for m in range(min(n + 1, 4)):
            expect[n] += weights[m] @ data[n - m]
    np.testing.assert_allclose(out, expect, atol=1e-13)


def test_matrix_weights_reproduce_scalar_path():
    kappa = 0.15
    w_scalar = scalar_weights("bdf2", kappa, 9, lambda s: 1.0 / s)
    plan = make_contour("bdf2", kappa, 8)
    half = (1.0 / plan.nodes)[:, None, None] * np.eye(2)
    w_mat, _ = weights_from_half_spectrum(plan, half)
    assert w_mat.shape == (9, 2, 2)
    for n in range(9):
        np.testing.assert_allclose(w_mat[n], w_scalar[n] * np.eye(2), atol=1e-12)
