"""Verification helpers: filtering, order estimation, small studies."""

import numpy as np
import pytest

from cqbem import CausalSignal, IncidentWave, run_simulation
from cqbem.verify import (
    binomial_filter,
    estimate_order,
    exact_scattered_field,
    manufactured_scenario,
    measure_field_error,
    run_convergence_study,
    run_self_convergence_study,
)


def test_binomial_filter_values_and_slice():
    trace = np.array([1.0, 2.0, 3.0, 4.0])
    filtered, inner = binomial_filter(trace)
    np.testing.assert_allclose(filtered, [2.0, 3.0])
    np.testing.assert_allclose(trace[inner], [2.0, 3.0])
    with pytest.raises(ValueError, match="three time samples"):
        binomial_filter(np.array([1.0, 2.0]))


def test_binomial_filter_kills_alternating_mode():
    n = np.arange(50)
    smooth = np.sin(0.2 * n)
    noisy = smooth + 0.5 * (-1.0) ** n
    filtered, _ = binomial_filter(noisy)
    clean, _ = binomial_filter(smooth)
    # (1, 2, 1)/4 annihilates the alternating component identically.
    np.testing.assert_allclose(filtered, clean, rtol=0, atol=1e-15)


def test_estimate_order_clean_sequence():
    kappas = [0.4, 0.2, 0.1, 0.05]
    errors = [1.0, 0.25, 0.0625, 0.015625]
    assert estimate_order(kappas, errors) == pytest.approx(2.0)


def test_estimate_order_skips_stalled_tail():
    # The last pair stalls on a spatial floor; the estimate must come from
    # the last still-improving pair instead.
    kappas = [0.4, 0.2, 0.1, 0.05]
    errors = [1.0, 0.5, 0.25, 0.24]
    assert estimate_order(kappas, errors) == pytest.approx(1.0)


def test_estimate_order_all_stalled_uses_last_pair():
    kappas = [0.2, 0.1]
    errors = [0.31, 0.30]
    expect = np.log(0.31 / 0.30) / np.log(2.0)
    assert estimate_order(kappas, errors) == pytest.approx(expect)


def test_estimate_order_validation():
    with pytest.raises(ValueError, match="at least two"):
        estimate_order([0.1], [1.0])
    with pytest.raises(ValueError, match="at least two"):
        estimate_order([0.1, 0.05], [1.0])


def test_manufactured_scenario_shapes_and_validation():
    sc = manufactured_scenario(refinement=1, radius=0.5)
    assert sc.mesh.n_triangles == 80
    assert sc.horizon == pytest.approx(4.0)
    assert sc.observation_points.shape == (1, 3)
    # Exact answer is minus the incident wave outside the scatterer.
    times = np.linspace(0.0, sc.horizon, 7)
    exact = exact_scattered_field(sc.wave, sc.observation_points, times)
    np.testing.assert_allclose(exact, -sc.wave(sc.observation_points, times))
    with pytest.raises(ValueError, match="not inside"):
        manufactured_scenario(refinement=0, radius=0.5, source=(0.8, 0.0, 0.0))


def test_measure_field_error_requires_observations():
    sc = manufactured_scenario(refinement=0)
    result = run_simulation(sc.mesh, sc.wave, method="bdf2", kappa=0.5,
                            n_steps=4, quad_order=3)
    with pytest.raises(ValueError, match="without observation points"):
        measure_field_error(result, sc.wave)


@pytest.mark.slow
def test_small_self_convergence_study_runs():
    sc = manufactured_scenario(refinement=1, signal_m=6, signal_tau=0.3)
    study = run_self_convergence_study("bdf2", (8, 16, 32), sc, quad_order=3)
    assert study.method == "bdf2"
    assert study.expected_order == 2
    assert len(study.pair_orders) == 1
    assert np.all(np.asarray(study.diffs) > 0.0)
    assert "bdf2 self-convergence" in study.summary()
    # Halving kappa must shrink the rung difference on this smooth problem.
    assert study.diffs[1] < study.diffs[0]


def test_self_convergence_study_validation():
    sc = manufactured_scenario(refinement=0)
    with pytest.raises(ValueError, match="three rungs"):
        run_self_convergence_study("bdf2", (8, 16), sc, quad_order=3)
    with pytest.raises(ValueError, match="double"):
        run_self_convergence_study("bdf2", (8, 16, 24), sc, quad_order=3)


@pytest.mark.slow
def test_small_direct_convergence_study_runs():
    sc = manufactured_scenario(refinement=1, signal_m=6, signal_tau=0.3)
    study = run_convergence_study("backward_euler", (8, 16, 32), sc, quad_order=3)
    assert study.errors.shape == (3,)
    assert np.all(study.errors > 0.0)
    assert "backward_euler" in study.summary()


def test_direct_convergence_study_validation():
    sc = manufactured_scenario(refinement=0)
    with pytest.raises(ValueError, match="increasing"):
        run_convergence_study("bdf2", (16, 8), sc, quad_order=3)
