import numpy as np
import pytest

from h2cavity.lindblad import single_mode_channel
from h2cavity.oracle import (
    jc_analytic_population,
    pure_decay_population,
    rk4_evolve,
)

from test_lindblad import ladder_spec


def two_level_jc(g):
    """Dense resonant single-excitation block: |0, excited>, |1, ground>."""
    w = 1e10
    return np.array([[w, g], [g, w]], dtype=complex)


class TestAnalyticForms:
    def test_jc_population_anchors(self):
        g = 2e7
        assert jc_analytic_population(g, 0.0) == pytest.approx(1.0)
        assert jc_analytic_population(g, np.pi / (2 * g)) == pytest.approx(0.0, abs=1e-12)
        assert jc_analytic_population(g, np.pi / (4 * g)) == pytest.approx(0.5)

    def test_decay_curve(self):
        assert pure_decay_population(3.0, 0.0) == 1.0
        assert pure_decay_population(3.0, 1.0) == pytest.approx(np.exp(-3.0))


class TestRk4:
    def test_constant_without_generator(self):
        rho0 = np.diag([0.25, 0.75]).astype(complex)
        out = rk4_evolve(np.zeros((2, 2), dtype=complex), [], rho0,
                         dt=1e-3, horizon=1.0)
        assert np.abs(out.end_state - rho0).max() == 0.0
        assert out.step_count == 1000

    def test_matches_jc_analytic(self):
        g = 2e7
        h = two_level_jc(g)
        rho0 = np.diag([1.0, 0.0]).astype(complex)
        horizon = np.pi / g          # one full exchange period
        out = rk4_evolve(h, [], rho0, dt=horizon / 4000, horizon=horizon,
                         sample_every=100,
                         observe=lambda r: r[0, 0].real)
        times = out.times
        expected = jc_analytic_population(g, times)
        assert np.abs(np.asarray(out.samples) - expected).max() <= 1e-8

    def test_matches_pure_decay(self):
        gamma = 2.0
        ch = single_mode_channel(ladder_spec(gamma=gamma, cutoff=1))
        rho0 = np.diag([0.0, 1.0]).astype(complex)
        out = rk4_evolve(np.zeros((2, 2), dtype=complex), [ch], rho0,
                         dt=1e-4, horizon=1.0)
        assert out.end_state[1, 1].real == pytest.approx(np.exp(-gamma), abs=1e-10)

    def test_dimension_guard(self):
        with pytest.raises(ValueError):
            rk4_evolve(np.zeros((65, 65), dtype=complex), [],
                       np.eye(65, dtype=complex) / 65, dt=1e-3, horizon=1e-2)

    def test_blowup_detected(self):
        ch = single_mode_channel(ladder_spec(gamma=1.0, cutoff=1))
        rho0 = np.diag([0.0, 1.0]).astype(complex)
        with pytest.raises(ArithmeticError):
            rk4_evolve(np.zeros((2, 2), dtype=complex), [ch], rho0,
                       dt=50.0, horizon=5000.0)

    def test_self_consistency_under_dt_halving(self):
        g, gamma = 2e7, 5e6
        h = two_level_jc(g)
        ch = single_mode_channel(ladder_spec(gamma=gamma, cutoff=1))
        rho0 = np.diag([1.0, 0.0]).astype(complex)
        horizon = 2e-8
        coarse = rk4_evolve(h, [ch], rho0, dt=1e-11, horizon=horizon).end_state
        fine = rk4_evolve(h, [ch], rho0, dt=5e-12, horizon=horizon).end_state
        assert np.abs(coarse - fine).max() <= 1e-10
