import math

import numpy as np
import pytest

from h2cavity.hilbert import Mode, ModeSpec
from h2cavity.lindblad import (
    Channel,
    apply_dissipator,
    apply_influx,
    apply_lindblad_total,
    channels_for,
    gibbs_field_state,
    hermiticity_gap,
    mu_from_temperature,
    single_mode_channel,
    temperature_from_mu,
)

HBAR = 1.054571817e-34      # J s
BOLTZMANN = 1.380649e-23    # J/K


def ladder_spec(mu=0.0, cutoff=1, gamma=1.0, frequency=1e9):
    return ModeSpec(label=Mode.SPIN_E, frequency=frequency, gamma_out=gamma,
                    mu=mu, cutoff=cutoff)


def random_density(rng, dim):
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = m @ m.conjugate().transpose()
    return rho / np.trace(rho).real


class TestChannel:
    def test_rates_must_satisfy_mu_below_one(self):
        spec = ladder_spec(cutoff=2)
        jump = single_mode_channel(spec).jump
        with pytest.raises(ValueError):
            Channel(jump=jump, gamma_out=1.0, gamma_in=1.0)
        with pytest.raises(ValueError):
            Channel(jump=jump, gamma_out=0.0, gamma_in=0.5)

    def test_channels_for_covers_leaky_modes(self, photon_basis):
        chans = channels_for(photon_basis)
        assert len(chans) == 6
        assert all(ch.gamma_out > 0 for ch in chans)


class TestDissipator:
    def test_single_photon_decay(self):
        ch = single_mode_channel(ladder_spec(gamma=0.7, cutoff=1))
        rho = np.diag([0.0, 1.0]).astype(complex)
        out = apply_dissipator(ch, rho)
        assert np.allclose(out, 0.7 * np.diag([1.0, -1.0]))

    def test_vacuum_is_dark(self):
        ch = single_mode_channel(ladder_spec(gamma=0.7, cutoff=1))
        rho = np.diag([1.0, 0.0]).astype(complex)
        assert np.abs(apply_dissipator(ch, rho)).max() == 0.0

    def test_trace_free_on_random_states(self, rng):
        ch = single_mode_channel(ladder_spec(gamma=0.9, cutoff=4))
        for _ in range(20):
            rho = random_density(rng, 5)
            assert abs(np.trace(apply_dissipator(ch, rho))) <= 1e-12

    def test_dimension_mismatch_rejected(self):
        ch = single_mode_channel(ladder_spec(cutoff=3))
        with pytest.raises(ValueError):
            apply_dissipator(ch, np.eye(3, dtype=complex))


class TestInflux:
    def test_vacuum_is_pumped(self):
        ch = single_mode_channel(ladder_spec(mu=0.5, gamma=1.0, cutoff=1))
        rho = np.diag([1.0, 0.0]).astype(complex)
        out = apply_influx(ch, rho)
        assert np.allclose(out, 0.5 * np.diag([-1.0, 1.0]))

    def test_zero_mu_is_inactive(self, rng):
        ch = single_mode_channel(ladder_spec(mu=0.0, cutoff=3))
        assert np.abs(apply_influx(ch, random_density(rng, 4))).max() == 0.0

    def test_trace_free_even_at_cutoff(self, rng):
        ch = single_mode_channel(ladder_spec(mu=0.8, gamma=1.3, cutoff=3))
        for _ in range(20):
            rho = random_density(rng, 4)
            assert abs(np.trace(apply_influx(ch, rho))) <= 1e-12


class TestTotalGenerator:
    def test_vanishes_without_rates(self, rng):
        spec = ladder_spec(gamma=0.0, cutoff=2)
        ch = single_mode_channel(spec)
        assert np.abs(apply_lindblad_total([ch], random_density(rng, 3))).max() == 0.0

    def test_single_channel_reduces_to_parts(self, rng):
        ch = single_mode_channel(ladder_spec(mu=0.4, gamma=1.1, cutoff=3))
        rho = random_density(rng, 4)
        combined = apply_lindblad_total([ch], rho)
        assert np.allclose(combined,
                           apply_dissipator(ch, rho) + apply_influx(ch, rho))

    def test_linearity_hermiticity_tracefree(self, rng):
        channels = [single_mode_channel(ladder_spec(mu=0.5, gamma=0.8, cutoff=4)),
                    single_mode_channel(ladder_spec(mu=0.0, gamma=0.3, cutoff=4))]
        r1, r2 = random_density(rng, 5), random_density(rng, 5)
        a, b = 0.3, 0.7
        lhs = apply_lindblad_total(channels, a * r1 + b * r2)
        rhs = (a * apply_lindblad_total(channels, r1)
               + b * apply_lindblad_total(channels, r2))
        scale = np.abs(lhs).max()
        assert np.abs(lhs - rhs).max() <= 1e-10 * scale
        assert hermiticity_gap(lhs) <= 1e-12 * max(scale, 1.0)
        assert abs(np.trace(lhs)) <= 1e-10 * max(scale, 1.0)


class TestGibbsState:
    def test_zero_mu_is_vacuum(self):
        state = gibbs_field_state(ladder_spec(cutoff=3), 0.0)
        assert np.allclose(state, np.diag([1.0, 0.0, 0.0, 0.0]))

    def test_half_mu_cutoff_two_weights(self):
        state = gibbs_field_state(ladder_spec(cutoff=2), 0.5)
        assert np.allclose(np.diag(state).real, [4 / 7, 2 / 7, 1 / 7])

    def test_rejects_mu_at_or_above_one(self):
        with pytest.raises(ValueError):
            gibbs_field_state(ladder_spec(cutoff=2), 1.0)

    def test_stationarity_residual_bounded_by_truncation(self):
        gamma, mu, cutoff = 2.0, 0.5, 10
        spec = ladder_spec(mu=mu, gamma=gamma, cutoff=cutoff)
        ch = single_mode_channel(spec)
        state = gibbs_field_state(spec, mu)
        residual = apply_dissipator(ch, state) + apply_influx(ch, state)
        assert np.abs(residual).max() <= gamma * mu ** cutoff


class TestTemperatureMap:
    def test_low_mu_limit_is_cold(self):
        spec = ladder_spec()
        assert temperature_from_mu(spec, 1e-9, HBAR, BOLTZMANN) < \
            temperature_from_mu(spec, 1e-3, HBAR, BOLTZMANN)

    def test_unit_construction(self):
        # mu = 1/e with frequency = K/hbar gives exactly T = 1
        spec = ModeSpec(label=Mode.SPIN_E, frequency=BOLTZMANN / HBAR,
                        gamma_out=0.0, mu=0.0, cutoff=0)
        assert temperature_from_mu(spec, math.exp(-1), HBAR, BOLTZMANN) == \
            pytest.approx(1.0)

    def test_direct_evaluation_and_round_trip(self):
        spec = ladder_spec(frequency=1e9)
        t = temperature_from_mu(spec, 0.5, HBAR, BOLTZMANN)
        expected = HBAR * 1e9 / (BOLTZMANN * math.log(2.0))
        assert t == pytest.approx(expected, rel=1e-12)
        back = mu_from_temperature(spec, t, HBAR, BOLTZMANN)
        assert back == pytest.approx(0.5, rel=1e-12)

    def test_domain_errors(self):
        spec = ladder_spec()
        with pytest.raises(ValueError):
            temperature_from_mu(spec, 0.0, HBAR, BOLTZMANN)
        with pytest.raises(ValueError):
            mu_from_temperature(spec, -1.0, HBAR, BOLTZMANN)
