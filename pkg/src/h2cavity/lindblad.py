"""Dissipation and influx superoperators, plus thermal-field utilities.

Each photon mode contributes a standard emission dissipator built on its
annihilation operator and, when its influx ratio ``mu`` is nonzero, an
influx term built on the creation operator with rate ``mu`` times the
emission rate.  Both superoperators are trace-free and preserve
Hermiticity.

A mode driven by such a pair relaxes toward a geometric (thermal) Fock
distribution with weight ratio ``mu`` between neighbouring occupation
numbers; ``mu`` maps to a temperature through the mode frequency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .hilbert import Basis, Mode, ModeSpec
from .operators import SparseOperator, photon_ladder


@dataclass(frozen=True)
class Channel:
    """One mode's jump operator with its emission and influx rates."""

    jump: SparseOperator
    gamma_out: float
    gamma_in: float = 0.0

    def __post_init__(self):
        if self.gamma_out < 0 or self.gamma_in < 0:
            raise ValueError("channel rates must be non-negative")
        if self.gamma_out == 0 and self.gamma_in > 0:
            raise ValueError("influx requires a nonzero emission rate (mu < 1)")
        if self.gamma_out > 0 and self.gamma_in >= self.gamma_out:
            raise ValueError("influx rate must stay below the emission rate (mu < 1)")

    @classmethod
    def for_mode(cls, basis: Basis, spec: ModeSpec) -> "Channel":
        return cls(jump=photon_ladder(basis, spec.label, "annihilate"),
                   gamma_out=spec.gamma_out,
                   gamma_in=spec.gamma_in)

    @property
    def dim(self) -> int:
        return self.jump.dim


def channels_for(basis: Basis) -> list:
    """One channel per mode of the basis with a nonzero emission rate."""
    return [Channel.for_mode(basis, spec) for spec in basis.mode_table
            if spec.gamma_out > 0]


def _check_dim(ch: Channel, rho: np.ndarray) -> None:
    if rho.shape != (ch.dim, ch.dim):
        raise ValueError(f"density matrix shape {rho.shape} does not match "
                         f"channel dimension {ch.dim}")


def apply_dissipator(ch: Channel, rho: np.ndarray) -> np.ndarray:
    """gamma_out * (A rho A^dag - (1/2){rho, A^dag A})."""
    _check_dim(ch, rho)
    a = ch.jump.matrix
    sandwich = a @ rho @ a.conjugate().transpose()
    n = (a.conjugate().transpose() @ a).tocsr()
    anti = n @ rho + rho @ n
    return ch.gamma_out * (sandwich - 0.5 * anti)


def apply_influx(ch: Channel, rho: np.ndarray) -> np.ndarray:
    """gamma_in * (A^dag rho A - (1/2){rho, A A^dag})."""
    _check_dim(ch, rho)
    if ch.gamma_in == 0.0:
        return np.zeros_like(rho)
    a = ch.jump.matrix
    adag = a.conjugate().transpose().tocsr()
    sandwich = adag @ rho @ a
    m = (a @ adag).tocsr()
    anti = m @ rho + rho @ m
    return ch.gamma_in * (sandwich - 0.5 * anti)


def apply_lindblad_total(channels, rho: np.ndarray) -> np.ndarray:
    """Sum of all emission dissipators and all active influx terms."""
    out = np.zeros_like(rho, dtype=np.complex128)
    for ch in channels:
        if ch.gamma_out > 0:
            out += apply_dissipator(ch, rho)
        if ch.gamma_in > 0:
            out += apply_influx(ch, rho)
    return out


def gibbs_field_state(mode: ModeSpec, mu: float) -> np.ndarray:
    """Thermal single-mode state: diagonal weights proportional to mu**p.

    Normalized over the truncated ladder 0..cutoff, so it deviates from
    the untruncated thermal state by O(mu**(cutoff+1)).
    """
    if not 0.0 <= mu < 1.0:
        raise ValueError("mu must lie in [0, 1) for a normalizable field state")
    weights = np.array([mu ** p for p in range(mode.cutoff + 1)], dtype=float)
    weights /= weights.sum()
    return np.diag(weights.astype(np.complex128))


def temperature_from_mu(mode: ModeSpec, mu: float,
                        hbar: float, boltzmann: float) -> float:
    """Bath temperature reproducing influx ratio ``mu`` on this mode."""
    if not 0.0 < mu < 1.0:
        raise ValueError("mu must lie in (0, 1) for a finite temperature")
    return hbar * mode.frequency / (boltzmann * math.log(1.0 / mu))


def mu_from_temperature(mode: ModeSpec, temperature: float,
                        hbar: float, boltzmann: float) -> float:
    """Inverse of :func:`temperature_from_mu`."""
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    return math.exp(-hbar * mode.frequency / (boltzmann * temperature))


def single_mode_channel(spec: ModeSpec) -> Channel:
    """A standalone channel on the (cutoff+1)-dimensional Fock ladder.

    Test helper for single-mode stationarity studies; the jump operator
    carries a private basis identity.
    """
    dim = spec.cutoff + 1
    data = np.sqrt(np.arange(1, dim, dtype=float))
    a = sp.diags(data.astype(np.complex128), offsets=1, format="csr")
    return Channel(jump=SparseOperator(a, basis_uid=-spec.label.index - 1),
                   gamma_out=spec.gamma_out, gamma_in=spec.gamma_in)


def hermiticity_gap(rho: np.ndarray) -> float:
    return float(np.abs(rho - rho.conjugate().transpose()).max())


def trace_gap(rho: np.ndarray) -> float:
    return abs(float(np.trace(rho).real) - 1.0) + abs(float(np.trace(rho).imag))


def min_eigenvalue(rho: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(0.5 * (rho + rho.conjugate().transpose())).min())
