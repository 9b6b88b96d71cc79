"""Slow, independent reference evaluators used only by the test suite.

Nothing here shares matrix code with the main engine: the master
equation right-hand side is rewritten naively with dense arrays, and the
brute-force basis enumeration walks the full tensor-product space instead
of growing a frontier.  Guard rails keep these paths on small instances.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .hilbert import BasisState, ModeSpec, N_ELECTRON_SLOTS

RK4_DIM_LIMIT = 64


@dataclass
class OracleResult:
    end_state: np.ndarray
    step_count: int
    times: np.ndarray
    trace_series: np.ndarray
    samples: Optional[list] = None


def _qme_rhs(h: np.ndarray, jump_terms, rho: np.ndarray, hbar: float) -> np.ndarray:
    """Naive dense evaluation of the master-equation right-hand side."""
    drho = (-1j / hbar) * (h @ rho - rho @ h)
    for rate, a in jump_terms:
        adag = a.conjugate().transpose()
        n = adag @ a
        drho += (rate / hbar) * (a @ rho @ adag - 0.5 * (rho @ n + n @ rho))
    return drho


def rk4_evolve(h, channels, rho0: np.ndarray, dt: float, horizon: float,
               hbar: float = 1.0, sample_every: int = 0,
               observe: Optional[Callable[[np.ndarray], object]] = None) -> OracleResult:
    """Classical fixed-step RK4 integration of the full master equation.

    ``h`` may be dense or anything with ``to_dense``; channels contribute
    an emission jump and, when their influx rate is nonzero, a creation
    jump.  Restricted to dimension 64 to keep the oracle honest and slow.
    """
    dense_h = h.to_dense() if hasattr(h, "to_dense") else np.asarray(h, dtype=complex)
    dim = dense_h.shape[0]
    if dim > RK4_DIM_LIMIT:
        raise ValueError(f"oracle is limited to dim <= {RK4_DIM_LIMIT}, got {dim}")

    jump_terms = []
    for ch in channels:
        a = ch.jump.to_dense() if hasattr(ch.jump, "to_dense") else np.asarray(ch.jump)
        if ch.gamma_out > 0:
            jump_terms.append((ch.gamma_out, a))
        if ch.gamma_in > 0:
            jump_terms.append((ch.gamma_in, a.conjugate().transpose()))

    rho = np.array(rho0, dtype=complex)
    n_steps = int(round(horizon / dt))
    times, traces, samples = [0.0], [float(np.trace(rho).real)], []
    if observe is not None:
        samples.append(observe(rho))
    for n in range(1, n_steps + 1):
        k1 = _qme_rhs(dense_h, jump_terms, rho, hbar)
        k2 = _qme_rhs(dense_h, jump_terms, rho + 0.5 * dt * k1, hbar)
        k3 = _qme_rhs(dense_h, jump_terms, rho + 0.5 * dt * k2, hbar)
        k4 = _qme_rhs(dense_h, jump_terms, rho + dt * k3, hbar)
        rho = rho + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.isfinite(rho).all() or np.abs(rho).max() > 1e3:
            raise ArithmeticError(f"oracle integration blew up at step {n}")
        if sample_every and (n % sample_every == 0 or n == n_steps):
            times.append(n * dt)
            traces.append(float(np.trace(rho).real))
            if observe is not None:
                samples.append(observe(rho))
    return OracleResult(end_state=rho, step_count=n_steps,
                        times=np.asarray(times), trace_series=np.asarray(traces),
                        samples=samples if observe is not None else None)


def jc_analytic_population(g: float, t, hbar: float = 1.0):
    """Excited-state population of the resonant single-excitation exchange."""
    return np.cos(np.asarray(t) * g / hbar) ** 2


def pure_decay_population(gamma: float, t):
    """Occupied-state population of a bare decaying mode."""
    return np.exp(-gamma * np.asarray(t))


def full_tensor_states(mode_table: Sequence[ModeSpec]):
    """Every configuration of the full tensor product, cutoffs included."""
    photon_ranges = [range(spec.cutoff + 1) for spec in mode_table]
    electron_ranges = [range(2)] * N_ELECTRON_SLOTS
    for photons in itertools.product(*photon_ranges):
        for electrons in itertools.product(*electron_ranges):
            for k in (0, 1):
                for k1 in (0, 1):
                    for k2 in (0, 1):
                        yield BasisState(photons, electrons, k, (k1, k2))


def full_tensor_size(mode_table: Sequence[ModeSpec]) -> int:
    size = 8 * (2 ** N_ELECTRON_SLOTS)
    for spec in mode_table:
        size *= spec.cutoff + 1
    return size


def enumerate_closure_bruteforce(initial: BasisState, generators,
                                 mode_table: Sequence[ModeSpec]):
    """Full tensor enumeration followed by fixed-point closure filtering.

    Materializes the entire tensor-product space, then repeatedly sweeps
    the reached set, adding every generator image, until nothing changes.
    Every image must already belong to the full enumeration.  Returns the
    reached states sorted lexicographically.
    """
    universe = set(full_tensor_states(mode_table))
    if initial not in universe:
        raise ValueError("initial state violates the cutoffs")
    reached = {initial}
    changed = True
    while changed:
        changed = False
        for state in list(reached):
            for rule in generators:
                for image in rule(state):
                    if image not in universe:
                        raise ValueError(f"generator image {image} leaves the "
                                         "cutoff-respecting space")
                    if image not in reached:
                        reached.add(image)
                        changed = True
    return sorted(reached)
