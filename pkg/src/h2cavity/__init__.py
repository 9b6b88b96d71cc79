"""Cavity-QED simulator of neutral hydrogen molecule association and dissociation.

Two two-level artificial atoms on quantum dots sit in coupled optical
cavities together with six quantized photon modes.  Electrons carry spin
and can hybridize into molecular orbitals when the nuclei share a cavity;
nuclei carry spin and move between cavities by quantum tunnelling.  The
package builds the composite occupation-number basis, assembles the
Hamiltonian and the Lindblad emission/influx channels, and integrates the
master equation with a split-step scheme (exact unitary conjugation plus
an explicit Euler dissipative step).
"""

from .hilbert import (
    Basis,
    BasisState,
    Mode,
    ModeSpec,
    Spin,
    enumerate_reachable,
)
from .operators import SparseOperator
from .hamiltonian import HamiltonianParams, build_total
from .lindblad import Channel, gibbs_field_state, mu_from_temperature, temperature_from_mu
from .evolve import Propagator, Trajectory, run, spectral_propagator
from .experiments import ExperimentConfig, formation_experiment, mu_sweep

__all__ = [
    "Basis",
    "BasisState",
    "Channel",
    "ExperimentConfig",
    "HamiltonianParams",
    "Mode",
    "ModeSpec",
    "Propagator",
    "SparseOperator",
    "Spin",
    "Trajectory",
    "build_total",
    "enumerate_reachable",
    "formation_experiment",
    "gibbs_field_state",
    "mu_from_temperature",
    "mu_sweep",
    "run",
    "spectral_propagator",
    "temperature_from_mu",
]

__version__ = "0.1.0"
