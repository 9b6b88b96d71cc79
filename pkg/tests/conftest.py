import numpy as np
import pytest

from h2cavity.hilbert import Basis, Mode, ModeSpec
from h2cavity.oracle import full_tensor_states
from h2cavity import experiments as xp


def make_mode_table(mu=None, cutoffs=None, gamma=1e7):
    """Shipped frequencies with configurable influx ratios and cutoffs."""
    mu = mu or {}
    cutoffs = cutoffs or {}
    return tuple(
        ModeSpec(label=m, frequency=xp.FREQUENCIES[m], gamma_out=gamma,
                 mu=float(mu.get(m, 0.0)),
                 cutoff=int(cutoffs.get(m, 0)))
        for m in Mode)


def make_full_basis(mode_table):
    """Full tensor-product basis (no reachability pruning); exact products hold."""
    states = tuple(sorted(full_tensor_states(mode_table)))
    return Basis(states=states, mode_table=mode_table)


@pytest.fixture(scope="session")
def matter_basis():
    """Zero-photon full basis: 256 electron patterns x 8 nuclear sectors."""
    return make_full_basis(make_mode_table())


@pytest.fixture(scope="session")
def photon_basis():
    """Full basis with room in the molecular-up and both spin modes."""
    cutoffs = {Mode.MOL_UP: 2, Mode.SPIN_E: 1, Mode.SPIN_N: 1}
    return make_full_basis(make_mode_table(cutoffs=cutoffs))


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
