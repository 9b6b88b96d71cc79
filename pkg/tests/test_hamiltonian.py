import numpy as np
import pytest
import scipy.sparse as sp

from h2cavity import experiments as xp
from h2cavity.hamiltonian import (
    HamiltonianParams,
    build_associative,
    build_dissociative,
    build_spin_flip,
    build_spin_spin,
    build_total,
    build_tunneling,
    charge_operators,
    commutator_max,
    sparse_triplets_csv,
    transition_rules,
)
from h2cavity.hilbert import Mode, Spin, enumerate_reachable, make_state
from h2cavity.operators import SparseOperator

from conftest import make_full_basis, make_mode_table


def params(scheme="resonant", **overrides):
    kw = dict(frequencies=xp.FREQUENCIES, couplings=xp.COUPLINGS, g_en=xp.G_EN,
              zeta2=xp.ZETA2, zeta1=xp.ZETA1, zeta0=xp.ZETA0, hbar=1.0,
              energy_scheme=scheme)
    kw.update(overrides)
    return HamiltonianParams(**kw)


def idx(basis, photons, electrons, k, spins=(1, 1)):
    bits = [0] * 8
    for slot in electrons:
        bits[slot] = 1
    i = basis.index_of(make_state(photons, bits, k, spins))
    assert i is not None
    return i


@pytest.fixture(scope="module")
def shipped_basis():
    cfg = xp.formation_experiment()
    rules = transition_rules(cfg.mode_table, cfg.params,
                             force_influx=cfg.force_influx)
    return enumerate_reachable(cfg.initial, rules, cfg.mode_table)


class TestParams:
    def test_frequency_coverage_required(self):
        with pytest.raises(ValueError):
            HamiltonianParams(frequencies={Mode.MOL_UP: 5e9}, couplings={},
                              g_en=0, zeta2=0, zeta1=0, zeta0=0)

    def test_no_coupling_on_nuclear_spin_mode(self):
        with pytest.raises(ValueError):
            params(couplings={**xp.COUPLINGS, Mode.SPIN_N: 1.0})

    def test_unknown_scheme_rejected(self):
        with pytest.raises(ValueError):
            params(energy_scheme="bogus")


class TestAssociative:
    def test_photon_exchange_element(self, photon_basis):
        h = build_associative(photon_basis, params())
        src = idx(photon_basis, (0,) * 6, (0,), 0)       # antibonding up occupied
        dst = idx(photon_basis, (1, 0, 0, 0, 0, 0), (4,), 0)
        assert h.matrix[dst, src] == pytest.approx(xp.COUPLINGS[Mode.MOL_UP])

    def test_as_written_vanishes_on_separated_sector(self, photon_basis):
        h = build_associative(photon_basis, params("as_written"))
        row = idx(photon_basis, (1, 0, 0, 0, 0, 0), (0,), 1)
        dense_row = np.abs(h.matrix[row].toarray())
        dense_col = np.abs(h.matrix[:, row].toarray())
        assert dense_row.max() == 0.0 and dense_col.max() == 0.0

    def test_as_written_diagonal_with_zero_couplings(self, photon_basis):
        p = params("as_written", couplings={m: 0.0 for m in xp.COUPLINGS})
        h = build_associative(photon_basis, p).matrix
        off = h - sp.diags(h.diagonal(), format="csr")
        assert off.nnz == 0
        i = idx(photon_basis, (2, 0, 0, 0, 0, 0), (0,), 0)   # two photons + antibonding
        assert h.diagonal()[i].real == pytest.approx(xp.FREQUENCIES[Mode.MOL_UP] * 3)


class TestDissociative:
    def test_photon_exchange_element(self):
        # atomic relaxation of the spin-down electron emits one photon
        table = make_mode_table(cutoffs={Mode.ATOM_DOWN: 1})
        basis = make_full_basis(table)
        h = build_dissociative(basis, params())
        src = idx(basis, (0, 0, 0, 1, 0, 0), (3,), 1)
        dst = idx(basis, (0, 0, 0, 0, 0, 0), (1,), 1)
        assert h.matrix[src, dst] == pytest.approx(xp.COUPLINGS[Mode.ATOM_DOWN])

    def test_as_written_vanishes_on_together_sector(self, matter_basis):
        h = build_dissociative(matter_basis, params("as_written"))
        row = idx(matter_basis, (0,) * 6, (1,), 0)
        assert np.abs(h.matrix[row].toarray()).max() == 0.0

    @pytest.mark.parametrize("scheme", ["resonant", "as_written"])
    def test_atom_swap_symmetry(self, matter_basis, scheme):
        # relabeling the atoms permutes the dissociative block onto itself
        h = build_dissociative(matter_basis, params(scheme)).to_dense()
        n = len(matter_basis)
        perm = np.empty(n, dtype=int)
        for i, s in enumerate(matter_basis.states):
            swapped = s._replace(
                electrons=s.electrons[4:] + s.electrons[:4],
                nuclear_spins=(s.nuclear_spins[1], s.nuclear_spins[0]))
            perm[i] = matter_basis.index_of(swapped)
        assert np.abs(h[np.ix_(perm, perm)] - h).max() == 0.0


class TestTunneling:
    def test_mixed_pattern_couples_sectors_with_weak_tier(self, matter_basis):
        h = build_tunneling(matter_basis, params())
        apart = idx(matter_basis, (0,) * 6, (0, 5), 1)
        together = idx(matter_basis, (0,) * 6, (0, 5), 0)
        assert h.matrix[together, apart] == pytest.approx(xp.ZETA1)

    def test_both_antibonding_pattern_uses_strong_tier(self, matter_basis):
        h = build_tunneling(matter_basis, params())
        apart = idx(matter_basis, (0,) * 6, (0, 1), 1)
        together = idx(matter_basis, (0,) * 6, (0, 1), 0)
        assert h.matrix[together, apart] == pytest.approx(xp.ZETA2)

    def test_stable_molecule_does_not_tunnel(self, matter_basis):
        h = build_tunneling(matter_basis, params())
        together = idx(matter_basis, (0,) * 6, (4, 5), 0)
        assert np.abs(h.matrix[:, together].toarray()).max() == 0.0

    def test_hermitian(self, matter_basis):
        h = build_tunneling(matter_basis, params())
        assert (h - h.adjoint()).max_abs() == 0.0


class TestSpinFlip:
    def test_flip_element(self, photon_basis):
        h = build_spin_flip(photon_basis, params())
        src = idx(photon_basis, (0,) * 6, (0,), 1)           # excited up, no photon
        photons = [0] * 6
        photons[Mode.SPIN_E.index] = 1
        dst = idx(photon_basis, photons, (1,), 1)            # excited down, one photon
        assert h.matrix[dst, src] == pytest.approx(xp.COUPLINGS[Mode.SPIN_E])

    def test_as_written_vanishes_on_together_sector(self, photon_basis):
        h = build_spin_flip(photon_basis, params("as_written"))
        row = idx(photon_basis, (0,) * 6, (0,), 0)
        assert np.abs(h.matrix[row].toarray()).max() == 0.0

    def test_no_flip_for_ground_electron(self, photon_basis):
        for scheme in ("resonant", "as_written"):
            h = build_spin_flip(photon_basis, params(scheme)).matrix.copy()
            h.setdiag(0.0)
            h.eliminate_zeros()
            photons = [0] * 6
            photons[Mode.SPIN_E.index] = 1
            col = idx(photon_basis, photons, (2,), 1)        # only a ground electron
            assert np.abs(h[:, col].toarray()).max() == 0.0

    def test_gate_applies_on_both_sides(self, photon_basis):
        # a doubly occupied atom whose flipped image fails the excited gate
        # must not couple; one-sided projection would break Hermiticity
        h = build_spin_flip(photon_basis, params())
        photons = [0] * 6
        photons[Mode.SPIN_E.index] = 1
        src = idx(photon_basis, photons, (1, 2), 1)   # excited down + ground up
        dst = idx(photon_basis, (0,) * 6, (0, 2), 1)  # image fails the gate
        assert h.matrix[dst, src] == 0.0
        assert h.matrix[src, dst] == 0.0


class TestSpinSpin:
    def test_exchange_element(self, photon_basis):
        h = build_spin_spin(photon_basis, params())
        photons_in = [0] * 6
        photons_in[Mode.SPIN_E.index] = 1
        photons_out = [0] * 6
        photons_out[Mode.SPIN_N.index] = 1
        src = idx(photon_basis, photons_in, (3,), 1, (1, 1))
        dst = idx(photon_basis, photons_out, (2,), 1, (0, 1))
        assert h.matrix[dst, src] == pytest.approx(xp.G_EN)

    def test_no_exchange_for_excited_electron(self, photon_basis):
        h = build_spin_spin(photon_basis, params()).matrix.copy()
        h.setdiag(0.0)
        h.eliminate_zeros()
        photons = [0] * 6
        photons[Mode.SPIN_E.index] = 1
        col = idx(photon_basis, photons, (1,), 1)
        assert np.abs(h[:, col].toarray()).max() == 0.0

    @pytest.mark.parametrize("scheme", ["resonant", "as_written"])
    def test_diagonal_counts_nuclear_photons(self, photon_basis, scheme):
        h = build_spin_spin(photon_basis, params(scheme))
        photons = [0] * 6
        photons[Mode.SPIN_N.index] = 1
        # one ground electron in atom 1, nuclei apart: the gate is open
        i = idx(photon_basis, photons, (3, 4), 1, (0, 0))
        assert h.matrix[i, i].real == pytest.approx(xp.FREQUENCIES[Mode.SPIN_N])


class TestTotal:
    def test_zero_couplings_make_it_diagonal(self, photon_basis):
        p = params(couplings={m: 0.0 for m in xp.COUPLINGS},
                   g_en=0.0, zeta2=0.0, zeta1=0.0, zeta0=0.0)
        h = build_total(photon_basis, p).matrix
        off = h - sp.diags(h.diagonal(), format="csr")
        assert off.nnz == 0

    @pytest.mark.parametrize("scheme", ["resonant", "as_written"])
    def test_hermitian_on_shipped_configuration(self, shipped_basis, scheme):
        h = build_total(shipped_basis, params(scheme))
        assert (h - h.adjoint()).max_abs() <= 1e-12 * h.max_abs()

    @pytest.mark.parametrize("scheme", ["resonant", "as_written"])
    def test_charges_commute(self, shipped_basis, scheme):
        h = build_total(shipped_basis, params(scheme))
        bound = 1e-10 * h.max_abs()
        for name, q in charge_operators(shipped_basis).items():
            assert commutator_max(h, q) <= bound, name

    def test_resonant_scheme_balances_tunneling_energies(self, shipped_basis):
        # every tunnelling matrix element connects configurations with equal
        # diagonal energy, which is what lets association proceed at all
        h = build_total(shipped_basis, params("resonant"))
        diag = h.matrix.diagonal().real
        tun = build_tunneling(shipped_basis, params("resonant")).matrix.tocoo()
        gaps = np.abs(diag[tun.row] - diag[tun.col])
        assert gaps.max() <= 1e-6 * np.abs(diag).max()

    def test_as_written_strands_tunneling_energies(self, shipped_basis):
        h = build_total(shipped_basis, params("as_written"))
        diag = h.matrix.diagonal().real
        tun = build_tunneling(shipped_basis, params("as_written")).matrix.tocoo()
        off = tun.row != tun.col
        gaps = np.abs(diag[tun.row[off]] - diag[tun.col[off]])
        assert gaps.min() >= 1e10   # hopelessly off-resonant vs zeta1 = 1e7


class TestRulesAndDump:
    def test_influx_rule_only_for_thermal_or_forced_modes(self):
        table = make_mode_table(mu={Mode.SPIN_E: 0.5},
                                cutoffs={Mode.SPIN_E: 1, Mode.SPIN_N: 1})
        base = len(transition_rules(table, params()))
        forced = len(transition_rules(table, params(), force_influx=[Mode.SPIN_N]))
        assert forced == base + 1

    def test_triplet_dump_round_trips(self, matter_basis):
        h = build_tunneling(matter_basis, params())
        text = sparse_triplets_csv(h)
        lines = text.strip().splitlines()
        assert lines[0] == "row,col,re,im"
        rows, cols, res, ims = [], [], [], []
        for line in lines[1:]:
            r, c, re, im = line.split(",")
            rows.append(int(r)); cols.append(int(c))
            res.append(float(re)); ims.append(float(im))
        rebuilt = sp.csr_matrix((np.array(res) + 1j * np.array(ims),
                                 (rows, cols)), shape=h.matrix.shape)
        assert (SparseOperator(rebuilt, h.basis_uid) - h).max_abs() == 0.0
