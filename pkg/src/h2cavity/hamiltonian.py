"""Assembly of the five-term Hamiltonian and its conserved charges.

The total Hamiltonian is the sum of an associative block (molecular
orbitals exchanging photons while the nuclei share a cavity), a
dissociative block (two atoms exchanging photons while the nuclei are
apart), a nuclear tunnelling block whose intensity is graded by the
electron configuration, an excited-orbital electron spin-flip block and a
ground-orbital electron-nucleus spin-exchange block.

Interaction (off-diagonal) terms carry the sector projectors of the
model: molecular couplings act only when the nuclei are together, atomic
and spin couplings only when they are apart, and the per-atom
excited/ground gates are applied on both sides of the spin interactions
(projecting one side only is not Hermitian on a reachability-pruned
basis).

Diagonal (free-energy) terms support two schemes:

* ``"resonant"`` (default): every photon mode contributes its quantum
  count once, globally; matter counts mirror the mode each level pair
  couples to, and the molecular orbitals sit symmetrically around the
  atomic excitation energy (antibonding above, bonding below, split by
  the molecular mode frequency).  Under this scheme every allowed
  process conserves the diagonal energy exactly, which is what lets the
  tunnelling-mediated association actually proceed.
* ``"as_written"``: field and matter energies are projected onto their
  block's nuclear sector (associative energies exist only when the
  nuclei are together, and so on).  This makes every tunnelling
  transition strongly off-resonant; it is kept selectable for
  comparison studies.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from . import hilbert
from .hilbert import (
    Basis,
    BasisState,
    Mode,
    ModeSpec,
    Spin,
    TUNNEL_PATTERNS,
    antibonding_slot,
    bonding_slot,
    excited_gate,
    excited_slot,
    ground_gate,
    ground_slot,
)
from .operators import SparseOperator, transition_operator, diagonal_operator

HERMITICITY_RTOL = 1e-12

ENERGY_SCHEMES = ("resonant", "as_written")

JC_MODES = (Mode.MOL_UP, Mode.MOL_DOWN, Mode.ATOM_UP, Mode.ATOM_DOWN, Mode.SPIN_E)


class HermiticityError(ValueError):
    """An assembled Hamiltonian term failed its Hermiticity check."""


@dataclass(frozen=True)
class HamiltonianParams:
    """Physical constants of the model.

    ``frequencies`` maps every photon mode to its angular frequency and
    ``couplings`` maps the five exchange modes (all but the nuclear-spin
    mode) to their light-matter coupling strengths.  ``g_en`` is the
    electron-nucleus spin-exchange strength and the three ``zeta``
    values grade the nuclear tunnelling intensity by electron
    configuration: both antibonding, mixed, both bonding.
    """

    frequencies: Mapping[Mode, float]
    couplings: Mapping[Mode, float]
    g_en: float
    zeta2: float
    zeta1: float
    zeta0: float
    hbar: float = 1.0
    energy_scheme: str = "resonant"

    def __post_init__(self):
        freqs = {Mode(k) if not isinstance(k, Mode) else k: float(v)
                 for k, v in self.frequencies.items()}
        if set(freqs) != set(Mode):
            raise ValueError("frequencies must cover all six photon modes")
        if any(v <= 0 for v in freqs.values()):
            raise ValueError("frequencies must be positive")
        object.__setattr__(self, "frequencies", freqs)

        gs = {Mode(k) if not isinstance(k, Mode) else k: float(v)
              for k, v in self.couplings.items()}
        if not set(gs) <= set(JC_MODES):
            raise ValueError("couplings may only be given for the five exchange modes")
        if any(v < 0 for v in gs.values()):
            raise ValueError("couplings must be non-negative")
        for mode in JC_MODES:
            gs.setdefault(mode, 0.0)
        object.__setattr__(self, "couplings", gs)

        for name in ("g_en", "zeta2", "zeta1", "zeta0"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.hbar <= 0:
            raise ValueError("hbar must be positive")
        if self.energy_scheme not in ENERGY_SCHEMES:
            raise ValueError(f"energy_scheme must be one of {ENERGY_SCHEMES}")

    @property
    def zetas(self) -> Mapping[str, float]:
        return {
            "both_antibonding": self.zeta2,
            "up_bonding_down_antibonding": self.zeta1,
            "up_antibonding_down_bonding": self.zeta1,
            "both_bonding": self.zeta0,
        }


def _check_hermitian(op: SparseOperator, what: str) -> SparseOperator:
    gap = (op - op.adjoint()).max_abs()
    scale = op.max_abs() or 1.0
    if gap > HERMITICITY_RTOL * scale:
        raise HermiticityError(f"{what}: |H - H^dag| = {gap:.3e} exceeds "
                               f"{HERMITICITY_RTOL:.0e} * {scale:.3e}")
    return op


def _hermitian_pair(v: SparseOperator) -> SparseOperator:
    return v + v.adjoint()


def build_associative(basis: Basis, params: HamiltonianParams) -> SparseOperator:
    """Molecular block: photon energies, orbital energies and photon exchange."""
    hbar = params.hbar
    w = params.frequencies

    def emit_move(spin: Spin, cutoff: int, mode_index: int):
        hi, lo = antibonding_slot(spin), bonding_slot(spin)

        def move(s: BasisState):
            p = s.photons[mode_index]
            if s.nucleus_pos != 0 or s.electrons[hi] != 1 or s.electrons[lo] != 0:
                return None
            if p >= cutoff:
                return None
            image = s.with_electrons({hi: 0, lo: 1}).with_photon(mode_index, p + 1)
            return image, math.sqrt(p + 1)
        return move

    term = None
    for spin, mode in ((Spin.UP, Mode.MOL_UP), (Spin.DOWN, Mode.MOL_DOWN)):
        g = params.couplings[mode]
        if g == 0.0:
            continue
        v = g * transition_operator(
            basis, emit_move(spin, basis.mode_spec(mode).cutoff, mode.index))
        term = _hermitian_pair(v) if term is None else term + _hermitian_pair(v)

    def diag_resonant(s: BasisState):
        e = sum(w[m] * s.photons[m.index] for m in (Mode.MOL_UP, Mode.MOL_DOWN))
        if s.nucleus_pos == 0:
            for spin, m_mol, m_atom in ((Spin.UP, Mode.MOL_UP, Mode.ATOM_UP),
                                        (Spin.DOWN, Mode.MOL_DOWN, Mode.ATOM_DOWN)):
                e += (w[m_atom] + 0.5 * w[m_mol]) * s.electrons[antibonding_slot(spin)]
                e += (w[m_atom] - 0.5 * w[m_mol]) * s.electrons[bonding_slot(spin)]
        return hbar * e

    def diag_as_written(s: BasisState):
        if s.nucleus_pos != 0:
            return 0.0
        e = sum(w[m] * s.photons[m.index] for m in (Mode.MOL_UP, Mode.MOL_DOWN))
        for spin, m_mol in ((Spin.UP, Mode.MOL_UP), (Spin.DOWN, Mode.MOL_DOWN)):
            if (s.electrons[antibonding_slot(spin)] == 1
                    and s.electrons[bonding_slot(spin)] == 0):
                e += w[m_mol]
        return hbar * e

    diag = diag_resonant if params.energy_scheme == "resonant" else diag_as_written
    out = diagonal_operator(basis, diag)
    if term is not None:
        out = out + term
    return _check_hermitian(out, "associative block")


def build_dissociative(basis: Basis, params: HamiltonianParams) -> SparseOperator:
    """Atomic block: photon energies, excitation energies and photon exchange."""
    hbar = params.hbar
    w = params.frequencies

    def emit_move(atom: int, spin: Spin, cutoff: int, mode_index: int):
        hi, lo = excited_slot(atom, spin), ground_slot(atom, spin)

        def move(s: BasisState):
            p = s.photons[mode_index]
            if s.nucleus_pos != 1 or s.electrons[hi] != 1 or s.electrons[lo] != 0:
                return None
            if p >= cutoff:
                return None
            image = s.with_electrons({hi: 0, lo: 1}).with_photon(mode_index, p + 1)
            return image, math.sqrt(p + 1)
        return move

    term = None
    for spin, mode in ((Spin.UP, Mode.ATOM_UP), (Spin.DOWN, Mode.ATOM_DOWN)):
        g = params.couplings[mode]
        if g == 0.0:
            continue
        cutoff = basis.mode_spec(mode).cutoff
        for atom in (1, 2):
            v = g * transition_operator(basis, emit_move(atom, spin, cutoff, mode.index))
            term = _hermitian_pair(v) if term is None else term + _hermitian_pair(v)

    def diag_resonant(s: BasisState):
        e = sum(w[m] * s.photons[m.index] for m in (Mode.ATOM_UP, Mode.ATOM_DOWN))
        if s.nucleus_pos == 1:
            for spin, mode in ((Spin.UP, Mode.ATOM_UP), (Spin.DOWN, Mode.ATOM_DOWN)):
                for atom in (1, 2):
                    e += w[mode] * s.electrons[excited_slot(atom, spin)]
        return hbar * e

    def diag_as_written(s: BasisState):
        if s.nucleus_pos != 1:
            return 0.0
        e = sum(w[m] * s.photons[m.index] for m in (Mode.ATOM_UP, Mode.ATOM_DOWN))
        for spin, mode in ((Spin.UP, Mode.ATOM_UP), (Spin.DOWN, Mode.ATOM_DOWN)):
            for atom in (1, 2):
                if (s.electrons[excited_slot(atom, spin)] == 1
                        and s.electrons[ground_slot(atom, spin)] == 0):
                    e += w[mode]
        return hbar * e

    diag = diag_resonant if params.energy_scheme == "resonant" else diag_as_written
    out = diagonal_operator(basis, diag)
    if term is not None:
        out = out + term
    return _check_hermitian(out, "dissociative block")


def build_tunneling(basis: Basis, params: HamiltonianParams) -> SparseOperator:
    """Nuclear tunnelling graded by the electron pattern on the orbital registers."""
    tiers = [(dict(TUNNEL_PATTERNS[name]), zeta)
             for name, zeta in params.zetas.items() if zeta != 0.0]

    def move(s: BasisState):
        if s.nucleus_pos != 1:
            return None
        for pattern, zeta in tiers:
            if all(s.electrons[slot] == bit for slot, bit in pattern.items()):
                return s._replace(nucleus_pos=0), zeta
        return None

    return _check_hermitian(_hermitian_pair(transition_operator(basis, move)),
                            "tunnelling block")


def build_spin_flip(basis: Basis, params: HamiltonianParams) -> SparseOperator:
    """Excited-orbital electron spin flips, gated per atom on both sides."""
    hbar = params.hbar
    w_s = params.frequencies[Mode.SPIN_E]
    g = params.couplings[Mode.SPIN_E]
    cutoff = basis.mode_spec(Mode.SPIN_E).cutoff
    m = Mode.SPIN_E.index

    def emit_move(atom: int):
        hi, lo = excited_slot(atom, Spin.UP), excited_slot(atom, Spin.DOWN)

        def move(s: BasisState):
            p = s.photons[m]
            if (s.nucleus_pos != 1 or s.electrons[hi] != 1 or s.electrons[lo] != 0
                    or p >= cutoff or excited_gate(s.electrons, atom) == 0):
                return None
            image = s.with_electrons({hi: 0, lo: 1}).with_photon(m, p + 1)
            if excited_gate(image.electrons, atom) == 0:
                return None
            return image, math.sqrt(p + 1)
        return move

    term = None
    if g != 0.0:
        for atom in (1, 2):
            v = g * transition_operator(basis, emit_move(atom))
            term = _hermitian_pair(v) if term is None else term + _hermitian_pair(v)

    def diag_resonant(s: BasisState):
        spin_up_electrons = sum(s.electrons[excited_slot(a, Spin.UP)]
                                + s.electrons[ground_slot(a, Spin.UP)] for a in (1, 2))
        return hbar * w_s * (s.photons[m] + spin_up_electrons)

    def diag_as_written(s: BasisState):
        if s.nucleus_pos != 1:
            return 0.0
        e = 0.0
        for atom in (1, 2):
            gate = excited_gate(s.electrons, atom)
            if gate == 0:
                continue
            flip_pattern = (s.electrons[excited_slot(atom, Spin.UP)] == 1
                            and s.electrons[excited_slot(atom, Spin.DOWN)] == 0)
            e += gate * w_s * (s.photons[m] + (1.0 if flip_pattern else 0.0))
        return hbar * e

    diag = diag_resonant if params.energy_scheme == "resonant" else diag_as_written
    out = diagonal_operator(basis, diag)
    if term is not None:
        out = out + term
    return _check_hermitian(out, "spin-flip block")


def build_spin_spin(basis: Basis, params: HamiltonianParams) -> SparseOperator:
    """Ground-orbital electron-nucleus spin exchange, gated per atom on both sides."""
    hbar = params.hbar
    w_s = params.frequencies[Mode.SPIN_E]
    w_n = params.frequencies[Mode.SPIN_N]
    g = params.g_en
    m_s, m_n = Mode.SPIN_E.index, Mode.SPIN_N.index
    cutoff_n = basis.mode_spec(Mode.SPIN_N).cutoff

    def exchange_move(atom: int):
        up, down = ground_slot(atom, Spin.UP), ground_slot(atom, Spin.DOWN)

        def move(s: BasisState):
            p_s, p_n = s.photons[m_s], s.photons[m_n]
            if (s.nucleus_pos != 1 or ground_gate(s.electrons, atom) == 0
                    or s.electrons[down] != 1 or s.electrons[up] != 0
                    or s.nuclear_spins[atom - 1] != 1
                    or p_s == 0 or p_n >= cutoff_n):
                return None
            image = (s.with_electrons({down: 0, up: 1})
                     .with_photon(m_s, p_s - 1)
                     .with_photon(m_n, p_n + 1)
                     .with_nuclear_spin(atom, 0))
            if ground_gate(image.electrons, atom) == 0:
                return None
            return image, math.sqrt(p_s) * math.sqrt(p_n + 1)
        return move

    term = None
    if g != 0.0:
        for atom in (1, 2):
            v = g * transition_operator(basis, exchange_move(atom))
            term = _hermitian_pair(v) if term is None else term + _hermitian_pair(v)

    def diag_resonant(s: BasisState):
        return hbar * w_n * (s.photons[m_n] + sum(s.nuclear_spins))

    def diag_as_written(s: BasisState):
        if s.nucleus_pos != 1:
            return 0.0
        e = 0.0
        for atom in (1, 2):
            gate = ground_gate(s.electrons, atom)
            if gate == 0:
                continue
            gnd_pattern = (s.electrons[ground_slot(atom, Spin.UP)] == 1
                           and s.electrons[ground_slot(atom, Spin.DOWN)] == 0)
            e += gate * (w_s * (s.photons[m_s] + (1.0 if gnd_pattern else 0.0))
                         + w_n * (s.photons[m_n] + s.nuclear_spins[atom - 1]))
        return hbar * e

    diag = diag_resonant if params.energy_scheme == "resonant" else diag_as_written
    out = diagonal_operator(basis, diag)
    if term is not None:
        out = out + term
    return _check_hermitian(out, "spin-spin block")


TERM_BUILDERS = {
    "associative": build_associative,
    "dissociative": build_dissociative,
    "tunneling": build_tunneling,
    "spin_flip": build_spin_flip,
    "spin_spin": build_spin_spin,
}


def build_total(basis: Basis, params: HamiltonianParams) -> SparseOperator:
    """Sum of the five blocks, verified Hermitian."""
    total = None
    for builder in TERM_BUILDERS.values():
        term = builder(basis, params)
        total = term if total is None else total + term
    return _check_hermitian(total, "total Hamiltonian")


def charge_operators(basis: Basis) -> Mapping[str, SparseOperator]:
    """The four diagonal quantities that commute with the total Hamiltonian.

    Electron number; orbital quanta (atomic photons plus excited-register
    occupancy); spin quanta (electron-spin photons plus spin-up
    electrons); nuclear quanta (nuclear-spin photons plus spin-up
    nuclei).
    """
    def q_orbital(s: BasisState):
        return (s.photons[Mode.ATOM_UP.index] + s.photons[Mode.ATOM_DOWN.index]
                + sum(s.electrons[excited_slot(a, sp)] for a in (1, 2) for sp in Spin))

    def q_spin(s: BasisState):
        return (s.photons[Mode.SPIN_E.index]
                + sum(s.electrons[excited_slot(a, Spin.UP)]
                      + s.electrons[ground_slot(a, Spin.UP)] for a in (1, 2)))

    def q_nuclear(s: BasisState):
        return s.photons[Mode.SPIN_N.index] + sum(s.nuclear_spins)

    return {
        "electron_number": diagonal_operator(basis, lambda s: float(sum(s.electrons))),
        "orbital_quanta": diagonal_operator(basis, q_orbital),
        "spin_quanta": diagonal_operator(basis, q_spin),
        "nuclear_quanta": diagonal_operator(basis, q_nuclear),
    }


def commutator_max(a: SparseOperator, b: SparseOperator) -> float:
    """Max-norm of the sparse commutator [A, B]."""
    return (a @ b - b @ a).max_abs()


def transition_rules(mode_table: Sequence[ModeSpec],
                     params: HamiltonianParams,
                     force_influx: Iterable[Mode] = ()) -> list:
    """Reachability generators matching the model's nonzero processes.

    Includes one rule per active coupling, tunnelling tier and exchange,
    plus photon loss for every leaky mode and photon influx for every
    mode with a nonzero influx ratio.  ``force_influx`` adds influx rules
    for extra modes so that, e.g., every point of an influx-ratio sweep
    shares a single basis.
    """
    specs = {spec.label: spec for spec in mode_table}
    rules = []
    for spin, mode in ((Spin.UP, Mode.MOL_UP), (Spin.DOWN, Mode.MOL_DOWN)):
        if params.couplings[mode] != 0.0:
            rules.append(hilbert.molecular_coupling_rule(spin, specs[mode].cutoff))
    for spin, mode in ((Spin.UP, Mode.ATOM_UP), (Spin.DOWN, Mode.ATOM_DOWN)):
        if params.couplings[mode] != 0.0:
            for atom in (1, 2):
                rules.append(hilbert.atomic_coupling_rule(atom, spin, specs[mode].cutoff))
    active_patterns = [TUNNEL_PATTERNS[name]
                       for name, zeta in params.zetas.items() if zeta != 0.0]
    if active_patterns:
        rules.append(hilbert.tunneling_rule(active_patterns))
    if params.couplings[Mode.SPIN_E] != 0.0:
        for atom in (1, 2):
            rules.append(hilbert.spinflip_coupling_rule(atom, specs[Mode.SPIN_E].cutoff))
    if params.g_en != 0.0:
        for atom in (1, 2):
            rules.append(hilbert.exchange_rule(atom, specs[Mode.SPIN_E].cutoff,
                                               specs[Mode.SPIN_N].cutoff))
    forced = set(force_influx)
    for spec in mode_table:
        if spec.gamma_out > 0:
            rules.append(hilbert.photon_loss_rule(spec.label.index))
        if spec.mu > 0 or spec.label in forced:
            rules.append(hilbert.photon_gain_rule(spec.label.index, spec.cutoff))
    return rules


def sparse_triplets_csv(op: SparseOperator) -> str:
    """Triplet dump (row, col, re, im) for cross-checking matrices externally."""
    coo = op.matrix.tocoo()
    order = np.lexsort((coo.col, coo.row))
    buf = io.StringIO()
    buf.write("row,col,re,im\n")
    for i in order:
        buf.write(f"{coo.row[i]},{coo.col[i]},"
                  f"{coo.data[i].real:.17g},{coo.data[i].imag:.17g}\n")
    return buf.getvalue()
