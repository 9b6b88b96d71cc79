"""Second-quantized operators as sparse matrices over an enumerated basis.

Every builder walks the basis once, applies a single transition to each
configuration and records a triplet when the image is also a member of
the basis.  On a dynamically closed basis this reproduces the compression
of the corresponding full-tensor-space operator exactly.  Transition
amplitudes are 1 for bit flips and sqrt(p) / sqrt(p+1) for the photon
ladder; creation annihilates configurations already at the Fock cutoff so
that creation and annihilation stay exact adjoints on the truncated
ladder.

No fermionic sign strings are attached: the model defines its electron
operators as plain bit-pair transitions with unit amplitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Optional, Tuple

import numpy as np
import scipy.sparse as sp

from .hilbert import (
    Basis,
    BasisState,
    Mode,
    Spin,
    UnknownModeError,
    antibonding_slot,
    bonding_slot,
    excited_slot,
    ground_slot,
)


class BasisMismatchError(ValueError):
    """Operands built over different bases were combined."""


@dataclass(frozen=True)
class SparseOperator:
    """Complex sparse matrix tied to the identity of the basis it acts on."""

    matrix: sp.csr_matrix
    basis_uid: int

    def __post_init__(self):
        m = self.matrix
        if not sp.issparse(m):
            m = sp.csr_matrix(m)
        m = m.tocsr().astype(np.complex128)
        m.sum_duplicates()
        m.eliminate_zeros()
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    def adjoint(self) -> "SparseOperator":
        return SparseOperator(self.matrix.conjugate().transpose().tocsr(), self.basis_uid)

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def _check(self, other: "SparseOperator") -> None:
        if not isinstance(other, SparseOperator):
            raise TypeError("expected a SparseOperator operand")
        if other.basis_uid != self.basis_uid:
            raise BasisMismatchError("operands act on different bases")
        if other.dim != self.dim:
            raise BasisMismatchError("operand dimensions differ")

    def __add__(self, other: "SparseOperator") -> "SparseOperator":
        self._check(other)
        return SparseOperator(self.matrix + other.matrix, self.basis_uid)

    def __sub__(self, other: "SparseOperator") -> "SparseOperator":
        self._check(other)
        return SparseOperator(self.matrix - other.matrix, self.basis_uid)

    def __mul__(self, scalar: complex) -> "SparseOperator":
        return SparseOperator(self.matrix * scalar, self.basis_uid)

    __rmul__ = __mul__

    def __neg__(self) -> "SparseOperator":
        return self * (-1.0)

    def __matmul__(self, other: "SparseOperator") -> "SparseOperator":
        self._check(other)
        return SparseOperator((self.matrix @ other.matrix).tocsr(), self.basis_uid)

    def max_abs(self) -> float:
        return 0.0 if self.nnz == 0 else float(np.abs(self.matrix.data).max())


def add(a: SparseOperator, b: SparseOperator,
        alpha: complex = 1.0, beta: complex = 1.0) -> SparseOperator:
    """alpha*A + beta*B on a shared basis."""
    a._check(b)
    return SparseOperator(alpha * a.matrix + beta * b.matrix, a.basis_uid)


def multiply(a: SparseOperator, b: SparseOperator) -> SparseOperator:
    return a @ b


def adjoint(a: SparseOperator) -> SparseOperator:
    return a.adjoint()


def identity(basis: Basis) -> SparseOperator:
    return SparseOperator(sp.identity(len(basis), dtype=np.complex128, format="csr"),
                          basis.uid)


def zero(basis: Basis) -> SparseOperator:
    return SparseOperator(sp.csr_matrix((len(basis), len(basis)), dtype=np.complex128),
                          basis.uid)


Move = Callable[[BasisState], Optional[Tuple[BasisState, complex]]]


def transition_operator(basis: Basis, move: Move) -> SparseOperator:
    """Assemble a sparse matrix from a one-transition-per-state move rule.

    Images that fall outside the basis are dropped, which realizes the
    compression of the full-space operator onto the enumerated subspace.
    """
    rows, cols, data = [], [], []
    for col, state in enumerate(basis.states):
        hit = move(state)
        if hit is None:
            continue
        image, amplitude = hit
        row = basis.index_of(image)
        if row is None:
            continue
        rows.append(row)
        cols.append(col)
        data.append(amplitude)
    matrix = sp.csr_matrix(
        (np.asarray(data, dtype=np.complex128), (rows, cols)),
        shape=(len(basis), len(basis)))
    return SparseOperator(matrix, basis.uid)


def diagonal_operator(basis: Basis, value: Callable[[BasisState], float]) -> SparseOperator:
    diag = np.array([value(s) for s in basis.states], dtype=np.complex128)
    return SparseOperator(sp.diags(diag, format="csr"), basis.uid)


def photon_ladder(basis: Basis, mode: Mode, direction: str) -> SparseOperator:
    """Annihilation (sqrt(p)) or creation (sqrt(p+1), truncated) on one mode."""
    spec = basis.mode_spec(mode)     # raises UnknownModeError for foreign labels
    m = mode.index

    if direction == "annihilate":
        def move(s: BasisState):
            p = s.photons[m]
            if p == 0:
                return None
            return s.with_photon(m, p - 1), math.sqrt(p)
    elif direction == "create":
        def move(s: BasisState):
            p = s.photons[m]
            if p >= spec.cutoff:
                return None
            return s.with_photon(m, p + 1), math.sqrt(p + 1)
    else:
        raise ValueError(f"direction must be 'annihilate' or 'create', got {direction!r}")
    return transition_operator(basis, move)


def photon_number(basis: Basis, mode: Mode) -> SparseOperator:
    """Diagonal occupation-count operator of one mode."""
    basis.mode_spec(mode)
    m = mode.index
    return diagonal_operator(basis, lambda s: s.photons[m])


def _pair_lower(basis: Basis, hi: int, lo: int) -> SparseOperator:
    """(hi=1, lo=0) -> (hi=0, lo=1) with unit amplitude; everything else to zero."""
    def move(s: BasisState):
        if s.electrons[hi] == 1 and s.electrons[lo] == 0:
            return s.with_electrons({hi: 0, lo: 1}), 1.0
        return None
    return transition_operator(basis, move)


def molecular_lower(basis: Basis, spin: Spin) -> SparseOperator:
    """Antibonding -> bonding relaxation for one spin (no photon, no gating)."""
    return _pair_lower(basis, antibonding_slot(spin), bonding_slot(spin))


def atomic_lower(basis: Basis, atom: int, spin: Spin) -> SparseOperator:
    """Excited -> ground relaxation within one atom and spin."""
    return _pair_lower(basis, excited_slot(atom, spin), ground_slot(atom, spin))


def nuclear_tunnel(basis: Basis) -> SparseOperator:
    """Nucleus-position lowering: apart -> together; adjoint reverses."""
    def move(s: BasisState):
        if s.nucleus_pos == 1:
            return s._replace(nucleus_pos=0), 1.0
        return None
    return transition_operator(basis, move)


def electron_spinflip(basis: Basis, atom: int, orbital: str) -> SparseOperator:
    """Spin lowering (up -> down) within one orbital level of one atom."""
    if orbital == "excited":
        hi, lo = excited_slot(atom, Spin.UP), excited_slot(atom, Spin.DOWN)
    elif orbital == "ground":
        hi, lo = ground_slot(atom, Spin.UP), ground_slot(atom, Spin.DOWN)
    else:
        raise ValueError(f"orbital must be 'excited' or 'ground', got {orbital!r}")
    return _pair_lower(basis, hi, lo)


def nuclear_spinflip(basis: Basis, atom: int) -> SparseOperator:
    """Nuclear-spin lowering (up -> down) of one nucleus."""
    def move(s: BasisState):
        if s.nuclear_spins[atom - 1] == 1:
            return s.with_nuclear_spin(atom, 0), 1.0
        return None
    return transition_operator(basis, move)


def spin_exchange(basis: Basis, atom: int) -> SparseOperator:
    """Electron-nucleus spin exchange as a product of its four factors.

    Absorbs one electron-spin photon, raises the ground-orbital electron
    spin, emits one nuclear-spin photon and lowers the nuclear spin.  The
    factors act on disjoint registers, so the product order is immaterial;
    on a reachability-pruned basis prefer the fused transition used by the
    Hamiltonian builder, since the factor product can lose entries whose
    intermediate configurations were pruned.
    """
    a_s = photon_ladder(basis, Mode.SPIN_E, "annihilate")
    raise_e = electron_spinflip(basis, atom, "ground").adjoint()
    create_n = photon_ladder(basis, Mode.SPIN_N, "create")
    lower_n = nuclear_spinflip(basis, atom)
    return a_s @ raise_e @ create_n @ lower_n


def pattern_projector(basis: Basis, pattern: Mapping[int, int]) -> SparseOperator:
    """Diagonal projector onto electron configurations matching slot=bit pairs."""
    items = tuple(pattern.items())
    return diagonal_operator(
        basis, lambda s: 1.0 if all(s.electrons[i] == b for i, b in items) else 0.0)


def nucleus_projector(basis: Basis, position: int) -> SparseOperator:
    """Diagonal projector onto one nucleus-position sector."""
    return diagonal_operator(basis, lambda s: 1.0 if s.nucleus_pos == position else 0.0)


def slot_occupancy(basis: Basis, slots: Iterable[int]) -> SparseOperator:
    """Diagonal count of electrons over a set of register slots."""
    idx = tuple(slots)
    return diagonal_operator(basis, lambda s: float(sum(s.electrons[i] for i in idx)))


def nuclear_up_count(basis: Basis) -> SparseOperator:
    """Diagonal count of spin-up nuclei."""
    return diagonal_operator(basis, lambda s: float(sum(s.nuclear_spins)))
