"""Composite occupation-number basis and reachable-state enumeration.

A configuration of the full system is a tuple of

* six photon counts, one per cavity mode,
* eight electron occupation bits (two atoms x two orbitals x two spins),
* one nucleus-position bit (1 = nuclei in different cavities, 0 = together),
* two nuclear-spin bits (1 = up, 0 = down).

When the nuclei share a cavity the two excited-orbital registers are
re-read as molecular orbitals: the atom-1 excited slots hold the
antibonding orbital and the atom-2 excited slots hold the bonding
orbital, separately for each spin.  This keeps occupation counts intact
across tunnelling events.

The state space actually used by the simulator is not the full tensor
product but its closure under a configurable set of transition rules
(the processes appearing in the Hamiltonian plus photon loss and influx).
Enumeration order is lexicographic on the canonical field order, so every
matrix built on a basis is reproducible bit for bit.
"""

from __future__ import annotations

import enum
import itertools
import json
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, NamedTuple, Sequence

N_PHOTON_MODES = 6
N_ELECTRON_SLOTS = 8


class Mode(enum.Enum):
    """Photon modes, in canonical order of the photon-count tuple."""

    MOL_UP = "omega_up"        # molecular transition, spin up
    MOL_DOWN = "omega_down"    # molecular transition, spin down
    ATOM_UP = "Omega_up"       # atomic transition, spin up
    ATOM_DOWN = "Omega_down"   # atomic transition, spin down
    SPIN_E = "Omega_s"         # electron spin flip
    SPIN_N = "Omega_n"         # nuclear spin flip

    @property
    def index(self) -> int:
        return _MODE_ORDER.index(self)

    @classmethod
    def from_label(cls, label: str) -> "Mode":
        for mode in cls:
            if mode.value == label:
                return mode
        raise UnknownModeError(f"unknown photon mode label {label!r}")


_MODE_ORDER = (Mode.MOL_UP, Mode.MOL_DOWN, Mode.ATOM_UP, Mode.ATOM_DOWN,
               Mode.SPIN_E, Mode.SPIN_N)


class Spin(enum.Enum):
    UP = "up"
    DOWN = "down"


class UnknownModeError(KeyError):
    pass


class InvalidStateError(ValueError):
    """A configuration violates a cutoff or bit-range constraint."""


def excited_slot(atom: int, spin: Spin) -> int:
    """Electron-register position of the excited orbital of one atom/spin."""
    return 4 * (atom - 1) + (0 if spin is Spin.UP else 1)


def ground_slot(atom: int, spin: Spin) -> int:
    """Electron-register position of the ground orbital of one atom/spin."""
    return 4 * (atom - 1) + 2 + (0 if spin is Spin.UP else 1)


# Molecular re-reading of the excited registers when the nuclei are together.
def antibonding_slot(spin: Spin) -> int:
    return excited_slot(1, spin)


def bonding_slot(spin: Spin) -> int:
    return excited_slot(2, spin)


@dataclass(frozen=True)
class ModeSpec:
    """One photon mode: frequency, loss rate, influx ratio and Fock cutoff.

    ``mu`` is the ratio of the spontaneous influx rate to the emission
    rate; it must stay below 1 for the associated thermal field state to
    be normalizable.
    """

    label: Mode
    frequency: float        # angular frequency, rad/s
    gamma_out: float        # emission (leak) rate, 1/s
    mu: float               # influx ratio gamma_in / gamma_out, in [0, 1)
    cutoff: int             # largest retained Fock occupancy

    def __post_init__(self):
        if not isinstance(self.label, Mode):
            object.__setattr__(self, "label", Mode.from_label(self.label))
        if self.frequency <= 0:
            raise ValueError(f"{self.label.value}: frequency must be positive")
        if self.gamma_out < 0:
            raise ValueError(f"{self.label.value}: gamma_out must be non-negative")
        if not 0.0 <= self.mu < 1.0:
            raise ValueError(f"{self.label.value}: mu must lie in [0, 1)")
        if self.cutoff < 0 or int(self.cutoff) != self.cutoff:
            raise ValueError(f"{self.label.value}: cutoff must be a non-negative integer")

    @property
    def gamma_in(self) -> float:
        return self.mu * self.gamma_out


class BasisState(NamedTuple):
    """One composite configuration.  Ordering of fields defines sort order."""

    photons: tuple      # six counts, canonical mode order
    electrons: tuple    # eight occupation bits
    nucleus_pos: int    # 1 = apart, 0 = together
    nuclear_spins: tuple  # (k1, k2), 1 = up

    def with_photon(self, mode_index: int, count: int) -> "BasisState":
        p = list(self.photons)
        p[mode_index] = count
        return self._replace(photons=tuple(p))

    def with_electrons(self, changes: Mapping[int, int]) -> "BasisState":
        e = list(self.electrons)
        for slot, bit in changes.items():
            e[slot] = bit
        return self._replace(electrons=tuple(e))

    def with_nuclear_spin(self, atom: int, bit: int) -> "BasisState":
        s = list(self.nuclear_spins)
        s[atom - 1] = bit
        return self._replace(nuclear_spins=tuple(s))

    def record(self) -> dict:
        return {
            "photons": list(self.photons),
            "electrons": list(self.electrons),
            "k": self.nucleus_pos,
            "k1": self.nuclear_spins[0],
            "k2": self.nuclear_spins[1],
        }


def make_state(photons, electrons, nucleus_pos, nuclear_spins) -> BasisState:
    return BasisState(tuple(int(p) for p in photons),
                      tuple(int(b) for b in electrons),
                      int(nucleus_pos),
                      tuple(int(b) for b in nuclear_spins))


def validate_state(state: BasisState, cutoffs: Sequence[int]) -> None:
    """Raise :class:`InvalidStateError` if the configuration is malformed."""
    if len(state.photons) != N_PHOTON_MODES or len(state.electrons) != N_ELECTRON_SLOTS:
        raise InvalidStateError("wrong field widths in basis state")
    for m, (p, c) in enumerate(zip(state.photons, cutoffs)):
        if not 0 <= p <= c:
            raise InvalidStateError(
                f"photon count {p} outside [0, {c}] for mode index {m}")
    if any(b not in (0, 1) for b in state.electrons):
        raise InvalidStateError("electron occupancies must be 0/1 bits")
    if state.nucleus_pos not in (0, 1):
        raise InvalidStateError("nucleus position must be a 0/1 bit")
    if any(b not in (0, 1) for b in state.nuclear_spins) or len(state.nuclear_spins) != 2:
        raise InvalidStateError("nuclear spins must be two 0/1 bits")


# A transition rule maps a configuration to the configurations it connects
# to (in every direction it acts).  Amplitudes are irrelevant here; rules
# only drive reachability.
TransitionRule = Callable[[BasisState], Iterable[BasisState]]

_basis_uid = itertools.count(1)


@dataclass(frozen=True)
class Basis:
    """An ordered, immutable set of configurations with exact index lookup."""

    states: tuple
    mode_table: tuple
    uid: int = field(default_factory=lambda: next(_basis_uid))
    _index: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if not self._index:
            self._index.update({s: i for i, s in enumerate(self.states)})
        if len(self._index) != len(self.states):
            raise ValueError("basis states are not unique")

    def __len__(self) -> int:
        return len(self.states)

    @property
    def dim(self) -> int:
        return len(self.states)

    @property
    def cutoffs(self) -> tuple:
        return tuple(spec.cutoff for spec in self.mode_table)

    def mode_spec(self, mode: Mode) -> ModeSpec:
        for spec in self.mode_table:
            if spec.label is mode:
                return spec
        raise UnknownModeError(f"mode {mode} not in basis mode table")

    def index_of(self, state: BasisState):
        """Position of ``state`` in the enumeration, or ``None`` if absent."""
        return self._index.get(state)

    def to_json(self) -> str:
        """Dump the enumeration as a JSON array, in enumeration order."""
        return json.dumps([s.record() for s in self.states], indent=1)


def _sorted_mode_table(mode_table: Sequence[ModeSpec]) -> tuple:
    table = {spec.label: spec for spec in mode_table}
    if len(table) != N_PHOTON_MODES:
        raise ValueError("mode table must contain each of the six modes exactly once")
    return tuple(table[m] for m in _MODE_ORDER)


def enumerate_reachable(initial: BasisState,
                        generators: Sequence[TransitionRule],
                        mode_table: Sequence[ModeSpec]) -> Basis:
    """Close ``initial`` under the given transition rules.

    Returns the smallest cutoff-respecting state set that contains
    ``initial`` and is invariant under every generator, enumerated in
    lexicographic order.  An empty generator list yields the singleton
    basis.
    """
    table = _sorted_mode_table(mode_table)
    cutoffs = tuple(spec.cutoff for spec in table)
    validate_state(initial, cutoffs)

    seen = {initial}
    frontier = [initial]
    while frontier:
        state = frontier.pop()
        for rule in generators:
            for image in rule(state):
                if image in seen:
                    continue
                validate_state(image, cutoffs)
                seen.add(image)
                frontier.append(image)

    states = tuple(sorted(seen))
    return Basis(states=states, mode_table=table)


# ---------------------------------------------------------------------------
# Transition-rule factories.  Each mirrors one process of the model; the
# Hamiltonian and channel builders produce exactly these matrix elements.
# ---------------------------------------------------------------------------

def photon_loss_rule(mode_index: int) -> TransitionRule:
    def rule(s: BasisState):
        if s.photons[mode_index] > 0:
            yield s.with_photon(mode_index, s.photons[mode_index] - 1)
    return rule


def photon_gain_rule(mode_index: int, cutoff: int) -> TransitionRule:
    def rule(s: BasisState):
        if s.photons[mode_index] < cutoff:
            yield s.with_photon(mode_index, s.photons[mode_index] + 1)
    return rule


def _paired_swap(s: BasisState, hi: int, lo: int, mode_index: int, cutoff: int):
    """Both directions of a Jaynes-Cummings pair on an electron slot pair."""
    e = s.electrons
    p = s.photons[mode_index]
    if e[hi] == 1 and e[lo] == 0 and p < cutoff:       # emit
        yield s.with_electrons({hi: 0, lo: 1}).with_photon(mode_index, p + 1)
    if e[hi] == 0 and e[lo] == 1 and p > 0:            # absorb
        yield s.with_electrons({hi: 1, lo: 0}).with_photon(mode_index, p - 1)


def molecular_coupling_rule(spin: Spin, cutoff: int) -> TransitionRule:
    """Antibonding/bonding exchange with a molecular photon; nuclei together."""
    hi, lo = antibonding_slot(spin), bonding_slot(spin)
    mode_index = (Mode.MOL_UP if spin is Spin.UP else Mode.MOL_DOWN).index

    def rule(s: BasisState):
        if s.nucleus_pos != 0:
            return
        yield from _paired_swap(s, hi, lo, mode_index, cutoff)
    return rule


def atomic_coupling_rule(atom: int, spin: Spin, cutoff: int) -> TransitionRule:
    """Excited/ground exchange with an atomic photon; nuclei apart."""
    hi, lo = excited_slot(atom, spin), ground_slot(atom, spin)
    mode_index = (Mode.ATOM_UP if spin is Spin.UP else Mode.ATOM_DOWN).index

    def rule(s: BasisState):
        if s.nucleus_pos != 1:
            return
        yield from _paired_swap(s, hi, lo, mode_index, cutoff)
    return rule


# Electron patterns (on the antibonding/bonding registers of both spins)
# that permit nuclear tunnelling, keyed by the intensity tier they carry.
TUNNEL_PATTERNS = {
    "both_antibonding": {antibonding_slot(Spin.UP): 1, bonding_slot(Spin.UP): 0,
                         antibonding_slot(Spin.DOWN): 1, bonding_slot(Spin.DOWN): 0},
    "up_bonding_down_antibonding": {antibonding_slot(Spin.UP): 0, bonding_slot(Spin.UP): 1,
                                    antibonding_slot(Spin.DOWN): 1, bonding_slot(Spin.DOWN): 0},
    "up_antibonding_down_bonding": {antibonding_slot(Spin.UP): 1, bonding_slot(Spin.UP): 0,
                                    antibonding_slot(Spin.DOWN): 0, bonding_slot(Spin.DOWN): 1},
    "both_bonding": {antibonding_slot(Spin.UP): 0, bonding_slot(Spin.UP): 1,
                     antibonding_slot(Spin.DOWN): 0, bonding_slot(Spin.DOWN): 1},
}


def tunneling_rule(active_patterns: Iterable[Mapping[int, int]]) -> TransitionRule:
    patterns = [dict(p) for p in active_patterns]

    def rule(s: BasisState):
        for pattern in patterns:
            if all(s.electrons[slot] == bit for slot, bit in pattern.items()):
                yield s._replace(nucleus_pos=1 - s.nucleus_pos)
                break
    return rule


def excited_gate(electrons: Sequence[int], atom: int) -> int:
    """How many spin species of one atom sit in the excited-not-ground pattern."""
    up = electrons[excited_slot(atom, Spin.UP)] == 1 and electrons[ground_slot(atom, Spin.UP)] == 0
    down = electrons[excited_slot(atom, Spin.DOWN)] == 1 and electrons[ground_slot(atom, Spin.DOWN)] == 0
    return int(up) + int(down)


def ground_gate(electrons: Sequence[int], atom: int) -> int:
    """How many spin species of one atom sit in the ground-not-excited pattern."""
    up = electrons[excited_slot(atom, Spin.UP)] == 0 and electrons[ground_slot(atom, Spin.UP)] == 1
    down = electrons[excited_slot(atom, Spin.DOWN)] == 0 and electrons[ground_slot(atom, Spin.DOWN)] == 1
    return int(up) + int(down)


def spinflip_coupling_rule(atom: int, cutoff: int) -> TransitionRule:
    """Excited-orbital electron spin flip with a spin photon; nuclei apart.

    The participating atom must pass the excited gate both before and
    after the flip; the interaction is projected on both sides, which is
    what keeps the assembled Hamiltonian Hermitian on a closed basis.
    """
    hi, lo = excited_slot(atom, Spin.UP), excited_slot(atom, Spin.DOWN)
    mode_index = Mode.SPIN_E.index

    def rule(s: BasisState):
        if s.nucleus_pos != 1 or excited_gate(s.electrons, atom) == 0:
            return
        for image in _paired_swap(s, hi, lo, mode_index, cutoff):
            if excited_gate(image.electrons, atom) > 0:
                yield image
    return rule


def exchange_rule(atom: int, cutoff_spin_e: int, cutoff_spin_n: int) -> TransitionRule:
    """Electron-nucleus spin exchange; nuclei apart, electron in its ground orbital.

    Forward: absorb an electron-spin photon, raise the ground-orbital
    electron spin, emit a nuclear-spin photon, lower the nuclear spin.
    The ground gate is required on both sides.
    """
    up, down = ground_slot(atom, Spin.UP), ground_slot(atom, Spin.DOWN)
    m_s, m_n = Mode.SPIN_E.index, Mode.SPIN_N.index

    def rule(s: BasisState):
        if s.nucleus_pos != 1 or ground_gate(s.electrons, atom) == 0:
            return
        e, p = s.electrons, s.photons
        spin = s.nuclear_spins[atom - 1]
        # forward exchange
        if (e[down] == 1 and e[up] == 0 and spin == 1
                and p[m_s] > 0 and p[m_n] < cutoff_spin_n):
            image = (s.with_electrons({down: 0, up: 1})
                     .with_photon(m_s, p[m_s] - 1)
                     .with_photon(m_n, p[m_n] + 1)
                     .with_nuclear_spin(atom, 0))
            if ground_gate(image.electrons, atom) > 0:
                yield image
        # reverse exchange
        if (e[up] == 1 and e[down] == 0 and spin == 0
                and p[m_n] > 0 and p[m_s] < cutoff_spin_e):
            image = (s.with_electrons({up: 0, down: 1})
                     .with_photon(m_s, p[m_s] + 1)
                     .with_photon(m_n, p[m_n] - 1)
                     .with_nuclear_spin(atom, 1))
            if ground_gate(image.electrons, atom) > 0:
                yield image
    return rule
