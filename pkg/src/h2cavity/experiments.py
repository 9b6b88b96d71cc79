"""Shipped experiment scenarios, influx-ratio sweeps and output emission.

The formation scenario prepares two spin-down electrons in the atomic
ground orbitals, both nuclei spin-up in different cavities, and one
photon in each of the atomic and electron-spin modes.  The two sweep
scenarios vary the influx ratio of the electron-spin or nuclear-spin
mode while holding the other thermal ratios at 0.5 and evaluate the
stable-molecule probability at a fixed time.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Optional, Sequence, Tuple

import numpy as np

from .hilbert import (
    Basis,
    BasisState,
    InvalidStateError,
    Mode,
    ModeSpec,
    Spin,
    ground_slot,
    make_state,
    validate_state,
)
from .hamiltonian import HamiltonianParams
from . import evolve as ev
from .evolve import MatterConfig, Trajectory, h2_projector, matter_config, matter_of
from . import svgplot


class ConfigError(ValueError):
    """An experiment description failed validation."""


@dataclass(frozen=True)
class SweepSettings:
    mode: Mode
    values: Tuple[float, ...]
    t_eval: float = 0.0012

    def __post_init__(self):
        if self.mode not in (Mode.SPIN_E, Mode.SPIN_N):
            raise ConfigError("sweep mode must be the electron-spin or nuclear-spin mode")
        if any(not 0.0 <= v < 1.0 for v in self.values):
            raise ConfigError("sweep values must lie in [0, 1)")
        if self.t_eval <= 0:
            raise ConfigError("sweep evaluation time must be positive")


@dataclass(frozen=True)
class ExperimentConfig:
    """Complete description of one scenario."""

    mode_table: Tuple[ModeSpec, ...]
    params: HamiltonianParams
    initial: BasisState
    dt: float
    horizon: float
    sample_stride: int
    observables: Mapping[str, Tuple[MatterConfig, ...]]
    sweep: Optional[SweepSettings] = None
    force_influx: Tuple[Mode, ...] = ()
    eig_probe_stride: int = 50
    output_dir: str = "out"
    formats: Tuple[str, ...] = ("csv", "json", "svg")

    def __post_init__(self):
        if self.dt <= 0:
            raise ConfigError("dt must be positive")
        if self.horizon < 0:
            raise ConfigError("horizon must be non-negative")
        if self.sample_stride < 1:
            raise ConfigError("sample_stride must be at least 1")
        if self.sweep is not None and self.sweep.t_eval > self.horizon + 1e-15:
            raise ConfigError("sweep evaluation time must not exceed the horizon")
        try:
            validate_state(self.initial, tuple(s.cutoff for s in self.mode_table))
        except InvalidStateError as err:
            raise ConfigError(f"initial state invalid: {err}") from err
        unknown = set(self.formats) - {"csv", "json", "svg"}
        if unknown:
            raise ConfigError(f"unknown output formats: {sorted(unknown)}")

    def mode_spec(self, mode: Mode) -> ModeSpec:
        for spec in self.mode_table:
            if spec.label is mode:
                return spec
        raise ConfigError(f"mode {mode} missing from mode table")

    def with_mu(self, mode: Mode, mu: float) -> "ExperimentConfig":
        table = tuple(replace(s, mu=mu) if s.label is mode else s
                      for s in self.mode_table)
        return replace(self, mode_table=table)

    def physical_fingerprint(self) -> dict:
        fp = {
            "modes": {s.label.value: {"frequency": s.frequency,
                                      "gamma_out": s.gamma_out,
                                      "mu": s.mu,
                                      "cutoff": s.cutoff}
                      for s in self.mode_table},
            "couplings": {m.value: g for m, g in sorted(
                self.params.couplings.items(), key=lambda kv: kv[0].value)},
            "g_en": self.params.g_en,
            "tunneling": {"zeta2": self.params.zeta2,
                          "zeta1": self.params.zeta1,
                          "zeta0": self.params.zeta0},
            "hbar": self.params.hbar,
            "energy_scheme": self.params.energy_scheme,
            "initial": self.initial.record(),
            "dt": self.dt,
            "horizon": self.horizon,
        }
        if self.sweep is not None:
            fp["sweep"] = {"mode": self.sweep.mode.value,
                           "values": list(self.sweep.values),
                           "t_eval": self.sweep.t_eval}
        return fp

    def config_hash(self) -> str:
        payload = json.dumps(self.physical_fingerprint(), sort_keys=True,
                             separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()


@dataclass(frozen=True)
class SweepResult:
    """Influx-ratio sweep outcomes: stable-molecule probability per ratio."""

    mode: Mode
    t_eval: float
    rows: Tuple[Tuple[float, float], ...]
    basis_size: int = 0

    def __post_init__(self):
        mus = [mu for mu, _ in self.rows]
        if any(b <= a for a, b in zip(mus, mus[1:])):
            raise ValueError("sweep rows must be strictly increasing in mu")

    def to_csv(self) -> str:
        lines = ["mu,p_h2"]
        lines += [f"{mu:.12g},{p:.12g}" for mu, p in self.rows]
        return "\n".join(lines) + "\n"

    def probabilities(self) -> np.ndarray:
        return np.array([p for _, p in self.rows])


# --- shipped parameter set ---------------------------------------------------

FREQUENCIES = {
    Mode.MOL_UP: 5e9, Mode.MOL_DOWN: 5e9,
    Mode.ATOM_UP: 1e10, Mode.ATOM_DOWN: 1e10,
    Mode.SPIN_E: 1e9, Mode.SPIN_N: 1e8,
}
COUPLINGS = {
    Mode.MOL_UP: 5e7, Mode.MOL_DOWN: 5e7,
    Mode.ATOM_UP: 1e8, Mode.ATOM_DOWN: 1e8,
    Mode.SPIN_E: 1e7,
}
G_EN = 1e6
ZETA2, ZETA1, ZETA0 = 1e9, 1e7, 0.0
GAMMA = 1e7
DEFAULT_CUTOFFS = {
    Mode.MOL_UP: 1, Mode.MOL_DOWN: 1,
    Mode.ATOM_UP: 2, Mode.ATOM_DOWN: 2,
    Mode.SPIN_E: 2, Mode.SPIN_N: 2,
}
EVALUATION_TIME = 0.0012


def shipped_mode_table(mu_map: Mapping[Mode, float],
                       cutoffs: Optional[Mapping[Mode, int]] = None) -> Tuple[ModeSpec, ...]:
    cut = dict(DEFAULT_CUTOFFS)
    if cutoffs:
        cut.update(cutoffs)
    return tuple(ModeSpec(label=m, frequency=FREQUENCIES[m], gamma_out=GAMMA,
                          mu=float(mu_map.get(m, 0.0)), cutoff=cut[m])
                 for m in Mode)


def shipped_params(energy_scheme: str = "resonant") -> HamiltonianParams:
    return HamiltonianParams(frequencies=FREQUENCIES, couplings=COUPLINGS,
                             g_en=G_EN, zeta2=ZETA2, zeta1=ZETA1, zeta0=ZETA0,
                             hbar=1.0, energy_scheme=energy_scheme)


def association_initial_state() -> BasisState:
    """Two ground spin-down electrons, nuclei apart and spin-up, three photons."""
    photons = [0] * 6
    photons[Mode.ATOM_UP.index] = 1
    photons[Mode.ATOM_DOWN.index] = 1
    photons[Mode.SPIN_E.index] = 1
    electrons = [0] * 8
    electrons[ground_slot(1, Spin.DOWN)] = 1
    electrons[ground_slot(2, Spin.DOWN)] = 1
    return make_state(photons, electrons, 1, (1, 1))


def default_observables(initial: BasisState) -> Mapping[str, Tuple[MatterConfig, ...]]:
    final, final_prime = h2_projector()
    return {
        "initial": (matter_of(initial),),
        "final": (final,),
        "final_prime": (final_prime,),
        "H2": (final, final_prime),
    }


def _auto_stride(horizon: float, dt: float, target_samples: int = 1200) -> int:
    n_steps = max(1, int(round(horizon / dt)))
    return max(1, n_steps // target_samples)


def formation_experiment(dt: float = 1e-10, horizon: float = EVALUATION_TIME,
                         sample_stride: Optional[int] = None,
                         energy_scheme: str = "resonant",
                         cutoffs: Optional[Mapping[Mode, int]] = None) -> ExperimentConfig:
    """Molecule-formation scenario with thermal influx on all four atomic/spin modes."""
    mu_map = {Mode.ATOM_UP: 0.5, Mode.ATOM_DOWN: 0.5,
              Mode.SPIN_E: 0.5, Mode.SPIN_N: 0.5}
    initial = association_initial_state()
    return ExperimentConfig(
        mode_table=shipped_mode_table(mu_map, cutoffs),
        params=shipped_params(energy_scheme),
        initial=initial,
        dt=dt,
        horizon=horizon,
        sample_stride=sample_stride or _auto_stride(horizon, dt),
        observables=default_observables(initial),
    )


def sweep_base_config(mode: Mode, dt: float = 1e-10,
                      horizon: float = EVALUATION_TIME,
                      sample_stride: Optional[int] = None,
                      energy_scheme: str = "resonant",
                      cutoffs: Optional[Mapping[Mode, int]] = None) -> ExperimentConfig:
    """Base scenario of one sweep: swept mode starts at mu = 0, others fixed."""
    if mode not in (Mode.SPIN_E, Mode.SPIN_N):
        raise ConfigError("sweep mode must be the electron-spin or nuclear-spin mode")
    mu_map = {Mode.ATOM_UP: 0.5, Mode.ATOM_DOWN: 0.5,
              Mode.SPIN_E: 0.5, Mode.SPIN_N: 0.5}
    mu_map[mode] = 0.0
    initial = association_initial_state()
    return ExperimentConfig(
        mode_table=shipped_mode_table(mu_map, cutoffs),
        params=shipped_params(energy_scheme),
        initial=initial,
        dt=dt,
        horizon=horizon,
        sample_stride=sample_stride or _auto_stride(horizon, dt),
        observables=default_observables(initial),
        force_influx=(mode,),   # one shared basis for every sweep point
    )


def _sweep_point(args):
    config, mode, mu = args
    traj = ev.run(config.with_mu(mode, mu))
    return mu, traj.value_at("H2", config.horizon), traj.basis_size


def mu_sweep(mode: Mode, values: Sequence[float], t_eval: float = EVALUATION_TIME,
             dt: float = 1e-10, base: Optional[ExperimentConfig] = None,
             max_workers: int = 1) -> SweepResult:
    """Stable-molecule probability at ``t_eval`` for each influx ratio.

    Every point shares one basis, Hamiltonian and propagator; only the
    channel rates differ.  Points run concurrently when ``max_workers``
    exceeds one and results merge in ascending-ratio order either way.
    """
    mus = sorted(float(v) for v in values)
    if any(b - a < 1e-15 for a, b in zip(mus, mus[1:])):
        raise ConfigError("sweep values must be distinct")
    settings = SweepSettings(mode=mode, values=tuple(mus), t_eval=t_eval)
    if base is None:
        base = sweep_base_config(mode, dt=dt, horizon=t_eval)
    config = replace(base, horizon=settings.t_eval, sweep=settings)

    if max_workers > 1:
        jobs = [(config, mode, mu) for mu in mus]
        with ProcessPoolExecutor(max_workers=max_workers) as pool:
            rows = list(pool.map(_sweep_point, jobs))
    else:
        # in-process fast path: reuse the heavy prepared system across points
        system = ev.build_system(config)
        idx = {name: ev.observable_indices(system.basis, cfgs)
               for name, cfgs in config.observables.items()}
        rows = []
        for mu in mus:
            point = config.with_mu(mode, mu)
            traj = ev.evolve_prepared(system, point, idx)
            rows.append((mu, traj.value_at("H2", settings.t_eval), traj.basis_size))

    rows.sort(key=lambda r: r[0])
    basis_size = rows[0][2] if rows else 0
    return SweepResult(mode=mode, t_eval=settings.t_eval,
                       rows=tuple((mu, p) for mu, p, _ in rows),
                       basis_size=basis_size)


# --- output emission ---------------------------------------------------------

def emit_outputs(result, config: ExperimentConfig, out_dir,
                 formats: Optional[Sequence[str]] = None,
                 runtime_s: Optional[float] = None) -> list:
    """Write CSV / JSON / SVG artifacts for a trajectory or sweep result."""
    formats = tuple(formats if formats is not None else config.formats)
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        raise OSError(f"cannot create output directory {out}: {err}") from err

    written = []

    def write(name: str, text: str):
        path = out / name
        try:
            path.write_text(text)
        except OSError as err:
            raise OSError(f"cannot write {path}: {err}") from err
        written.append(path)

    if isinstance(result, Trajectory):
        stem = "trajectory"
        endpoints = {name: float(series[-1]) for name, series in result.series.items()}
        if "csv" in formats:
            write(f"{stem}.csv", result.to_csv())
        if "svg" in formats:
            series = [(name, result.times, result.series[name])
                      for name in result.series]
            write(f"{stem}.svg", svgplot.line_chart(
                series, xlabel="time (s)", ylabel="probability",
                title="state populations"))
    elif isinstance(result, SweepResult):
        stem = "sweep"
        endpoints = {f"mu={mu:.12g}": p for mu, p in result.rows}
        if "csv" in formats:
            write(f"{stem}.csv", result.to_csv())
        if "svg" in formats:
            xs = [mu for mu, _ in result.rows]
            ys = [p for _, p in result.rows]
            write(f"{stem}.svg", svgplot.line_chart(
                [("H2", xs, ys)],
                xlabel=f"influx ratio of {result.mode.value}",
                ylabel="stable molecule probability",
                title=f"molecule yield at t = {result.t_eval:.6g} s"))
    else:
        raise TypeError(f"cannot emit outputs for {type(result).__name__}")

    if "json" in formats:
        summary = {
            "config_hash": config.config_hash(),
            "basis_size": getattr(result, "basis_size", 0),
            "endpoints": endpoints,
        }
        if runtime_s is not None:
            summary["runtime_s"] = runtime_s
        write("summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")

    return written


# --- JSON config files -------------------------------------------------------

def config_to_json(config: ExperimentConfig) -> str:
    doc = config.physical_fingerprint()
    doc["sample_stride"] = config.sample_stride
    doc["force_influx"] = [m.value for m in config.force_influx]
    doc["observables"] = {
        name: [{"electrons": list(c.electrons), "k": c.nucleus_pos,
                "k1": c.nuclear_spins[0], "k2": c.nuclear_spins[1]}
               for c in cfgs]
        for name, cfgs in config.observables.items()}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def config_from_json(text: str) -> ExperimentConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"config is not valid JSON: {err}") from err
    try:
        modes = tuple(ModeSpec(label=Mode.from_label(label),
                               frequency=entry["frequency"],
                               gamma_out=entry["gamma_out"],
                               mu=entry["mu"],
                               cutoff=entry["cutoff"])
                      for label, entry in doc["modes"].items())
        params = HamiltonianParams(
            frequencies={Mode.from_label(l): s.frequency
                         for l, s in ((sp.label.value, sp) for sp in modes)},
            couplings={Mode.from_label(l): g for l, g in doc["couplings"].items()},
            g_en=doc["g_en"],
            zeta2=doc["tunneling"]["zeta2"],
            zeta1=doc["tunneling"]["zeta1"],
            zeta0=doc["tunneling"]["zeta0"],
            hbar=doc.get("hbar", 1.0),
            energy_scheme=doc.get("energy_scheme", "resonant"),
        )
        init = doc["initial"]
        initial = make_state(init["photons"], init["electrons"],
                             init["k"], (init["k1"], init["k2"]))
        if "observables" in doc:
            observables = {
                name: tuple(matter_config(c["electrons"], c["k"], (c["k1"], c["k2"]))
                            for c in cfgs)
                for name, cfgs in doc["observables"].items()}
        else:
            observables = default_observables(initial)
        sweep = None
        if "sweep" in doc:
            sweep = SweepSettings(mode=Mode.from_label(doc["sweep"]["mode"]),
                                  values=tuple(doc["sweep"]["values"]),
                                  t_eval=doc["sweep"].get("t_eval", EVALUATION_TIME))
        dt = float(doc["dt"])
        horizon = float(doc["horizon"])
        return ExperimentConfig(
            mode_table=modes,
            params=params,
            initial=initial,
            dt=dt,
            horizon=horizon,
            sample_stride=int(doc.get("sample_stride") or _auto_stride(horizon, dt)),
            observables=observables,
            sweep=sweep,
            force_influx=tuple(Mode.from_label(l)
                               for l in doc.get("force_influx", [])),
        )
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as err:
        raise ConfigError(f"invalid experiment config: {err}") from err
