"""Flat ``key = value`` experiment configuration.

One assignment per line; ``#`` starts a comment; lists are comma separated.
Angles in ``thetas`` are given in units of pi.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from enum import StrEnum
from pathlib import Path
from typing import Any, Callable

from qmpemba.circuit import DopingMode
from qmpemba.errors import ConfigError
from qmpemba.hamiltonian import MAX_DENSE_SITES, Boundary
from qmpemba.metrics import Observable
from qmpemba.qstate import MAX_SITES, PatternKind

__all__ = [
    "ExperimentKind",
    "Dynamics",
    "ExperimentConfig",
    "parse_config",
    "load_config",
]


class ExperimentKind(StrEnum):
    CIRCUIT_EA = "circuit_ea"
    CIRCUIT_CV = "circuit_cv"
    HAM_QUENCH = "ham_quench"
    CHARGE_DIST = "charge_dist"
    PEAK_FIT = "peak_fit"
    CROSSING = "crossing"
    LATETIME = "latetime"
    GAMMA_SWEEP = "gamma_sweep"


class Dynamics(StrEnum):
    CIRCUIT = "circuit"
    HAMILTONIAN = "hamiltonian"


_PRESETS = {
    "h1": {"delta": 0.4, "j2": 0.0, "delta2": 0.0},
    "h2": {"delta": 0.4, "j2": 0.2, "delta2": 1.0},
}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: ExperimentKind
    L: int = 12
    # circuit
    p_haar: float = 0.0
    steps: int = 20
    realizations: int = 100
    seed: int = 0
    doping_mode: DopingMode = DopingMode.PER_GATE
    u1_random_phases: bool = True
    p_haar_grid: tuple[float, ...] = ()
    workers: int | None = None
    # hamiltonian
    preset: str | None = None
    gamma: float = 1.0
    delta: float = 0.4
    j2: float = 0.0
    delta2: float = 0.0
    boundary: Boundary = Boundary.PERIODIC
    t_max: float = 20.0
    dt: float = 0.05
    times: tuple[float, ...] = ()
    late_t1: float = 2000.0
    late_t2: float = 40000.0
    late_samples: int = 2000
    gamma_grid: tuple[float, ...] = ()
    # initial states and observables
    pattern: PatternKind = PatternKind.FERROMAGNETIC
    thetas: tuple[float, ...] = (0.2, 0.5)
    observables: tuple[Observable, ...] = ()
    subsystem_start: int = 0
    subsystem_length: int | None = None
    renyi_n: float = 1.0
    # analysis
    dynamics: Dynamics = Dynamics.CIRCUIT
    persistence: int | None = None
    min_significance: float = 2.0
    # output
    output_dir: str = "out"
    emit_svg: bool = True
    lines: dict[str, int] = field(default_factory=dict, compare=False, repr=False)

    @property
    def uses_circuit(self) -> bool:
        if self.experiment in (ExperimentKind.CIRCUIT_EA, ExperimentKind.CIRCUIT_CV,
                               ExperimentKind.PEAK_FIT):
            return True
        if self.experiment in (ExperimentKind.HAM_QUENCH, ExperimentKind.GAMMA_SWEEP):
            return False
        return self.dynamics == Dynamics.CIRCUIT

    def with_overrides(self, **kwargs: Any) -> "ExperimentConfig":
        """Copy with the non-None entries of *kwargs* replaced, then revalidated."""
        changes = {k: v for k, v in kwargs.items() if v is not None}
        if not changes:
            return self
        cfg = dataclasses.replace(self, **changes)
        cfg.validate()
        return cfg

    def _fail(self, message: str, key: str) -> ConfigError:
        return ConfigError(message, key=key, line=self.lines.get(key))

    def validate(self) -> None:
        """Cross-field checks; raise :class:`ConfigError` naming the key."""
        if self.uses_circuit:
            if self.L < 4 or self.L % 2:
                raise self._fail(
                    f"circuit experiments need an even L >= 4, got {self.L}", "L")
            if self.L > MAX_SITES:
                raise self._fail(f"L is capped at {MAX_SITES} sites", "L")
        else:
            if self.L < 2:
                raise self._fail(f"L must be >= 2, got {self.L}", "L")
        if not 0.0 <= self.p_haar <= 1.0:
            raise self._fail("p_haar must lie in [0, 1]", "p_haar")
        if any(not 0.0 < p <= 1.0 for p in self.p_haar_grid):
            raise self._fail("p_haar_grid values must lie in (0, 1]", "p_haar_grid")
        if self.steps < 0:
            raise self._fail("steps must be >= 0", "steps")
        if self.realizations < 1:
            raise self._fail("realizations must be >= 1", "realizations")
        if self.seed < 0:
            raise self._fail("seed must be non-negative", "seed")
        if self.renyi_n < 1:
            raise self._fail("renyi_n must be >= 1", "renyi_n")
        if any(not 0.0 <= th <= 0.5 for th in self.thetas):
            raise self._fail("thetas are in units of pi and must lie in [0, 0.5]",
                             "thetas")
        if not self.thetas:
            raise self._fail("at least one theta is required", "thetas")
        length = self.subsystem_length
        if length is not None:
            if length < 1 or self.subsystem_start < 0:
                raise self._fail("subsystem must be non-empty", "subsystem_length")
            if self.subsystem_start + length > self.L:
                raise self._fail("subsystem does not fit in the chain",
                                 "subsystem_length")
            if self.uses_circuit and length > self.L // 2:
                raise self._fail(f"subsystem length must not exceed L/2 = {self.L // 2}",
                                 "subsystem_length")
        if self.t_max < 0 or self.dt <= 0:
            raise self._fail("need t_max >= 0 and dt > 0", "dt")
        if not self.late_t2 > self.late_t1 > 0:
            raise self._fail("need late_t2 > late_t1 > 0", "late_t2")
        if self.late_samples < 1:
            raise self._fail("late_samples must be >= 1", "late_samples")
        if self.persistence is not None and self.persistence < 1:
            raise self._fail("persistence must be >= 1", "persistence")
        if self.experiment == ExperimentKind.PEAK_FIT and len(self.p_haar_grid) < 3:
            raise self._fail("peak_fit needs at least 3 p_haar_grid values",
                             "p_haar_grid")
        if self.experiment == ExperimentKind.CROSSING and len(self.thetas) != 2:
            raise self._fail("crossing compares exactly two thetas", "thetas")
        if self.experiment == ExperimentKind.GAMMA_SWEEP:
            if len(self.gamma_grid) < 2:
                raise self._fail("gamma_sweep needs at least 2 gamma_grid values",
                                 "gamma_grid")
            if any(not 0.0 <= g < 1.0 for g in self.gamma_grid):
                raise self._fail("gamma_grid values must lie in [0, 1)", "gamma_grid")
        if not self.uses_circuit and self.L > MAX_DENSE_SITES:
            raise self._fail(
                f"dense Hamiltonian dynamics are capped at {MAX_DENSE_SITES} sites", "L")


def _bool(raw: str) -> bool:
    low = raw.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _optional(conv: Callable[[str], Any]) -> Callable[[str], Any]:
    def parse(raw: str):
        return None if raw.lower() in ("", "none", "auto") else conv(raw)
    return parse


def _list(conv: Callable[[str], Any]) -> Callable[[str], tuple]:
    def parse(raw: str) -> tuple:
        return tuple(conv(item.strip()) for item in raw.split(",") if item.strip())
    return parse


_CONVERTERS: dict[str, Callable[[str], Any]] = {
    "experiment": ExperimentKind,
    "L": int,
    "p_haar": float,
    "steps": int,
    "realizations": int,
    "seed": int,
    "doping_mode": DopingMode,
    "u1_random_phases": _bool,
    "p_haar_grid": _list(float),
    "workers": _optional(int),
    "preset": _optional(str.lower),
    "gamma": float,
    "delta": float,
    "j2": float,
    "delta2": float,
    "boundary": Boundary,
    "t_max": float,
    "dt": float,
    "times": _list(float),
    "late_t1": float,
    "late_t2": float,
    "late_samples": int,
    "gamma_grid": _list(float),
    "pattern": PatternKind,
    "thetas": _list(float),
    "observables": _list(Observable),
    "subsystem_start": int,
    "subsystem_length": _optional(int),
    "renyi_n": float,
    "dynamics": Dynamics,
    "persistence": _optional(int),
    "min_significance": float,
    "output_dir": str,
    "emit_svg": _bool,
}


def parse_config(text: str) -> ExperimentConfig:
    values: dict[str, Any] = {}
    lines: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", line=lineno)
        key, _, value = (part.strip() for part in line.partition("="))
        if key not in _CONVERTERS:
            raise ConfigError("unknown key", key=key, line=lineno)
        if key in values:
            raise ConfigError(f"duplicate key (first set on line {lines[key]})",
                              key=key, line=lineno)
        try:
            values[key] = _CONVERTERS[key](value)
        except ValueError as exc:
            raise ConfigError(f"invalid value {value!r}: {exc}", key=key,
                              line=lineno) from exc
        lines[key] = lineno
    if "experiment" not in values:
        raise ConfigError("missing required key", key="experiment")
    preset = values.get("preset")
    if preset is not None:
        if preset not in _PRESETS:
            raise ConfigError(f"unknown preset {preset!r} (expected h1 or h2)",
                              key="preset", line=lines["preset"])
        for key, val in _PRESETS[preset].items():
            if key in values:
                raise ConfigError(f"conflicts with preset {preset!r}", key=key,
                                  line=lines[key])
            values[key] = val
    cfg = ExperimentConfig(**values, lines=lines)
    cfg.validate()
    return cfg


def load_config(path: str | Path) -> ExperimentConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))
