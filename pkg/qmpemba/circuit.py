"""Brick-wall random circuits with Haar doping and seeded ensemble averaging."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import StrEnum
from typing import Iterable

import numpy as np

from qmpemba._env import resolve_workers
from qmpemba.errors import InvalidArgumentError, ResourceLimitError
from qmpemba.gates import GateKind, RngStream, sample_gate
from qmpemba.metrics import Observable, evaluate_observables
from qmpemba.qstate import (
    MAX_SITES,
    InitialStatePattern,
    StateVector,
    SubsystemMask,
    apply_two_qubit,
    tilted_product_state,
)

__all__ = [
    "DopingMode",
    "CircuitConfig",
    "TimeSeries",
    "brickwall_bonds",
    "draw_doping_pattern",
    "step",
    "run_realization",
    "run_ensemble",
]

logger = logging.getLogger(__name__)


class DopingMode(StrEnum):
    PER_GATE = "per_gate"
    FIXED_POSITIONS = "fixed_positions"


@dataclass(frozen=True, slots=True)
class CircuitConfig:
    """Parameters of a doped brick-wall circuit ensemble.

    *subsystem* defaults to the first ``L // 4`` sites.
    """

    L: int
    p_haar: float = 0.0
    steps: int = 20
    realizations: int = 100
    seed: int = 0
    subsystem: SubsystemMask | None = None
    renyi_n: float = 1.0
    doping_mode: DopingMode = DopingMode.PER_GATE
    u1_random_phases: bool = True

    def __post_init__(self):
        if self.L < 4 or self.L % 2:
            raise InvalidArgumentError(
                f"circuit needs an even number of sites >= 4 for the periodic "
                f"brick wall, got L={self.L}"
            )
        if self.L > MAX_SITES:
            raise ResourceLimitError(f"L={self.L} exceeds the cap of {MAX_SITES}")
        if not 0.0 <= self.p_haar <= 1.0:
            raise InvalidArgumentError(f"p_haar {self.p_haar} outside [0, 1]")
        if self.steps < 0:
            raise InvalidArgumentError("steps must be >= 0")
        if self.realizations < 1:
            raise InvalidArgumentError("realizations must be >= 1")
        if self.renyi_n < 1:
            raise InvalidArgumentError(f"renyi_n must be >= 1, got {self.renyi_n}")
        object.__setattr__(self, "doping_mode", DopingMode(self.doping_mode))
        if self.subsystem is None:
            object.__setattr__(self, "subsystem", SubsystemMask(0, self.L // 4))
        self.subsystem.validate(self.L)
        if self.subsystem.length > self.L // 2:
            raise InvalidArgumentError(
                f"subsystem length {self.subsystem.length} exceeds L/2 = {self.L // 2}"
            )


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Sampled observable with ensemble mean and standard error."""

    times: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    n_realizations: int = 1
    label: str = field(default="", compare=False)

    def __post_init__(self):
        for name in ("times", "mean", "stderr"):
            object.__setattr__(self, name,
                               np.asarray(getattr(self, name), dtype=np.float64))
        if not (self.times.shape == self.mean.shape == self.stderr.shape):
            raise InvalidArgumentError("times, mean and stderr must have equal length")
        if np.any(self.stderr < 0):
            raise InvalidArgumentError("stderr entries must be non-negative")

    def __len__(self) -> int:
        return self.times.size

    @classmethod
    def from_samples(cls, times, samples, label: str = "") -> "TimeSeries":
        """Aggregate a ``(realizations, len(times))`` array in row order."""
        s = np.atleast_2d(np.asarray(samples, dtype=np.float64))
        n = s.shape[0]
        mean = s.mean(axis=0)
        if n > 1:
            stderr = s.std(axis=0, ddof=1) / math.sqrt(n)
        else:
            stderr = np.zeros_like(mean)
        return cls(np.asarray(times, dtype=np.float64), mean, stderr, n, label)

    @classmethod
    def deterministic(cls, times, values, label: str = "") -> "TimeSeries":
        v = np.asarray(values, dtype=np.float64)
        return cls(np.asarray(times, dtype=np.float64), v, np.zeros_like(v), 1, label)


def brickwall_bonds(num_sites: int) -> tuple[list[tuple[int, int]], list[tuple[int, int]]]:
    """Bonds of the two layers of one step, 0-indexed.

    Layer 1: (0,1), (2,3), ...; layer 2: (1,2), (3,4), ..., (L-1, 0).
    """
    first = [(i, i + 1) for i in range(0, num_sites, 2)]
    second = [(i, (i + 1) % num_sites) for i in range(1, num_sites, 2)]
    return first, second


def draw_doping_pattern(rng: RngStream, cfg: CircuitConfig) -> np.ndarray:
    """Haar/U(1) choice per bond slot, shape ``(2, L // 2)``, True = Haar."""
    return rng.generator.random((2, cfg.L // 2)) < cfg.p_haar


def _evolve_step(state: StateVector, rng: RngStream, cfg: CircuitConfig,
                 doping: np.ndarray | None) -> StateVector:
    for layer, bonds in enumerate(brickwall_bonds(state.num_sites)):
        for slot, (i, j) in enumerate(bonds):
            if doping is None:
                haar = rng.random() < cfg.p_haar
            else:
                haar = bool(doping[layer, slot])
            kind = GateKind.HAAR if haar else GateKind.U1_SYMMETRIC
            gate = sample_gate(kind, rng, cfg.u1_random_phases)
            state = apply_two_qubit(state, gate, i, j)
    return state


def step(state: StateVector, rng: RngStream, cfg: CircuitConfig,
         doping: np.ndarray | None = None) -> StateVector:
    """Apply one time step (two brick-wall layers).

    With *doping* given (see :func:`draw_doping_pattern`) the gate kinds are
    taken from it; otherwise each gate is Haar with probability ``p_haar``.
    """
    if state.num_sites != cfg.L:
        raise InvalidArgumentError(
            f"state has {state.num_sites} sites, config expects {cfg.L}"
        )
    return _evolve_step(state, rng, cfg, doping)


def run_realization(cfg: CircuitConfig, pattern: InitialStatePattern,
                    stream_id: int,
                    observables: Iterable[Observable | str]) -> dict[str, np.ndarray]:
    """Observables after each step of one circuit realization, step 0 included."""
    observables = [Observable(o) for o in observables]
    rng = RngStream(cfg.seed, stream_id)
    doping = None
    if cfg.doping_mode == DopingMode.FIXED_POSITIONS:
        doping = draw_doping_pattern(rng, cfg)
    state = tilted_product_state(cfg.L, pattern)
    rows = [evaluate_observables(state, observables, cfg.subsystem, cfg.renyi_n)]
    for _ in range(cfg.steps):
        state = _evolve_step(state, rng, cfg, doping)
        rows.append(evaluate_observables(state, observables,
                                         cfg.subsystem, cfg.renyi_n))
    logger.debug("realization %d done (%d steps)", stream_id, cfg.steps)
    return {key: np.array([r[key] for r in rows]) for key in rows[0]}


def _realization_task(args) -> dict[str, np.ndarray]:
    cfg, pattern, stream_id, observables = args
    return run_realization(cfg, pattern, stream_id, observables)


def run_ensemble(cfg: CircuitConfig, pattern: InitialStatePattern,
                 observables: Iterable[Observable | str],
                 workers: int | None = None) -> dict[str, TimeSeries]:
    """Mean and standard error over ``cfg.realizations`` independent streams.

    Streams ``0 .. realizations - 1`` are reduced in stream order, so the
    result does not depend on *workers* or on completion order.
    """
    observables = tuple(Observable(o) for o in observables)
    n = cfg.realizations
    n_workers = min(resolve_workers(workers), n)
    logger.info("ensemble: L=%d p_haar=%g %s, %d realizations on %d worker(s)",
                cfg.L, cfg.p_haar, pattern.label(), n, n_workers)
    tasks = [(cfg, pattern, sid, observables) for sid in range(n)]
    report_every = max(1, n // 10)
    results: list[dict[str, np.ndarray]] = []
    if n_workers == 1:
        mapped = map(_realization_task, tasks)
        pool = None
    else:
        pool = ProcessPoolExecutor(max_workers=n_workers)
        mapped = pool.map(_realization_task, tasks)
    try:
        for k, res in enumerate(mapped, start=1):
            results.append(res)
            if k % report_every == 0 or k == n:
                logger.info("realizations %d/%d", k, n)
    finally:
        if pool is not None:
            pool.shutdown()
    times = np.arange(cfg.steps + 1, dtype=np.float64)
    return {
        key: TimeSeries.from_samples(times, np.stack([r[key] for r in results]),
                                     label=key)
        for key in results[0]
    }
