"""XXZ chain with next-nearest-neighbour couplings and exact time evolution.

::

    H = -1/4  sum_j [ X_j X_{j+1} + gamma Y_j Y_{j+1} + delta Z_j Z_{j+1} ]
        -J2/4 sum_j [ X_j X_{j+2} +       Y_j Y_{j+2} + delta2 Z_j Z_{j+2} ]

The matrix is real symmetric in the computational basis and is built directly
from bit operations on basis indices.
"""

from __future__ import annotations

import logging
import time as _time
from dataclasses import dataclass
from enum import StrEnum
from typing import Iterable, Iterator

import numpy as np
from scipy.linalg import eigh

from qmpemba.circuit import TimeSeries
from qmpemba.errors import InvalidArgumentError, ResourceLimitError
from qmpemba.gates import RngStream
from qmpemba.metrics import Observable, evaluate_observables, total_charges
from qmpemba.qstate import (
    InitialStatePattern,
    StateVector,
    SubsystemMask,
    tilted_product_state,
)

__all__ = [
    "MAX_DENSE_SITES",
    "Boundary",
    "HamiltonianParams",
    "SpectralDecomposition",
    "build_hamiltonian",
    "diagonalize",
    "evolve",
    "quench_series",
    "late_time_value",
    "default_time_grid",
    "charge_commutator_norm",
    "energy_moments",
]

logger = logging.getLogger(__name__)

MAX_DENSE_SITES = 14
_TIME_BLOCK = 64


class Boundary(StrEnum):
    PERIODIC = "periodic"
    OPEN = "open"


@dataclass(frozen=True, slots=True)
class HamiltonianParams:
    L: int
    gamma: float = 1.0
    delta: float = 0.4
    j2: float = 0.0
    delta2: float = 0.0
    boundary: Boundary = Boundary.PERIODIC

    def __post_init__(self):
        object.__setattr__(self, "boundary", Boundary(self.boundary))
        if self.L < 2:
            raise InvalidArgumentError(f"need at least 2 sites, got L={self.L}")
        if self.j2 != 0 and self.boundary == Boundary.PERIODIC and self.L < 3:
            raise InvalidArgumentError(
                "next-nearest couplings under periodic boundaries need L >= 3"
            )

    @classmethod
    def h1(cls, L: int, gamma: float = 1.0,
           boundary: Boundary | str = Boundary.PERIODIC) -> "HamiltonianParams":
        """Integrable preset: ``delta = 0.4``, no next-nearest term."""
        return cls(L, gamma, 0.4, 0.0, 0.0, boundary)

    @classmethod
    def h2(cls, L: int, gamma: float = 1.0,
           boundary: Boundary | str = Boundary.PERIODIC) -> "HamiltonianParams":
        """Non-integrable preset: ``delta = 0.4``, ``j2 = 0.2``, ``delta2 = 1``."""
        return cls(L, gamma, 0.4, 0.2, 1.0, boundary)

    def bonds(self, distance: int) -> list[tuple[int, int]]:
        n = self.L
        if self.boundary == Boundary.PERIODIC:
            return [(i, (i + distance) % n) for i in range(n)]
        return [(i, i + distance) for i in range(n - distance)]


class SpectralDecomposition:
    """``H = V diag(E) V^T`` with eigenvalues in ascending order."""

    __slots__ = ("eigenvalues", "eigenvectors")

    def __init__(self, eigenvalues, eigenvectors):
        self.eigenvalues = np.asarray(eigenvalues, dtype=np.float64)
        self.eigenvectors = np.asarray(eigenvectors)
        n = self.eigenvalues.size
        if self.eigenvectors.shape != (n, n):
            raise InvalidArgumentError(
                f"eigenvector matrix {self.eigenvectors.shape} does not match "
                f"{n} eigenvalues"
            )

    def __repr__(self) -> str:
        return f"<SpectralDecomposition(dim={self.dim})>"

    @property
    def dim(self) -> int:
        return self.eigenvalues.size

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T

    def ground_state(self) -> StateVector:
        return StateVector(self.eigenvectors[:, 0])


def build_hamiltonian(p: HamiltonianParams) -> np.ndarray:
    """Dense real symmetric matrix of dimension ``2**L``."""
    n = p.L
    if n > MAX_DENSE_SITES:
        raise ResourceLimitError(
            f"dense Hamiltonian limited to {MAX_DENSE_SITES} sites, got L={n}"
        )
    dim = 1 << n
    idx = np.arange(dim, dtype=np.int64)
    h = np.zeros((dim, dim), dtype=np.float64)
    terms = [(1.0, p.gamma, p.delta, p.bonds(1))]
    if p.j2 != 0:
        terms.append((p.j2, 1.0, p.delta2, p.bonds(2)))
    for c, gamma, zz, bonds in terms:
        for i, j in bonds:
            differ = ((idx >> i) ^ (idx >> j)) & 1
            flipped = idx ^ ((1 << i) | (1 << j))
            # <b'|XX + gamma YY|b> is 1 + gamma on antiparallel pairs, 1 - gamma on parallel
            amp = np.where(differ == 1, 1.0 + gamma, 1.0 - gamma)
            np.add.at(h, (flipped, idx), -0.25 * c * amp)
            h[idx, idx] += -0.25 * c * zz * (1 - 2 * differ)
    return h


def diagonalize(h) -> SpectralDecomposition:
    if isinstance(h, HamiltonianParams):
        h = build_hamiltonian(h)
    t0 = _time.perf_counter()
    energies, vectors = eigh(h)
    logger.info("diagonalized %d x %d Hamiltonian in %.2fs",
                h.shape[0], h.shape[0], _time.perf_counter() - t0)
    return SpectralDecomposition(energies, vectors)


def _check_dim(state: StateVector, spectrum: SpectralDecomposition) -> None:
    if state.dim != spectrum.dim:
        raise InvalidArgumentError(
            f"state of dim {state.dim} does not match spectrum of dim {spectrum.dim}"
        )


def _rotate(v: np.ndarray, block: np.ndarray) -> np.ndarray:
    # a real eigenbasis keeps the products real
    if np.isrealobj(v):
        return v @ block.real + 1j * (v @ block.imag)
    return v @ block


def _trajectory(spectrum: SpectralDecomposition, state: StateVector,
                times) -> Iterator[StateVector]:
    """``exp(-iHt) |state>`` for each t, in blocks of ``_TIME_BLOCK`` times."""
    v = spectrum.eigenvectors
    coeffs = v.conj().T @ state.amplitudes
    energies = spectrum.eigenvalues
    times = np.asarray(times, dtype=np.float64).reshape(-1)
    for start in range(0, times.size, _TIME_BLOCK):
        ts = times[start:start + _TIME_BLOCK]
        block = np.exp(-1j * np.outer(energies, ts)) * coeffs[:, None]
        states = _rotate(v, block)
        for k in range(ts.size):
            yield StateVector(states[:, k])


def evolve(state: StateVector, spectrum: SpectralDecomposition,
           t: float) -> StateVector:
    """``exp(-iHt) |state>`` through the eigenbasis."""
    _check_dim(state, spectrum)
    return next(_trajectory(spectrum, state, [t]))


def default_time_grid(t_max: float = 20.0, dt: float = 0.05) -> np.ndarray:
    if t_max < 0 or dt <= 0:
        raise InvalidArgumentError("need t_max >= 0 and dt > 0")
    return np.linspace(0.0, t_max, int(round(t_max / dt)) + 1)


def _resolve(p: HamiltonianParams, spectrum: SpectralDecomposition | None,
             mask: SubsystemMask | None) -> tuple[SpectralDecomposition, SubsystemMask]:
    if spectrum is None:
        spectrum = diagonalize(build_hamiltonian(p))
    elif spectrum.dim != 1 << p.L:
        raise InvalidArgumentError("spectrum does not match the Hamiltonian size")
    if mask is None:
        mask = SubsystemMask(0, max(1, p.L // 4))
    mask.validate(p.L)
    return spectrum, mask


def quench_series(p: HamiltonianParams, pattern: InitialStatePattern, times,
                  observables: Iterable[Observable | str],
                  mask: SubsystemMask | None = None, renyi_n: float = 1.0,
                  spectrum: SpectralDecomposition | None = None) -> dict[str, TimeSeries]:
    """Observables along ``exp(-iHt)`` applied to a tilted product state.

    Pass *spectrum* to reuse one decomposition across initial states.
    The subsystem defaults to the first ``L // 4`` sites.
    """
    spectrum, mask = _resolve(p, spectrum, mask)
    times = np.asarray(times, dtype=np.float64)
    observables = [Observable(o) for o in observables]
    states = _trajectory(spectrum, tilted_product_state(p.L, pattern), times)
    rows = [evaluate_observables(s, observables, mask, renyi_n) for s in states]
    logger.info("quench %s: %d time points", pattern.label(), times.size)
    if not rows:
        return {}
    return {key: TimeSeries.deterministic(times, [r[key] for r in rows], label=key)
            for key in rows[0]}


def late_time_value(p: HamiltonianParams, pattern: InitialStatePattern,
                    observable: Observable | str, t1: float, t2: float,
                    samples: int, rng: RngStream,
                    mask: SubsystemMask | None = None, renyi_n: float = 1.0,
                    spectrum: SpectralDecomposition | None = None) -> float:
    """Mean of a scalar observable at *samples* uniform random times in [t1, t2]."""
    if not t2 > t1 > 0:
        raise InvalidArgumentError(f"need t2 > t1 > 0, got t1={t1}, t2={t2}")
    if samples < 1:
        raise InvalidArgumentError("samples must be >= 1")
    obs = Observable(observable)
    if obs in (Observable.SECTOR_WEIGHTS, Observable.SECTOR_PROBABILITIES):
        raise InvalidArgumentError(f"{obs.value} is not a scalar observable")
    spectrum, mask = _resolve(p, spectrum, mask)
    states = _trajectory(spectrum, tilted_product_state(p.L, pattern),
                         rng.uniform(t1, t2, samples))
    values = np.array([evaluate_observables(s, [obs], mask, renyi_n)[obs.value]
                       for s in states])
    return float(values.mean())


def charge_commutator_norm(h) -> float:
    """``max |[H, Q]|`` elementwise."""
    h = np.asarray(h)
    q = total_charges(h.shape[0].bit_length() - 1).astype(np.float64)
    return float(np.max(np.abs(h * (q[None, :] - q[:, None]))))


def energy_moments(state: StateVector, h) -> tuple[float, float]:
    """``(<H>, <H^2>)``; *h* may be a matrix or a spectral decomposition."""
    if isinstance(h, SpectralDecomposition):
        _check_dim(state, h)
        w = np.abs(h.eigenvectors.conj().T @ state.amplitudes) ** 2
        return float(w @ h.eigenvalues), float(w @ h.eigenvalues ** 2)
    hpsi = np.asarray(h) @ state.amplitudes
    return (float(np.real(np.vdot(state.amplitudes, hpsi))),
            float(np.real(np.vdot(hpsi, hpsi))))
