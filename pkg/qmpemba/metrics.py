"""Symmetry diagnostics.

Entanglement asymmetry with U(1) and Z2 probes, charge variance, charge-sector
probabilities and weights, and distances between density matrices. Entropies
are in nats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import StrEnum
from typing import Iterable

import numpy as np
from scipy.linalg import eigh

from qmpemba.errors import InvalidArgumentError
from qmpemba.qstate import DensityMatrix, StateVector, SubsystemMask, partial_trace

__all__ = [
    "ProbeKind",
    "ChargeProbe",
    "SectorDecomposition",
    "Observable",
    "total_charges",
    "subsystem_charges",
    "project_to_sectors",
    "renyi_entropy",
    "renyi_from_spectrum",
    "entanglement_asymmetry",
    "entanglement_asymmetry_of",
    "charge_moments",
    "charge_variance",
    "maximally_mixed_charge_variance",
    "sector_probabilities",
    "sector_weights",
    "trace_distance",
    "frobenius_distance",
    "relative_entropy",
    "evaluate_observables",
]

EIGEN_FLOOR = 1e-12
_TINY = 1e-300


def _popcount(indices: np.ndarray, nbits: int) -> np.ndarray:
    ones = np.zeros_like(indices)
    for k in range(nbits):
        ones += (indices >> k) & 1
    return ones


def total_charges(num_sites: int) -> np.ndarray:
    """``Q(b) = zeros - ones`` for every basis index of the full system."""
    idx = np.arange(1 << num_sites, dtype=np.int64)
    return num_sites - 2 * _popcount(idx, num_sites)


class ProbeKind(StrEnum):
    U1 = "u1"
    Z2 = "z2"


def subsystem_charges(num_sites: int, kind: ProbeKind | str) -> np.ndarray:
    """Probe charge of each subsystem basis index.

    U(1): ``sum sigma^z`` in ``{-m, ..., m}``; Z2: ``prod sigma^z`` in ``{+1, -1}``.
    """
    idx = np.arange(1 << num_sites, dtype=np.int64)
    ones = _popcount(idx, num_sites)
    if ProbeKind(kind) == ProbeKind.U1:
        return num_sites - 2 * ones
    return 1 - 2 * (ones & 1)


@dataclass(frozen=True, slots=True)
class SectorDecomposition:
    """Partition of the subsystem basis by charge value."""

    sectors: tuple[tuple[int, np.ndarray], ...]

    @classmethod
    def from_charges(cls, charges: np.ndarray) -> "SectorDecomposition":
        values = sorted({int(q) for q in charges}, reverse=True)
        return cls(tuple((q, np.flatnonzero(charges == q)) for q in values))

    def __iter__(self):
        return iter(self.sectors)

    def __len__(self) -> int:
        return len(self.sectors)

    def charges(self) -> list[int]:
        return [q for q, _ in self.sectors]


@dataclass(frozen=True, slots=True)
class ChargeProbe:
    kind: ProbeKind
    mask: SubsystemMask

    def __post_init__(self):
        object.__setattr__(self, "kind", ProbeKind(self.kind))

    def charges(self) -> np.ndarray:
        return subsystem_charges(self.mask.length, self.kind)

    def sectors(self) -> SectorDecomposition:
        return SectorDecomposition.from_charges(self.charges())


def _as_matrix(rho) -> np.ndarray:
    return rho.entries if isinstance(rho, DensityMatrix) else np.asarray(rho)


def _check_probe_dim(rho: np.ndarray, probe: ChargeProbe) -> None:
    if rho.shape[0] != 1 << probe.mask.length:
        raise InvalidArgumentError(
            f"density matrix of dim {rho.shape[0]} does not match a "
            f"{probe.mask.length}-site probe"
        )


def project_to_sectors(rho: DensityMatrix, probe: ChargeProbe) -> DensityMatrix:
    """Dephase *rho*: keep entries whose row and column charges agree."""
    m = _as_matrix(rho)
    _check_probe_dim(m, probe)
    q = probe.charges()
    return DensityMatrix(np.where(q[:, None] == q[None, :], m, 0.0))


def renyi_from_spectrum(eigenvalues: np.ndarray, n: float = 1.0) -> float:
    """Renyi entropy of order *n* from a density-matrix spectrum."""
    if n < 1:
        raise InvalidArgumentError(f"Renyi index must be >= 1, got {n}")
    lam = np.asarray(eigenvalues, dtype=np.float64)
    if n == 1:
        lam = lam[lam > EIGEN_FLOOR]
        return float(-np.sum(lam * np.log(lam)))
    lam = np.clip(lam, _TINY, None)
    return float(math.log(np.sum(lam ** n)) / (1.0 - n))


def renyi_entropy(rho: DensityMatrix, n: float = 1.0) -> float:
    if n < 1:
        raise InvalidArgumentError(f"Renyi index must be >= 1, got {n}")
    return renyi_from_spectrum(eigh(_as_matrix(rho), eigvals_only=True), n)


def _dephased_spectrum(rho: np.ndarray, probe: ChargeProbe) -> np.ndarray:
    # blockwise: the dephased matrix is block diagonal in the sector basis
    blocks = [eigh(rho[np.ix_(idx, idx)], eigvals_only=True)
              for _, idx in probe.sectors()]
    return np.concatenate(blocks)


def entanglement_asymmetry_of(rho: DensityMatrix, probe: ChargeProbe,
                              n: float = 1.0) -> float:
    """``S^n(rho_Q) - S^n(rho)`` for a reduced density matrix."""
    m = _as_matrix(rho)
    _check_probe_dim(m, probe)
    return (renyi_from_spectrum(_dephased_spectrum(m, probe), n)
            - renyi_from_spectrum(eigh(m, eigvals_only=True), n))


def entanglement_asymmetry(state: StateVector, probe: ChargeProbe,
                           n: float = 1.0) -> float:
    return entanglement_asymmetry_of(partial_trace(state, probe.mask), probe, n)


def charge_moments(state: StateVector) -> tuple[float, float]:
    """``(<Q>, <Q^2>)`` of the total charge, computed diagonally."""
    p = state.probabilities()
    q = total_charges(state.num_sites).astype(np.float64)
    return float(p @ q), float(p @ (q * q))


def charge_variance(state: StateVector) -> float:
    q1, q2 = charge_moments(state)
    return q2 - q1 * q1


def maximally_mixed_charge_variance(num_sites: int) -> float:
    """Charge variance of ``I / 2**L``: each site contributes 1."""
    return float(num_sites)


def sector_probabilities(state: StateVector) -> dict[int, float]:
    """``P_Q`` for every ``Q`` in ``{-L, -L+2, ..., L}``, highest charge first."""
    n = state.num_sites
    q = total_charges(n)
    weights = np.bincount((n - q) // 2, weights=state.probabilities(),
                          minlength=n + 1)
    return {n - 2 * k: float(w) for k, w in enumerate(weights)}


def sector_weights(rho: DensityMatrix, probe: ChargeProbe) -> dict[int, float]:
    """``Tr(Pi_q rho)`` for each probe charge ``q``."""
    m = _as_matrix(rho)
    _check_probe_dim(m, probe)
    diag = np.real(np.diag(m))
    return {q: float(diag[idx].sum()) for q, idx in probe.sectors()}


def _same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise InvalidArgumentError(
            f"density matrices differ in shape: {a.shape} vs {b.shape}"
        )


def trace_distance(r1: DensityMatrix, r2: DensityMatrix) -> float:
    a, b = _as_matrix(r1), _as_matrix(r2)
    _same_dim(a, b)
    return 0.5 * float(np.sum(np.linalg.svd(a - b, compute_uv=False)))


def frobenius_distance(r1: DensityMatrix, r2: DensityMatrix) -> float:
    a, b = _as_matrix(r1), _as_matrix(r2)
    _same_dim(a, b)
    return float(np.linalg.norm(a - b, "fro"))


def relative_entropy(r1: DensityMatrix, r2: DensityMatrix) -> float:
    """``Tr r1 (log r1 - log r2)``; ``inf`` when supp(r1) is not in supp(r2)."""
    a, b = _as_matrix(r1), _as_matrix(r2)
    _same_dim(a, b)
    p, va = eigh(a)
    q, vb = eigh(b)
    overlap = np.abs(va.conj().T @ vb) ** 2
    keep = p > EIGEN_FLOOR
    p, overlap = p[keep], overlap[keep]
    weight = p[:, None] * overlap
    null = q <= EIGEN_FLOOR
    if np.any(weight[:, null] > EIGEN_FLOOR):
        return math.inf
    cross = np.sum(weight[:, ~null] * np.log(q[~null])[None, :])
    return float(np.sum(p * np.log(p)) - cross)


class Observable(StrEnum):
    EA_U1 = "ea_u1"
    EA_Z2 = "ea_z2"
    CV = "cv"
    Q_MEAN = "q_mean"
    Q2_MEAN = "q2_mean"
    SECTOR_WEIGHTS = "sector_weights"
    SECTOR_PROBABILITIES = "sector_probabilities"
    TRACE_DISTANCE = "trace_distance"
    FROBENIUS_DISTANCE = "frobenius_distance"


def _charge_key(prefix: str, q: int) -> str:
    return f"{prefix}[q={q:+d}]"


def evaluate_observables(state: StateVector,
                         observables: Iterable[Observable | str],
                         mask: SubsystemMask,
                         n: float = 1.0) -> dict[str, float]:
    """Evaluate each requested observable on *state*.

    Multi-valued observables expand to one key per charge, e.g.
    ``sector_weight[q=+2]`` and ``p_q[q=-4]``.
    """
    wanted = {Observable(o) for o in observables}
    out: dict[str, float] = {}
    rho = None
    u1 = ChargeProbe(ProbeKind.U1, mask)
    if wanted & {Observable.EA_U1, Observable.EA_Z2, Observable.SECTOR_WEIGHTS,
                 Observable.TRACE_DISTANCE, Observable.FROBENIUS_DISTANCE}:
        rho = partial_trace(state, mask)
    if Observable.EA_U1 in wanted:
        out[Observable.EA_U1.value] = entanglement_asymmetry_of(rho, u1, n)
    if Observable.EA_Z2 in wanted:
        z2 = ChargeProbe(ProbeKind.Z2, mask)
        out[Observable.EA_Z2.value] = entanglement_asymmetry_of(rho, z2, n)
    if wanted & {Observable.CV, Observable.Q_MEAN, Observable.Q2_MEAN}:
        q1, q2 = charge_moments(state)
        if Observable.CV in wanted:
            out[Observable.CV.value] = q2 - q1 * q1
        if Observable.Q_MEAN in wanted:
            out[Observable.Q_MEAN.value] = q1
        if Observable.Q2_MEAN in wanted:
            out[Observable.Q2_MEAN.value] = q2
    if Observable.SECTOR_WEIGHTS in wanted:
        for q, w in sector_weights(rho, u1).items():
            out[_charge_key("sector_weight", q)] = w
    if Observable.SECTOR_PROBABILITIES in wanted:
        for q, p in sector_probabilities(state).items():
            out[_charge_key("p_q", q)] = p
    if wanted & {Observable.TRACE_DISTANCE, Observable.FROBENIUS_DISTANCE}:
        dephased = project_to_sectors(rho, u1)
        if Observable.TRACE_DISTANCE in wanted:
            out[Observable.TRACE_DISTANCE.value] = trace_distance(rho, dephased)
        if Observable.FROBENIUS_DISTANCE in wanted:
            out[Observable.FROBENIUS_DISTANCE.value] = frobenius_distance(rho, dephased)
    return out
