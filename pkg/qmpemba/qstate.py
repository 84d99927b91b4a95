"""Dense statevectors, reduced density matrices and initial states.

Basis convention: bit ``i`` of an amplitude index (least-significant bit =
site 0) is the state of site ``i``; bit value 0 is sigma^z = +1.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from enum import StrEnum
from typing import Sequence

import numpy as np

from qmpemba.errors import (
    InvalidArgumentError,
    InvalidGateError,
    ResourceLimitError,
)
from qmpemba.gates import UNITARITY_TOL, RngStream, TwoQubitGate, tilt_rotation

__all__ = [
    "MAX_SITES",
    "StateVector",
    "SubsystemMask",
    "DensityMatrix",
    "PatternKind",
    "InitialStatePattern",
    "basis_state",
    "tilted_product_state",
    "random_state",
    "apply_single_qubit",
    "apply_two_qubit",
    "partial_trace",
    "expectation",
]

MAX_SITES = 20
STATE_TOL = 1e-10
NORM_TOL = 1e-8


def _check_sites(num_sites: int) -> None:
    if num_sites < 2:
        raise InvalidArgumentError(f"need at least 2 sites, got {num_sites}")
    if num_sites > MAX_SITES:
        raise ResourceLimitError(
            f"{num_sites} sites exceeds the dense statevector cap of {MAX_SITES}"
        )


class StateVector:
    """Pure state of ``num_sites`` qubits as ``2**num_sites`` amplitudes."""

    __slots__ = ("num_sites", "amplitudes")

    def __init__(self, amplitudes, num_sites: int | None = None):
        amps = np.asarray(amplitudes, dtype=np.complex128).reshape(-1)
        n = amps.size.bit_length() - 1
        if n < 0 or amps.size != 1 << n:
            raise InvalidArgumentError(
                f"amplitude count {amps.size} is not a power of two"
            )
        if num_sites is not None and num_sites != n:
            raise InvalidArgumentError(
                f"{amps.size} amplitudes do not describe {num_sites} sites"
            )
        _check_sites(n)
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise InvalidArgumentError(f"state is not normalized (norm {norm:.12g})")
        self.num_sites = n
        self.amplitudes = amps

    def __repr__(self) -> str:
        return f"<StateVector(num_sites={self.num_sites})>"

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def copy(self) -> "StateVector":
        return StateVector(self.amplitudes.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def tensor(self) -> np.ndarray:
        """View with one axis per site; site ``i`` is axis ``L - 1 - i``."""
        return self.amplitudes.reshape((2,) * self.num_sites)


@dataclass(frozen=True, slots=True)
class SubsystemMask:
    """Contiguous block of sites ``[start, start + length)``."""

    start: int
    length: int

    def __post_init__(self):
        if self.start < 0:
            raise InvalidArgumentError(f"subsystem start {self.start} is negative")
        if self.length < 1:
            raise InvalidArgumentError(
                f"subsystem length must be >= 1, got {self.length}"
            )

    @property
    def stop(self) -> int:
        return self.start + self.length

    @property
    def sites(self) -> range:
        return range(self.start, self.stop)

    def validate(self, num_sites: int) -> None:
        if self.stop > num_sites:
            raise InvalidArgumentError(
                f"subsystem [{self.start}, {self.stop}) does not fit in "
                f"{num_sites} sites"
            )


class DensityMatrix:
    """Hermitian, positive, unit-trace matrix on ``log2(dim)`` sites."""

    __slots__ = ("entries",)

    def __init__(self, entries):
        m = np.asarray(entries, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidArgumentError(f"density matrix must be square, got {m.shape}")
        self.entries = m

    def __repr__(self) -> str:
        return f"<DensityMatrix(dim={self.dim})>"

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def num_sites(self) -> int:
        return self.dim.bit_length() - 1

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)

    def purity(self) -> float:
        return float(np.real(np.vdot(self.entries, self.entries)))

    def check(self, tol: float = STATE_TOL) -> None:
        """Raise if Hermiticity, unit trace or positivity is violated."""
        m = self.entries
        if np.max(np.abs(m - m.conj().T)) > tol:
            raise InvalidArgumentError("density matrix is not Hermitian")
        if abs(np.trace(m) - 1.0) > tol:
            raise InvalidArgumentError(f"trace is {np.trace(m).real}, expected 1")
        if self.eigenvalues().min() < -tol:
            raise InvalidArgumentError("density matrix has negative eigenvalues")


class PatternKind(StrEnum):
    FERROMAGNETIC = "ferromagnetic"
    ANTIFERROMAGNETIC = "antiferromagnetic"
    DOMAIN_WALL = "domain_wall"


@dataclass(frozen=True, slots=True)
class InitialStatePattern:
    """Reference bit pattern rotated about y by *tilt* radians."""

    kind: PatternKind
    tilt: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", PatternKind(self.kind))
        if not 0.0 <= self.tilt <= np.pi / 2 + 1e-12:
            raise InvalidArgumentError(
                f"tilt {self.tilt} outside [0, pi/2]"
            )

    def bits(self, num_sites: int) -> list[int]:
        if self.kind == PatternKind.FERROMAGNETIC:
            return [0] * num_sites
        if self.kind == PatternKind.ANTIFERROMAGNETIC:
            return [i % 2 for i in range(num_sites)]
        wall = num_sites // 2
        return [0] * wall + [1] * (num_sites - wall)

    def label(self) -> str:
        return f"{self.kind.value}_theta={self.tilt / np.pi:g}pi"


def _parse_bits(bits: str | Sequence[int]) -> list[int]:
    if isinstance(bits, str):
        out = [int(c) for c in bits.strip()]
    else:
        out = [int(b) for b in bits]
    if any(b not in (0, 1) for b in out):
        raise InvalidArgumentError(f"bits must be 0/1, got {bits!r}")
    return out


def basis_state(num_sites: int, bits: str | Sequence[int]) -> StateVector:
    """Computational basis state; ``bits[i]`` is the state of site ``i``."""
    _check_sites(num_sites)
    b = _parse_bits(bits)
    if len(b) != num_sites:
        raise InvalidArgumentError(
            f"got {len(b)} bits for {num_sites} sites"
        )
    index = sum(bit << i for i, bit in enumerate(b))
    amps = np.zeros(1 << num_sites, dtype=np.complex128)
    amps[index] = 1.0
    return StateVector(amps)


def tilted_product_state(num_sites: int,
                         pattern: InitialStatePattern) -> StateVector:
    """``exp(-i theta/2 sum_j sigma^y_j)`` applied to the pattern's basis state."""
    _check_sites(num_sites)
    rot = tilt_rotation(pattern.tilt)
    factors = [rot[:, bit] for bit in pattern.bits(num_sites)]
    # kron puts its left operand on the high bits, so site L-1 goes first
    amps = functools.reduce(np.kron, reversed(factors))
    return StateVector(amps)


def random_state(num_sites: int, rng: RngStream) -> StateVector:
    """Haar-random pure state."""
    _check_sites(num_sites)
    z = rng.complex_normal(1 << num_sites)
    return StateVector(z / np.linalg.norm(z))


def _apply_1q(psi: np.ndarray, matrix: np.ndarray, i: int, n: int) -> np.ndarray:
    t = psi.reshape((2,) * n)
    out = np.tensordot(matrix, t, axes=([1], [n - 1 - i]))
    return np.moveaxis(out, 0, n - 1 - i).reshape(-1)


def _apply_2q(psi: np.ndarray, matrix: np.ndarray, i: int, j: int,
              n: int) -> np.ndarray:
    t = psi.reshape((2,) * n)
    ai, aj = n - 1 - i, n - 1 - j
    g = matrix.reshape(2, 2, 2, 2)
    out = np.tensordot(g, t, axes=([2, 3], [ai, aj]))
    return np.moveaxis(out, (0, 1), (ai, aj)).reshape(-1)


def _check_site(i: int, n: int) -> None:
    if not 0 <= i < n:
        raise InvalidArgumentError(f"site {i} out of range for {n} sites")


def apply_single_qubit(state: StateVector, matrix, i: int) -> StateVector:
    m = np.asarray(matrix, dtype=np.complex128)
    if m.shape != (2, 2):
        raise InvalidArgumentError(f"single-qubit gate must be 2x2, got {m.shape}")
    if np.max(np.abs(m.conj().T @ m - np.eye(2))) > UNITARITY_TOL:
        raise InvalidGateError("single-qubit gate is not unitary")
    _check_site(i, state.num_sites)
    return StateVector(_apply_1q(state.amplitudes, m, i, state.num_sites))


def apply_two_qubit(state: StateVector, gate: TwoQubitGate | np.ndarray,
                    i: int, j: int) -> StateVector:
    """Apply *gate* with site *i* as the first label and *j* as the second."""
    g = gate if isinstance(gate, TwoQubitGate) else TwoQubitGate(gate)
    if not g.is_unitary():
        raise InvalidGateError(
            f"gate deviates from unitarity by {g.unitarity_error():.3e}"
        )
    n = state.num_sites
    _check_site(i, n)
    _check_site(j, n)
    if i == j:
        raise InvalidArgumentError("a two-qubit gate needs two distinct sites")
    return StateVector(_apply_2q(state.amplitudes, g.matrix, i, j, n))


def partial_trace(state: StateVector, mask: SubsystemMask) -> DensityMatrix:
    """Reduced density matrix of the sites in *mask*.

    Subsystem basis index bit ``k`` is the state of site ``mask.start + k``.
    """
    mask.validate(state.num_sites)
    n, m, s = state.num_sites, mask.length, mask.start
    psi = state.amplitudes.reshape(1 << (n - s - m), 1 << m, 1 << s)
    rho = np.einsum("amb,anb->mn", psi, psi.conj())
    return DensityMatrix(rho)


def expectation(state: StateVector, operator) -> float:
    """``<psi|O|psi>``; a 1-D *operator* is read as a diagonal."""
    op = np.asarray(operator)
    psi = state.amplitudes
    if op.ndim == 1:
        return float(np.dot(np.abs(psi) ** 2, op.real))
    return float(np.real(np.vdot(psi, op @ psi)))
