"""Two-qubit gate sampling: Haar-random and U(1)-symmetric gates.

Gate matrices use the basis order ``|00>, |01>, |10>, |11>`` where the first
label is the first site the gate is applied to.
"""

from __future__ import annotations

import math
from enum import StrEnum

import numpy as np
from scipy.linalg import qr

from qmpemba.errors import InvalidArgumentError

__all__ = [
    "GateKind",
    "RngStream",
    "TwoQubitGate",
    "IDENTITY",
    "SWAP",
    "haar_unitary",
    "sample_haar",
    "sample_u1_gate",
    "sample_gate",
    "tilt_rotation",
    "two_site_charge",
    "is_u1_symmetric",
]

UNITARITY_TOL = 1e-8


class GateKind(StrEnum):
    U1_SYMMETRIC = "u1_symmetric"
    HAAR = "haar"


class RngStream:
    """Reproducible random stream keyed by ``(seed, stream_id)``.

    Backed by the counter-based Philox bit generator, so a stream's draws
    depend only on its key and on how many values were drawn before.
    """

    __slots__ = ("seed", "stream_id", "generator")

    def __init__(self, seed: int, stream_id: int = 0):
        if seed < 0 or stream_id < 0:
            raise InvalidArgumentError("seed and stream_id must be non-negative")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        seq = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        self.generator = np.random.Generator(np.random.Philox(seq))

    def __repr__(self) -> str:
        return f"<RngStream(seed={self.seed}, stream_id={self.stream_id})>"

    def random(self) -> float:
        return float(self.generator.random())

    def uniform(self, low: float, high: float, size=None):
        return self.generator.uniform(low, high, size)

    def complex_normal(self, shape) -> np.ndarray:
        """Standard complex Gaussian entries, E|z|^2 = 1."""
        g = self.generator.standard_normal((2, *np.atleast_1d(shape)))
        return (g[0] + 1j * g[1]) / math.sqrt(2.0)

    def phase(self) -> complex:
        return complex(np.exp(1j * self.generator.uniform(0.0, 2.0 * math.pi)))


class TwoQubitGate:
    """A 4x4 unitary acting on an ordered pair of sites."""

    __slots__ = ("matrix", "kind")

    def __init__(self, matrix, kind: GateKind | None = None):
        m = np.asarray(matrix, dtype=np.complex128)
        if m.shape != (4, 4):
            raise InvalidArgumentError(f"two-qubit gate must be 4x4, got {m.shape}")
        self.matrix = m
        self.kind = kind

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)

    def __repr__(self) -> str:
        return f"<TwoQubitGate(kind={self.kind})>"

    def unitarity_error(self) -> float:
        """``max |U^dagger U - I|``."""
        m = self.matrix
        return float(np.max(np.abs(m.conj().T @ m - np.eye(4))))

    def is_unitary(self, tol: float = UNITARITY_TOL) -> bool:
        return self.unitarity_error() <= tol


IDENTITY = TwoQubitGate(np.eye(4))
SWAP = TwoQubitGate(np.array([[1, 0, 0, 0],
                              [0, 0, 1, 0],
                              [0, 1, 0, 0],
                              [0, 0, 0, 1]]))


def haar_unitary(dim: int, rng: RngStream) -> np.ndarray:
    """Haar-random ``dim x dim`` unitary.

    QR of a complex Ginibre matrix with the columns of Q rescaled by the
    phases of R's diagonal.
    """
    z = rng.complex_normal((dim, dim))
    q, r = qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def sample_haar(rng: RngStream) -> TwoQubitGate:
    return TwoQubitGate(haar_unitary(4, rng), GateKind.HAAR)


def sample_u1_gate(rng: RngStream, random_phases: bool = True) -> TwoQubitGate:
    """Charge-conserving gate: phase (+) 2x2 Haar block (+) phase.

    With *random_phases* false the two one-dimensional blocks are fixed to 1;
    the draw sequence then skips those two values.
    """
    m = np.zeros((4, 4), dtype=np.complex128)
    m[0, 0] = rng.phase() if random_phases else 1.0
    m[1:3, 1:3] = haar_unitary(2, rng)
    m[3, 3] = rng.phase() if random_phases else 1.0
    return TwoQubitGate(m, GateKind.U1_SYMMETRIC)


def sample_gate(kind: GateKind, rng: RngStream,
                random_phases: bool = True) -> TwoQubitGate:
    if kind == GateKind.HAAR:
        return sample_haar(rng)
    return sample_u1_gate(rng, random_phases)


def tilt_rotation(theta: float) -> np.ndarray:
    """Single-site factor ``exp(-i theta/2 sigma^y)``."""
    c = math.cos(theta / 2.0)
    s = math.sin(theta / 2.0)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def two_site_charge() -> np.ndarray:
    """``sigma^z (x) I + I (x) sigma^z`` in the gate basis."""
    return np.diag([2.0, 0.0, 0.0, -2.0]).astype(np.complex128)


def is_u1_symmetric(gate, tol: float = 1e-12) -> bool:
    """True iff ``max |[U, Q2]| <= tol``."""
    if tol <= 0:
        raise InvalidArgumentError("tol must be positive")
    u = np.asarray(gate, dtype=np.complex128)
    q = two_site_charge()
    return float(np.max(np.abs(u @ q - q @ u))) <= tol
