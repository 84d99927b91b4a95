from __future__ import annotations

import numpy as np
import pytest

from qmpemba.gates import RngStream
from qmpemba.qstate import random_state

_I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)


def embed(ops: dict[int, np.ndarray], num_sites: int) -> np.ndarray:
    """Dense operator with ``ops[i]`` on site ``i``; site 0 is the lowest bit."""
    out = np.array([[1.0]], dtype=complex)
    for k in reversed(range(num_sites)):
        out = np.kron(out, ops.get(k, _I2))
    return out


@pytest.fixture
def rng() -> RngStream:
    return RngStream(1234, 0)


@pytest.fixture
def random_states():
    def make(num_sites: int, count: int, seed: int = 7):
        return [random_state(num_sites, RngStream(seed, k)) for k in range(count)]
    return make


@pytest.fixture(autouse=True)
def single_worker(monkeypatch):
    monkeypatch.setenv("MPEMBA_THREADS", "1")


@pytest.fixture
def paulis():
    """``(embed, X, Y, Z)`` for building reference operators."""
    return embed, X, Y, Z
