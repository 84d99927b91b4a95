from __future__ import annotations

import math

import numpy as np
import pytest

from qmpemba.errors import InvalidArgumentError
from qmpemba.metrics import (
    ChargeProbe,
    Observable,
    ProbeKind,
    charge_moments,
    charge_variance,
    entanglement_asymmetry,
    entanglement_asymmetry_of,
    evaluate_observables,
    frobenius_distance,
    maximally_mixed_charge_variance,
    project_to_sectors,
    relative_entropy,
    renyi_entropy,
    renyi_from_spectrum,
    sector_probabilities,
    sector_weights,
    subsystem_charges,
    trace_distance,
)
from qmpemba.qstate import (
    DensityMatrix,
    InitialStatePattern,
    PatternKind,
    StateVector,
    SubsystemMask,
    basis_state,
    partial_trace,
    tilted_product_state,
)


def _bell_pairs() -> StateVector:
    """Sites (0, 2) and (1, 3) each in (|00> + |11>)/sqrt(2)."""
    idx = np.arange(16)
    b0, b1, b2, b3 = ((idx >> k) & 1 for k in range(4))
    amps = np.where((b0 == b2) & (b1 == b3), 0.5, 0.0)
    return StateVector(amps)


def test_subsystem_charges():
    assert subsystem_charges(2, "u1").tolist() == [2, 0, 0, -2]
    assert subsystem_charges(2, "z2").tolist() == [1, -1, -1, 1]


def test_sectors_sorted_by_charge():
    probe = ChargeProbe(ProbeKind.U1, SubsystemMask(0, 3))
    assert probe.sectors().charges() == [3, 1, -1, -3]


@pytest.mark.parametrize("length", [1, 2, 3, 4])
@pytest.mark.parametrize("n", [1, 2, 3])
def test_asymmetry_non_negative(random_states, length, n):
    for psi in random_states(8, 25, seed=length):
        for kind in ProbeKind:
            ea = entanglement_asymmetry(psi, ChargeProbe(kind, SubsystemMask(0, length)), n)
            assert ea >= -1e-10


@pytest.mark.parametrize("bits", ["00000000", "01010101", "00001111", "11010010"])
def test_asymmetry_vanishes_for_charge_eigenstates(bits):
    psi = basis_state(8, bits)
    for n in (1, 2, 3):
        probe = ChargeProbe(ProbeKind.U1, SubsystemMask(1, 3))
        assert abs(entanglement_asymmetry(psi, probe, n)) < 1e-10


def test_asymmetry_vanishes_for_maximally_mixed_subsystem():
    psi = _bell_pairs()
    rho = partial_trace(psi, SubsystemMask(0, 2))
    np.testing.assert_allclose(rho.entries, np.eye(4) / 4, atol=1e-14)
    for n in (1, 2):
        assert abs(entanglement_asymmetry(psi, ChargeProbe("u1", SubsystemMask(0, 2)), n)) < 1e-10


def test_z2_asymmetry_bounded_by_u1(random_states):
    mask = SubsystemMask(0, 3)
    for psi in random_states(6, 10):
        for n in (1, 2):
            z2 = entanglement_asymmetry(psi, ChargeProbe(ProbeKind.Z2, mask), n)
            u1 = entanglement_asymmetry(psi, ChargeProbe(ProbeKind.U1, mask), n)
            assert z2 <= u1 + 1e-10


def test_von_neumann_asymmetry_is_relative_entropy(random_states):
    probe = ChargeProbe(ProbeKind.U1, SubsystemMask(0, 2))
    for psi in random_states(6, 5):
        rho = partial_trace(psi, probe.mask)
        ea = entanglement_asymmetry_of(rho, probe, 1)
        assert ea == pytest.approx(relative_entropy(rho, project_to_sectors(rho, probe)),
                                   abs=1e-9)


def test_projection_removes_coherences(random_states):
    probe = ChargeProbe(ProbeKind.U1, SubsystemMask(0, 3))
    rho = partial_trace(random_states(6, 1)[0], probe.mask)
    dephased = project_to_sectors(rho, probe).entries
    q = np.diag(subsystem_charges(3, "u1")).astype(float)
    np.testing.assert_allclose(dephased @ q - q @ dephased, 0, atol=1e-14)
    assert np.trace(dephased).real == pytest.approx(1)


def test_probe_size_must_match():
    rho = DensityMatrix(np.eye(4) / 4)
    with pytest.raises(InvalidArgumentError):
        entanglement_asymmetry_of(rho, ChargeProbe("u1", SubsystemMask(0, 3)))


def test_renyi_entropy_values():
    mixed = DensityMatrix(np.eye(4) / 4)
    for n in (1, 2, 3):
        assert renyi_entropy(mixed, n) == pytest.approx(math.log(4))
    pure = partial_trace(basis_state(3, "010"), SubsystemMask(0, 2))
    assert renyi_entropy(pure, 1) == pytest.approx(0, abs=1e-12)
    with pytest.raises(InvalidArgumentError):
        renyi_entropy(mixed, 0.5)


@pytest.mark.parametrize("theta", [0.0, 0.2 * np.pi, 0.35 * np.pi, 0.5 * np.pi])
def test_tilted_ferromagnet_charge_moments(theta):
    L = 6
    psi = tilted_product_state(L, InitialStatePattern(PatternKind.FERROMAGNETIC, theta))
    q1, _ = charge_moments(psi)
    assert q1 == pytest.approx(L * math.cos(theta), abs=1e-12)
    assert charge_variance(psi) == pytest.approx(L * math.sin(theta) ** 2, abs=1e-12)


def test_charge_variance_of_basis_state():
    assert charge_variance(basis_state(5, "01101")) == pytest.approx(0, abs=1e-14)


def test_maximally_mixed_variance_matches_uniform_distribution():
    L = 6
    uniform = StateVector(np.full(1 << L, 2 ** (-L / 2)))
    assert charge_variance(uniform) == pytest.approx(maximally_mixed_charge_variance(L))


def test_sector_probabilities(random_states):
    psi = random_states(5, 1)[0]
    p = sector_probabilities(psi)
    assert list(p) == [5, 3, 1, -1, -3, -5]
    assert sum(p.values()) == pytest.approx(1)
    assert sector_probabilities(basis_state(4, "0110"))[0] == pytest.approx(1)


def test_sector_weights_sum_to_one(random_states):
    probe = ChargeProbe("u1", SubsystemMask(1, 3))
    w = sector_weights(partial_trace(random_states(6, 1)[0], probe.mask), probe)
    assert list(w) == [3, 1, -1, -3]
    assert sum(w.values()) == pytest.approx(1)


def test_distances():
    a = partial_trace(basis_state(3, "000"), SubsystemMask(0, 1))
    b = partial_trace(basis_state(3, "100"), SubsystemMask(0, 1))
    assert trace_distance(a, a) == pytest.approx(0, abs=1e-14)
    assert trace_distance(a, b) == pytest.approx(1)
    assert frobenius_distance(a, b) == pytest.approx(math.sqrt(2))
    assert relative_entropy(a, b) == math.inf
    with pytest.raises(InvalidArgumentError):
        trace_distance(a, DensityMatrix(np.eye(4) / 4))


def test_evaluate_observables_keys():
    psi = tilted_product_state(6, InitialStatePattern(PatternKind.FERROMAGNETIC, 0.3))
    out = evaluate_observables(
        psi,
        [Observable.EA_U1, Observable.CV, "sector_weights", "sector_probabilities",
         "trace_distance"],
        SubsystemMask(0, 2),
    )
    assert "ea_u1" in out and "cv" in out and "trace_distance" in out
    assert {"sector_weight[q=+2]", "sector_weight[q=+0]", "sector_weight[q=-2]"} <= set(out)
    assert "p_q[q=+6]" in out and "p_q[q=-6]" in out
    assert out["trace_distance"] > 0


def _full_space_asymmetry(psi: StateVector, mask: SubsystemMask, n: float) -> float:
    """Dephase the full ``2**L`` density matrix, then trace out the complement."""
    L, m, s = psi.num_sites, mask.length, mask.start
    rho = np.outer(psi.amplitudes, psi.amplitudes.conj())
    q = subsystem_charges(m, "u1")[(np.arange(1 << L) >> s) & ((1 << m) - 1)]
    dephased = np.where(q[:, None] == q[None, :], rho, 0.0)
    shape = (1 << (L - s - m), 1 << m, 1 << s) * 2

    def reduce(full):
        return np.einsum("ambanb->mn", full.reshape(shape))

    def renyi(r):
        lam = np.linalg.eigvalsh(r)
        return renyi_from_spectrum(lam, n)

    return renyi(reduce(dephased)) - renyi(reduce(rho))


def test_asymmetry_matches_full_space_dephasing(random_states):
    psi = tilted_product_state(8, InitialStatePattern(PatternKind.FERROMAGNETIC, 0.5 * np.pi))
    mask = SubsystemMask(0, 2)
    ea = entanglement_asymmetry(psi, ChargeProbe(ProbeKind.U1, mask), 2)
    assert ea == pytest.approx(_full_space_asymmetry(psi, mask, 2), abs=1e-10)
    assert ea == pytest.approx(math.log(8 / 3), abs=1e-10)
    mask = SubsystemMask(2, 3)
    for psi in random_states(8, 3):
        for n in (1, 2):
            ea = entanglement_asymmetry(psi, ChargeProbe(ProbeKind.U1, mask), n)
            assert ea == pytest.approx(_full_space_asymmetry(psi, mask, n), abs=1e-10)


def test_projection_matches_explicit_projectors(random_states):
    probe = ChargeProbe(ProbeKind.U1, SubsystemMask(0, 3))
    rho = partial_trace(random_states(6, 1, seed=3)[0], probe.mask)
    projectors = {}
    for q, idx in probe.sectors():
        p = np.zeros((8, 8))
        p[idx, idx] = 1.0
        projectors[q] = p
    explicit = sum(p @ rho.entries @ p for p in projectors.values())
    dephased = project_to_sectors(rho, probe)
    np.testing.assert_allclose(dephased.entries, explicit, atol=1e-15)
    np.testing.assert_allclose(project_to_sectors(dephased, probe).entries,
                               dephased.entries, atol=0)
    assert np.trace(dephased.entries).real == pytest.approx(1)
    weights = sector_weights(rho, probe)
    for q, p in projectors.items():
        assert weights[q] == pytest.approx(np.trace(p @ rho.entries).real, abs=1e-14)
    for n in (1, 2, 3):
        assert renyi_entropy(dephased, n) >= renyi_entropy(rho, n) - 1e-12


@pytest.mark.parametrize("theta", [0.1 * np.pi, 0.3 * np.pi, 0.5 * np.pi])
def test_tilted_ferromagnet_sector_probabilities_are_binomial(theta):
    L = 6
    psi = tilted_product_state(L, InitialStatePattern(PatternKind.FERROMAGNETIC, theta))
    p = sector_probabilities(psi)
    up, down = math.cos(theta / 2) ** 2, math.sin(theta / 2) ** 2
    for k in range(L + 1):
        expected = math.comb(L, k) * up ** (L - k) * down ** k
        assert p[L - 2 * k] == pytest.approx(expected, abs=1e-12)


def test_ghz_charge_variance():
    amps = np.zeros(16)
    amps[0] = amps[15] = 1 / math.sqrt(2)
    ghz = StateVector(amps)
    q1, q2 = charge_moments(ghz)
    assert q1 == pytest.approx(0, abs=1e-14)
    assert q2 == pytest.approx(16)
    assert charge_variance(ghz) == pytest.approx(16)


def test_renyi_of_two_equal_eigenvalues():
    lam = np.array([0.5, 0.5, 0.0, 0.0])
    assert renyi_from_spectrum(lam, 2) == pytest.approx(math.log(2))
    assert renyi_from_spectrum(lam, 1) == pytest.approx(math.log(2))


def test_sector_probabilities_reproduce_charge_moments(random_states):
    states = random_states(6, 4, seed=11)
    states.append(tilted_product_state(6, InitialStatePattern(PatternKind.ANTIFERROMAGNETIC,
                                                              0.35 * np.pi)))
    for psi in states:
        p = sector_probabilities(psi)
        q = np.array(list(p.keys()), dtype=float)
        w = np.array(list(p.values()))
        q1, q2 = charge_moments(psi)
        assert float(w @ q) == pytest.approx(q1, abs=1e-10)
        assert float(w @ q ** 2) == pytest.approx(q2, abs=1e-10)
