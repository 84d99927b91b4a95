from __future__ import annotations

import numpy as np
import pytest

from qmpemba.circuit import (
    CircuitConfig,
    DopingMode,
    TimeSeries,
    brickwall_bonds,
    draw_doping_pattern,
    run_ensemble,
    run_realization,
    step,
)
from qmpemba import circuit
from qmpemba.errors import InvalidArgumentError, InvalidGateError
from qmpemba.gates import RngStream, TwoQubitGate
from qmpemba.metrics import Observable, charge_moments
from qmpemba.qstate import (
    InitialStatePattern,
    PatternKind,
    SubsystemMask,
    basis_state,
    tilted_product_state,
)

FERRO_HALF = InitialStatePattern(PatternKind.FERROMAGNETIC, 0.5 * np.pi)


def test_brickwall_bonds():
    first, second = brickwall_bonds(6)
    assert first == [(0, 1), (2, 3), (4, 5)]
    assert second == [(1, 2), (3, 4), (5, 0)]


@pytest.mark.parametrize("L", [3, 7, 2])
def test_config_requires_even_length(L):
    with pytest.raises(InvalidArgumentError, match="even"):
        CircuitConfig(L=L)


def test_config_defaults():
    cfg = CircuitConfig(L=12)
    assert cfg.subsystem == SubsystemMask(0, 3)
    assert cfg.realizations == 100
    assert cfg.doping_mode == DopingMode.PER_GATE


def test_config_rejects_large_subsystem():
    with pytest.raises(InvalidArgumentError):
        CircuitConfig(L=8, subsystem=SubsystemMask(0, 5))
    with pytest.raises(InvalidArgumentError):
        CircuitConfig(L=8, p_haar=1.5)


def test_symmetric_step_keeps_polarized_state(rng):
    cfg = CircuitConfig(L=6, p_haar=0.0)
    psi0 = basis_state(6, "000000")
    psi = step(psi0, rng, cfg)
    np.testing.assert_allclose(psi.probabilities(), psi0.probabilities(), atol=1e-12)


def test_step_checks_size(rng):
    with pytest.raises(InvalidArgumentError):
        step(basis_state(4, "0000"), rng, CircuitConfig(L=6))


def test_symmetric_circuit_conserves_charge_moments():
    cfg = CircuitConfig(L=8, p_haar=0.0, steps=10, seed=3)
    pattern = InitialStatePattern(PatternKind.ANTIFERROMAGNETIC, 0.3 * np.pi)
    out = run_realization(cfg, pattern, 0, [Observable.Q_MEAN, Observable.Q2_MEAN])
    assert out["q_mean"].shape == (11,)
    assert np.max(np.abs(out["q_mean"] - out["q_mean"][0])) < 1e-9
    assert np.max(np.abs(out["q2_mean"] - out["q2_mean"][0])) < 1e-9


def test_norm_preserved_with_haar_gates():
    cfg = CircuitConfig(L=6, p_haar=1.0)
    rng = RngStream(5)
    psi = tilted_product_state(6, FERRO_HALF)
    for _ in range(10):
        psi = step(psi, rng, cfg)
    assert abs(psi.norm() - 1) < 1e-8


def test_haar_gates_break_charge_conservation():
    cfg = CircuitConfig(L=6, p_haar=1.0, steps=3)
    out = run_realization(cfg, InitialStatePattern(PatternKind.FERROMAGNETIC), 0,
                          [Observable.CV])
    assert out["cv"][0] == pytest.approx(0, abs=1e-12)
    assert out["cv"][-1] > 1e-3


def test_zero_steps_returns_initial_values():
    cfg = CircuitConfig(L=4, steps=0)
    out = run_realization(cfg, FERRO_HALF, 0, [Observable.CV, Observable.EA_U1])
    assert out["cv"].tolist() == pytest.approx([4.0])
    assert out["ea_u1"].shape == (1,)


def test_symmetric_state_stays_symmetric():
    cfg = CircuitConfig(L=8, p_haar=0.0, steps=6)
    out = run_realization(cfg, InitialStatePattern(PatternKind.FERROMAGNETIC), 1,
                          [Observable.EA_U1])
    assert np.max(np.abs(out["ea_u1"])) < 1e-10


def test_z2_asymmetry_never_exceeds_u1():
    cfg = CircuitConfig(L=8, p_haar=0.3, steps=6, subsystem=SubsystemMask(0, 3))
    out = run_realization(cfg, FERRO_HALF, 2, [Observable.EA_U1, Observable.EA_Z2])
    assert np.all(out["ea_z2"] <= out["ea_u1"] + 1e-10)


def test_single_realization_has_zero_stderr():
    cfg = CircuitConfig(L=6, steps=4, realizations=1, seed=11)
    ens = run_ensemble(cfg, FERRO_HALF, [Observable.EA_U1], workers=1)["ea_u1"]
    single = run_realization(cfg, FERRO_HALF, 0, [Observable.EA_U1])["ea_u1"]
    np.testing.assert_array_equal(ens.mean, single)
    np.testing.assert_array_equal(ens.stderr, 0.0)
    assert ens.n_realizations == 1
    np.testing.assert_array_equal(ens.times, np.arange(5))


def test_ensemble_is_deterministic():
    cfg = CircuitConfig(L=6, p_haar=0.2, steps=4, realizations=4, seed=9)
    a = run_ensemble(cfg, FERRO_HALF, [Observable.EA_U1, Observable.CV], workers=1)
    b = run_ensemble(cfg, FERRO_HALF, [Observable.EA_U1, Observable.CV], workers=1)
    for key in a:
        np.testing.assert_array_equal(a[key].mean, b[key].mean)
        np.testing.assert_array_equal(a[key].stderr, b[key].stderr)


def test_ensemble_independent_of_worker_count():
    cfg = CircuitConfig(L=6, p_haar=0.2, steps=3, realizations=4, seed=9)
    serial = run_ensemble(cfg, FERRO_HALF, [Observable.EA_U1], workers=1)["ea_u1"]
    pooled = run_ensemble(cfg, FERRO_HALF, [Observable.EA_U1], workers=2)["ea_u1"]
    np.testing.assert_array_equal(serial.mean, pooled.mean)


def test_haar_step_creates_asymmetry():
    cfg = CircuitConfig(L=8, p_haar=1.0, steps=1, realizations=100,
                        subsystem=SubsystemMask(0, 2))
    ens = run_ensemble(cfg, InitialStatePattern(PatternKind.FERROMAGNETIC),
                       [Observable.EA_U1], workers=1)["ea_u1"]
    assert ens.mean[0] == pytest.approx(0, abs=1e-12)
    assert ens.mean[1] > 0.01


def test_doping_pattern_limits():
    rng = RngStream(0)
    assert draw_doping_pattern(rng, CircuitConfig(L=8, p_haar=1.0)).all()
    pattern = draw_doping_pattern(rng, CircuitConfig(L=8, p_haar=0.0))
    assert pattern.shape == (2, 4)
    assert not pattern.any()


def test_fixed_positions_without_haar_conserves_charge():
    cfg = CircuitConfig(L=6, p_haar=0.0, steps=4,
                        doping_mode=DopingMode.FIXED_POSITIONS)
    out = run_realization(cfg, pattern, 0, [Observable.CV])
    np.testing.assert_allclose(out["cv"], out["cv"][0], atol=1e-9)


def test_time_series_from_samples():
    s = TimeSeries.from_samples([0, 1], [[1.0, 2.0], [3.0, 6.0]])
    np.testing.assert_allclose(s.mean, [2.0, 4.0])
    np.testing.assert_allclose(s.stderr, [np.sqrt(2) / np.sqrt(2), np.sqrt(8) / np.sqrt(2)])
    assert s.n_realizations == 2


def test_time_series_validation():
    with pytest.raises(InvalidArgumentError):
        TimeSeries([0, 1], [1.0], [0.0])
    with pytest.raises(InvalidArgumentError):
        TimeSeries([0], [1.0], [-1.0])


def test_charge_moments_of_initial_state_recorded():
    cfg = CircuitConfig(L=6, steps=1)
    out = run_realization(cfg, FERRO_HALF, 0, [Observable.Q_MEAN])
    q1, _ = charge_moments(tilted_product_state(6, FERRO_HALF))
    assert out["q_mean"][0] == pytest.approx(q1)


def test_step_rejects_non_unitary_gate(monkeypatch, rng):
    monkeypatch.setattr(circuit, "sample_gate",
                        lambda kind, rng, phases=True: TwoQubitGate(2 * np.eye(4)))
    with pytest.raises(InvalidGateError):
        step(basis_state(4, "0000"), rng, CircuitConfig(L=4))


def test_time_series_compare_by_identity():
    a = TimeSeries([0, 1], [1.0, 2.0], [0.0, 0.0])
    b = TimeSeries([0, 1], [1.0, 2.0], [0.0, 0.0])
    assert a == a
    assert a != b
    assert len({a, b}) == 2
