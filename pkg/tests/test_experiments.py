from __future__ import annotations

import numpy as np
import pytest

from qmpemba.config import parse_config
from qmpemba.errors import InvalidArgumentError
from qmpemba.experiments import run_experiment
from qmpemba.hamiltonian import HamiltonianParams, diagonalize
from qmpemba.metrics import evaluate_observables
from qmpemba.qstate import SubsystemMask

GAMMA_SWEEP = """\
experiment = gamma_sweep
preset = h1
L = 6
pattern = domain_wall
thetas = 0
subsystem_length = 2
gamma_grid = 0.5, 0.8, 0.3
t_max = 4
dt = 0.1
late_t1 = 50
late_t2 = 500
late_samples = 20
"""


@pytest.fixture(scope="module")
def sweep():
    return run_experiment(parse_config(GAMMA_SWEEP))


def test_gamma_sweep_series_ordered_by_anisotropy(sweep):
    peak = sweep.series["ea_vs_anisotropy_peak_domain_wall_theta=0pi"]
    np.testing.assert_allclose(peak.times, [0.2, 0.5, 0.7])
    assert np.all(peak.mean > 0)
    assert len(sweep.charts["ea_vs_anisotropy"]) == 3
    assert sweep.xlabel == "1-gamma"
    assert sweep.summary.startswith("gamma_sweep domain_wall_theta=0pi")


def test_gamma_sweep_ratio_is_late_over_peak(sweep):
    peak = sweep.series["ea_vs_anisotropy_peak_domain_wall_theta=0pi"].mean
    late = sweep.series["ea_vs_anisotropy_late_domain_wall_theta=0pi"].mean
    ratio = sweep.series["late_peak_ratio_domain_wall_theta=0pi"].mean
    np.testing.assert_allclose(ratio, late / peak)


def test_gamma_sweep_ground_state_reference(sweep):
    gs = sweep.series["ea_vs_anisotropy_ground_state"]
    spectrum = diagonalize(HamiltonianParams.h1(6, 0.5))
    ref = evaluate_observables(spectrum.ground_state(), ["ea_u1"], SubsystemMask(0, 2))
    assert gs.mean[1] == pytest.approx(ref["ea_u1"], abs=1e-12)
    assert np.all(gs.mean >= -1e-12)


def test_single_series_summary_reports_peak():
    cfg = parse_config("experiment = ham_quench\npreset = h2\nL = 6\ngamma = 0.6\n"
                       "pattern = domain_wall\nthetas = 0\nsubsystem_length = 2\n"
                       "observables = ea_u1\nt_max = 2\ndt = 0.1\n")
    summary = run_experiment(cfg).summary
    assert "peak" in summary and "final" in summary


def test_circuit_late_window_must_hold_a_step():
    cfg = parse_config("experiment = latetime\ndynamics = circuit\nL = 4\nsteps = 6\n"
                       "realizations = 2\nlate_t1 = 2.2\nlate_t2 = 2.8\n")
    with pytest.raises(InvalidArgumentError):
        run_experiment(cfg)


def test_circuit_late_window_averages_the_steps_inside():
    cfg = parse_config("experiment = latetime\ndynamics = circuit\nL = 4\nsteps = 6\n"
                       "realizations = 2\nlate_t1 = 4\nlate_t2 = 6\nobservables = cv\n")
    result = run_experiment(cfg, workers=1)
    late = result.series["cv_late"]
    np.testing.assert_allclose(late.times, [0.2, 0.5])
    assert np.all(np.isfinite(late.mean))
