"""Experiment drivers behind ``qmpemba run``."""

from __future__ import annotations

import dataclasses
import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from qmpemba.analysis import (
    detect_crossing,
    find_peak,
    fit_power_law,
    late_time_trend,
    order_by_initial,
)
from qmpemba.circuit import CircuitConfig, TimeSeries, run_ensemble
from qmpemba.config import ExperimentConfig, ExperimentKind
from qmpemba.errors import InvalidArgumentError
from qmpemba.gates import RngStream
from qmpemba.hamiltonian import (
    HamiltonianParams,
    SpectralDecomposition,
    default_time_grid,
    diagonalize,
    late_time_value,
    quench_series,
)
from qmpemba.metrics import Observable, evaluate_observables
from qmpemba.qstate import InitialStatePattern, SubsystemMask

__all__ = ["ExperimentResult", "run_experiment", "theta_label"]

logger = logging.getLogger(__name__)

_DEFAULT_OBSERVABLES = {
    ExperimentKind.CIRCUIT_EA: (Observable.EA_U1,),
    ExperimentKind.CIRCUIT_CV: (Observable.CV,),
    ExperimentKind.HAM_QUENCH: (Observable.EA_U1, Observable.CV),
    ExperimentKind.CHARGE_DIST: (Observable.SECTOR_PROBABILITIES,),
    ExperimentKind.PEAK_FIT: (Observable.EA_U1,),
    ExperimentKind.CROSSING: (Observable.EA_U1,),
    ExperimentKind.LATETIME: (Observable.EA_U1, Observable.CV),
    ExperimentKind.GAMMA_SWEEP: (Observable.EA_U1,),
}

_CHARGE_DIST_TIMES = (0.0, 0.75, 1.5, 3.0)


@dataclass
class ExperimentResult:
    """Series keyed by output file stem, chart groups and a summary line."""

    series: dict[str, TimeSeries] = field(default_factory=dict)
    charts: dict[str, list[TimeSeries]] = field(default_factory=dict)
    summary: str = ""
    xlabel: str = ""

    def add(self, observable: str, label: str, s: TimeSeries) -> None:
        named = TimeSeries(s.times, s.mean, s.stderr, s.n_realizations, label)
        self.series[f"{observable}_{label}"] = named
        self.charts.setdefault(observable, []).append(named)


def theta_label(theta: float) -> str:
    return f"theta={theta:g}pi"


def _observables(cfg: ExperimentConfig) -> tuple[Observable, ...]:
    return cfg.observables or _DEFAULT_OBSERVABLES[cfg.experiment]


def _mask(cfg: ExperimentConfig) -> SubsystemMask | None:
    if cfg.subsystem_length is None:
        return None
    return SubsystemMask(cfg.subsystem_start, cfg.subsystem_length)


def _pattern(cfg: ExperimentConfig, theta: float) -> InitialStatePattern:
    return InitialStatePattern(cfg.pattern, theta * math.pi)


def _circuit_config(cfg: ExperimentConfig, p_haar: float | None = None) -> CircuitConfig:
    return CircuitConfig(
        L=cfg.L,
        p_haar=cfg.p_haar if p_haar is None else p_haar,
        steps=cfg.steps,
        realizations=cfg.realizations,
        seed=cfg.seed,
        subsystem=_mask(cfg),
        renyi_n=cfg.renyi_n,
        doping_mode=cfg.doping_mode,
        u1_random_phases=cfg.u1_random_phases,
    )


def _ham_params(cfg: ExperimentConfig) -> HamiltonianParams:
    return HamiltonianParams(cfg.L, cfg.gamma, cfg.delta, cfg.j2, cfg.delta2,
                             cfg.boundary)


class _Runner:
    """Evaluates a tilt angle under the configured dynamics.

    The Hamiltonian spectrum is built on first use and shared by all angles.
    """

    def __init__(self, cfg: ExperimentConfig, workers: int | None):
        self.cfg = cfg
        self.workers = workers if workers is not None else cfg.workers
        self._spectrum: SpectralDecomposition | None = None

    @property
    def spectrum(self) -> SpectralDecomposition:
        if self._spectrum is None:
            self._spectrum = diagonalize(_ham_params(self.cfg))
        return self._spectrum

    def series(self, theta: float, observables, times=None,
               p_haar: float | None = None) -> dict[str, TimeSeries]:
        cfg = self.cfg
        if cfg.uses_circuit:
            return run_ensemble(_circuit_config(cfg, p_haar), _pattern(cfg, theta),
                                observables, self.workers)
        if times is None:
            times = default_time_grid(cfg.t_max, cfg.dt)
        return quench_series(_ham_params(cfg), _pattern(cfg, theta), times,
                             observables, _mask(cfg), cfg.renyi_n, self.spectrum)

    def persistence(self) -> int:
        if self.cfg.persistence is not None:
            return self.cfg.persistence
        return 2 if self.cfg.uses_circuit else 3


def _crossing_summary(runner: _Runner, key: str, labelled: list[tuple[str, TimeSeries]]) -> str:
    if len(labelled) < 2:
        label, s = labelled[0]
        t_peak, peak = find_peak(s)
        return (f"{key} {label}: peak {peak:.6g} at t={t_peak:g}, "
                f"final {s.mean[-1]:.6g}")
    by_start = sorted(labelled, key=lambda item: item[1].mean[0])
    (lo_label, lo), (hi_label, hi) = by_start[0], by_start[-1]
    if hi.mean[0] == lo.mean[0]:
        return f"{key}: {hi_label} and {lo_label} start equal, ordering undefined"
    s1, s2 = order_by_initial(hi, lo)
    min_sig = runner.cfg.min_significance if runner.cfg.uses_circuit else 0.0
    report = detect_crossing(s1, s2, runner.persistence(), min_sig)
    return f"{key} {hi_label} vs {lo_label}: {report.summary()}"


def _run_trajectories(cfg: ExperimentConfig, runner: _Runner) -> ExperimentResult:
    result = ExperimentResult()
    observables = _observables(cfg)
    per_key: dict[str, list[tuple[str, TimeSeries]]] = {}
    for theta in cfg.thetas:
        label = theta_label(theta)
        for key, s in runner.series(theta, observables).items():
            result.add(key, label, s)
            per_key.setdefault(key, []).append((label, s))
    first = Observable(observables[0]).value
    key = first if first in per_key else next(iter(per_key))
    result.summary = f"{cfg.experiment.value}: " + _crossing_summary(runner, key,
                                                                      per_key[key])
    return result


def _charge_of(key: str) -> int:
    # "p_q[q=+4]" -> 4
    return int(key.rsplit("=", 1)[1].rstrip("]"))


def _distribution_width(p: dict[int, float]) -> float:
    q = np.array(list(p.keys()), dtype=np.float64)
    w = np.array(list(p.values()), dtype=np.float64)
    mean = float(w @ q)
    return math.sqrt(max(float(w @ (q * q)) - mean * mean, 0.0))


def _run_charge_dist(cfg: ExperimentConfig, runner: _Runner) -> ExperimentResult:
    result = ExperimentResult()
    times = np.asarray(cfg.times or _CHARGE_DIST_TIMES, dtype=np.float64)
    parts = []
    for theta in cfg.thetas:
        label = theta_label(theta)
        series = runner.series(theta, [Observable.SECTOR_PROBABILITIES], times=times)
        for key, s in series.items():
            result.add(key, label, s)
        widths = [
            _distribution_width({_charge_of(k): float(s.mean[i]) for k, s in series.items()})
            for i in (0, -1)
        ]
        trend = "narrows" if widths[1] < widths[0] else "broadens"
        parts.append(f"{label} width {widths[0]:.4g} -> {widths[1]:.4g} ({trend})")
    result.summary = "charge_dist: " + "; ".join(parts)
    return result


def _run_peak_fit(cfg: ExperimentConfig, runner: _Runner) -> ExperimentResult:
    result = ExperimentResult()
    theta = cfg.thetas[0]
    points, stderrs, grid = [], [], []
    for p in cfg.p_haar_grid:
        series = runner.series(theta, [Observable.EA_U1], p_haar=p)[Observable.EA_U1.value]
        result.add(Observable.EA_U1.value, f"p_haar={p:g}", series)
        t_peak, peak = find_peak(series)
        logger.info("p_haar=%g: peak %.6g at step %g", p, peak, t_peak)
        if peak <= 0:
            warnings.warn(f"dropping p_haar={p:g} from the fit: peak {peak:g} is not positive",
                          RuntimeWarning, stacklevel=2)
            continue
        k = int(np.flatnonzero(series.times == t_peak)[0])
        points.append((p, peak))
        stderrs.append(series.stderr[k])
        grid.append(p)
    peaks = TimeSeries(grid, [y for _, y in points], stderrs, cfg.realizations,
                       "peak_ea")
    result.series["peak_ea"] = peaks
    if len(points) < 3:
        result.summary = f"peak_fit: only {len(points)} positive peaks, no fit"
        return result
    fit = fit_power_law(points)
    result.summary = (f"peak_fit {cfg.pattern.value} {theta_label(theta)}: "
                      f"a={fit.a:.4g} b={fit.b:.4g} r2={fit.r_squared:.4f}")
    return result


def _run_latetime(cfg: ExperimentConfig, runner: _Runner) -> ExperimentResult:
    result = ExperimentResult(xlabel="theta/pi")
    observables = [o for o in _observables(cfg)
                   if o not in (Observable.SECTOR_WEIGHTS, Observable.SECTOR_PROBABILITIES)]
    values: dict[str, list[float]] = {o.value: [] for o in observables}
    errors: dict[str, list[float]] = {o.value: [] for o in observables}
    if cfg.uses_circuit and math.ceil(cfg.late_t1) > min(cfg.late_t2, cfg.steps):
        raise InvalidArgumentError(
            f"late window [{cfg.late_t1:g}, {cfg.late_t2:g}] holds no step of a "
            f"{cfg.steps}-step run"
        )
    for k, theta in enumerate(cfg.thetas):
        if cfg.uses_circuit:
            series = runner.series(theta, observables)
            lo, hi = cfg.late_t1, cfg.late_t2
            for o in observables:
                s = series[o.value]
                window = (s.times >= lo) & (s.times <= hi)
                values[o.value].append(float(s.mean[window].mean()))
                errors[o.value].append(float(s.stderr[window].mean()))
        else:
            for j, o in enumerate(observables):
                rng = RngStream(cfg.seed, k * len(observables) + j)
                v = late_time_value(_ham_params(cfg), _pattern(cfg, theta), o,
                                    cfg.late_t1, cfg.late_t2, cfg.late_samples, rng,
                                    _mask(cfg), cfg.renyi_n, runner.spectrum)
                values[o.value].append(v)
                errors[o.value].append(0.0)
    n = cfg.realizations if cfg.uses_circuit else 1
    trends = []
    for o in observables:
        s = TimeSeries(cfg.thetas, values[o.value], errors[o.value], n, "late")
        result.add(o.value, "late", s)
        trends.append(f"{o.value} {late_time_trend(values[o.value]).value}")
    result.summary = "latetime: " + ", ".join(trends)
    return result


def _run_gamma_sweep(cfg: ExperimentConfig, runner: _Runner) -> ExperimentResult:
    """Peak, late-time and ground-state asymmetry against ``1 - gamma``."""
    result = ExperimentResult(xlabel="1-gamma")
    theta = cfg.thetas[0]
    pattern = _pattern(cfg, theta)
    mask = _mask(cfg) or SubsystemMask(0, max(1, cfg.L // 4))
    times = default_time_grid(cfg.t_max, cfg.dt)
    ea = Observable.EA_U1
    gammas = sorted(cfg.gamma_grid, reverse=True)
    peaks, lates, ground = [], [], []
    for k, gamma in enumerate(gammas):
        params = dataclasses.replace(_ham_params(cfg), gamma=gamma)
        spectrum = diagonalize(params)
        series = quench_series(params, pattern, times, [ea], mask, cfg.renyi_n,
                               spectrum)[ea.value]
        _, peak = find_peak(series)
        late = late_time_value(params, pattern, ea, cfg.late_t1, cfg.late_t2,
                               cfg.late_samples, RngStream(cfg.seed, k), mask,
                               cfg.renyi_n, spectrum)
        gap = spectrum.eigenvalues[1] - spectrum.eigenvalues[0]
        if gap < 1e-10:
            logger.warning("gamma=%g: ground state is degenerate (gap %.3g); "
                           "using the first eigenvector", gamma, gap)
        gs = evaluate_observables(spectrum.ground_state(), [ea], mask,
                                  cfg.renyi_n)[ea.value]
        logger.info("gamma=%g: peak %.6g, late %.6g, ground state %.6g",
                    gamma, peak, late, gs)
        peaks.append(peak)
        lates.append(late)
        ground.append(gs)
    x = [1.0 - g for g in gammas]
    label = f"{pattern.kind.value}_{theta_label(theta)}"
    result.add("ea_vs_anisotropy", f"peak_{label}", TimeSeries.deterministic(x, peaks))
    result.add("ea_vs_anisotropy", f"late_{label}", TimeSeries.deterministic(x, lates))
    result.add("ea_vs_anisotropy", "ground_state", TimeSeries.deterministic(x, ground))
    ratio = np.divide(lates, peaks, out=np.full(len(x), np.nan),
                      where=np.asarray(peaks) > 0)
    result.add("late_peak_ratio", label, TimeSeries.deterministic(x, ratio))
    finite = ratio[np.isfinite(ratio)]
    span = (f"{finite.min():.3g}..{finite.max():.3g}" if finite.size
            else "undefined")
    result.summary = (f"gamma_sweep {label}: peak ea {late_time_trend(peaks).value} "
                      f"with 1-gamma, late/peak ratio {span}")
    return result


def run_experiment(cfg: ExperimentConfig, workers: int | None = None) -> ExperimentResult:
    runner = _Runner(cfg, workers)
    logger.info("running %s (L=%d, thetas=%s)", cfg.experiment.value, cfg.L,
                ",".join(f"{t:g}" for t in cfg.thetas))
    kind = cfg.experiment
    if kind == ExperimentKind.CHARGE_DIST:
        return _run_charge_dist(cfg, runner)
    if kind == ExperimentKind.PEAK_FIT:
        return _run_peak_fit(cfg, runner)
    if kind == ExperimentKind.LATETIME:
        return _run_latetime(cfg, runner)
    if kind == ExperimentKind.GAMMA_SWEEP:
        return _run_gamma_sweep(cfg, runner)
    return _run_trajectories(cfg, runner)
