from __future__ import annotations

__version__ = "0.1.0"

from qmpemba.errors import (
    ConfigError,
    InvalidArgumentError,
    InvalidGateError,
    MpembaError,
    ResourceLimitError,
)
from qmpemba.gates import GateKind, RngStream, TwoQubitGate
from qmpemba.qstate import (
    DensityMatrix,
    InitialStatePattern,
    PatternKind,
    StateVector,
    SubsystemMask,
)
from qmpemba.metrics import ChargeProbe, Observable, ProbeKind
from qmpemba.circuit import CircuitConfig, DopingMode, TimeSeries
from qmpemba.hamiltonian import Boundary, HamiltonianParams, SpectralDecomposition
from qmpemba.analysis import CrossingReport, PowerLawFit

from qmpemba import (
    analysis,
    chart,
    circuit,
    config,
    emit,
    errors,
    experiments,
    gates,
    hamiltonian,
    metrics,
    qstate,
)
