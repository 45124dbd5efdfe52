"""Frequency-domain interoperability certificates for converter-interfaced devices.

Device models, a decentralized Nyquist-type stability check, frequency
smoothing and droop performance specifications, and a two-bus probing
testbench with frequency-response identification.
"""
from ._backend import BACKEND
from .devices import DroopParams, GflParams, GfmPiParams, InnerLoopConfig, build_device, device_params
from .errors import (
    ConfigError,
    DegenerateDenominator,
    EvaluationAtPole,
    GridMismatch,
    GridSpecError,
    IllConditioned,
    InvalidParams,
    NoSteadyState,
    NonIntegerWindow,
    NotHurwitz,
    NumericalDivergence,
    PoleAtZero,
    UndampedLine,
    UndersampledSignal,
)
from .freq_core import (
    FrequencyResponse,
    RationalTransferFunction,
    closed_loop_response,
    evaluate,
    is_hurwitz,
    routh_array,
)
from .network import (
    GraphBounds,
    LineParams,
    NetworkAbstraction,
    build_line_tf,
    gamma_bound,
    gamma_single_line,
    line_mu,
    static_gain,
)
from .specs import (
    DEFAULT_GRID_HZ,
    OmegaGrid,
    PerfReport,
    StabilityVerdict,
    check_droop_band,
    check_smoothing,
    fit_tau_f,
    interop_check,
    nyquist_locus,
    prop1_check,
)
from .sysid import (
    ExperimentPair,
    FrequencyResponseMatrix,
    ProbeTemplate,
    fourier_phasor,
    identify_sweep,
    recover_transfer_matrix,
    theta_to_omega,
)
from .testbench import (
    DeviceUnderTest,
    OperatingPoint,
    ProbeConfig,
    TestbenchConfig,
    TimeSeriesRecord,
    simulate_probe_run,
    solve_steady_state,
)

__version__ = "0.1.0"
