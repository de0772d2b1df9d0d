"""Sequential rate-distortion for Gauss-Markov sources: deterministic and random
rates, packet erasures, delayed feedback with decoder side information."""
from .delayed import (
    AveragedTrace,
    ErasurePattern,
    average_trace,
    baseline_best_case,
    baseline_no_prediction,
    baseline_worst_case,
    best_case_trace,
    no_prediction_trace,
    pattern_trace,
    worst_case_trace,
)
from .errors import BudgetError, SolverError, ValidationError
from .kaspi import (
    KaspiCase,
    KaspiPoint,
    KaspiSolution,
    classify_case,
    harmonic_mean,
    invert_weighted,
    kaspi_delta,
    kaspi_rate,
)
from .mcsim import CompareSummary, Feedback, Scheme, SimConfig, SimReport, compare, simulate, test_channel
from .random_rate import (
    Deterministic,
    Discrete,
    Erasure,
    MultiPacket,
    optimize_packets,
    random_rate_trace,
    rate_factor,
    steady_random,
)
from .region import DistortionTrace, distortion_trace, distortion_trace_ep, steady_distortion
from .source import SourceSchedule, power_trace, steady_power

__version__ = "0.1.0"
