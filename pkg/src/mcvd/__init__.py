"""Molecular communication via diffusion: channel model, particle simulator,
arrival statistics, BCSK link analysis, and figure-style experiment runners."""

__version__ = "0.1.0"

from .channel import (
    ChannelSpec,
    channel_response,
    degradation_rate_from_half_life,
    expected_arrivals,
    half_life_from_degradation_rate,
    hitting_fraction,
    hitting_fraction_total,
    hitting_rate,
    isi_fraction,
    peak_amplitude,
    peak_time,
)
from .errors import ConvergenceError
from .arrivals import CountModel, count_cdf, ks_distance
from .simulate import (
    ArrivalHistogram,
    HitRecordSet,
    SimConfig,
    bin_hits,
    empirical_fraction,
    simulate_burst,
)
from .link import (
    ChannelResponseTable,
    Convergence,
    ErrorProfile,
    LinkConfig,
    LinkSimResult,
    average_error_probs,
    build_response_table,
    detect_probs_for_symbol,
    error_probs_for_taus,
    poisson_mean_for_symbol,
    simulate_link,
    wilson_interval,
)
from .metrics import (
    CapacityResult,
    RocCurve,
    ber,
    binary_entropy,
    capacity,
    capacity_at_ts,
    default_symbol_time_grid,
    mutual_information,
    pd_at_pf,
    response_table_with_fallback,
    roc_curve,
)
from .experiments import (
    EXPERIMENTS,
    ConfigError,
    ExperimentConfig,
    RunManifest,
    run,
    validate,
)

__all__ = [
    "ArrivalHistogram",
    "CapacityResult",
    "ChannelResponseTable",
    "ChannelSpec",
    "ConfigError",
    "Convergence",
    "ConvergenceError",
    "CountModel",
    "EXPERIMENTS",
    "ErrorProfile",
    "ExperimentConfig",
    "HitRecordSet",
    "LinkConfig",
    "LinkSimResult",
    "RocCurve",
    "RunManifest",
    "SimConfig",
    "__version__",
    "average_error_probs",
    "ber",
    "bin_hits",
    "binary_entropy",
    "build_response_table",
    "capacity",
    "capacity_at_ts",
    "channel_response",
    "count_cdf",
    "default_symbol_time_grid",
    "degradation_rate_from_half_life",
    "detect_probs_for_symbol",
    "empirical_fraction",
    "error_probs_for_taus",
    "expected_arrivals",
    "half_life_from_degradation_rate",
    "hitting_fraction",
    "hitting_fraction_total",
    "hitting_rate",
    "isi_fraction",
    "ks_distance",
    "mutual_information",
    "pd_at_pf",
    "peak_amplitude",
    "peak_time",
    "poisson_mean_for_symbol",
    "response_table_with_fallback",
    "roc_curve",
    "run",
    "simulate_burst",
    "simulate_link",
    "validate",
    "wilson_interval",
]
