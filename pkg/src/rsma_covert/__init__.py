"""Covert RSMA downlink against Poisson-distributed wardens: closed-form
performance model, AO-GA throughput optimizer, and Monte Carlo oracle."""

from .analytic import (
    cdf_common_sinr,
    cdf_private_sinr,
    covertness_coefficient,
    max_covert_snr,
    moment_match,
    outage_probability,
    symmetric_ect,
    system_ect,
    table1_params,
    user_throughput,
)
from .config import (
    ConfigError,
    GammaParams,
    PowerAllocation,
    SystemConfig,
    TransmitSnr,
    baseline_config,
    validate_config,
)
from .optimizer import AoConfig, GaConfig, OptimizationResult, ao_ga, ga_maximize_1d

__all__ = [
    "AoConfig", "ConfigError", "GaConfig", "GammaParams", "OptimizationResult",
    "PowerAllocation", "SystemConfig", "TransmitSnr", "ao_ga", "baseline_config",
    "cdf_common_sinr", "cdf_private_sinr", "covertness_coefficient", "ga_maximize_1d",
    "max_covert_snr", "moment_match", "outage_probability", "symmetric_ect",
    "system_ect", "table1_params", "user_throughput", "validate_config",
]
