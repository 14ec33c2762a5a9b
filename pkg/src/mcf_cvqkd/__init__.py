"""Simulation and post-processing for GMCS CV-QKD over multi-core fiber."""

__version__ = "0.1.0"

from .model import CalibrationRecord, QuadratureSymbol, SystemParams  # noqa: E402
from .mcf_channel import CoreChannelParams  # noqa: E402
from .keyrate import KeyRateResult, secret_key_rate, epsilon_threshold, aggregate_skr  # noqa: E402

__all__ = [
    "CalibrationRecord",
    "CoreChannelParams",
    "KeyRateResult",
    "QuadratureSymbol",
    "SystemParams",
    "aggregate_skr",
    "epsilon_threshold",
    "secret_key_rate",
]
