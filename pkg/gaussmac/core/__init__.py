# Core modules
from gaussmac.core.config import settings
from gaussmac.core.exceptions import (
    GaussMacError,
    ConfigError,
    ShapeError,
    UnphysicalError,
    ChannelValidationError,
    OptimizerError,
)
from gaussmac.core.logging_config import setup_logging

__all__ = [
    "settings",
    "GaussMacError",
    "ConfigError",
    "ShapeError",
    "UnphysicalError",
    "ChannelValidationError",
    "OptimizerError",
    "setup_logging",
]
