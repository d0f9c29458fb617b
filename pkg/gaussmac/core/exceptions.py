"""
Exception hierarchy shared by the services and the command line.

Each family maps to one CLI exit code (see ``gaussmac.main``).
"""

from typing import Any, List, Optional


class GaussMacError(Exception):
    """Base class for every error raised by gaussmac"""

    exit_code: int = 1


class ConfigError(GaussMacError):
    """Malformed configuration file or command-line arguments"""

    exit_code = 2


class ShapeError(GaussMacError, ValueError):
    """Matrix shapes or mode layouts do not line up"""

    exit_code = 2


class UnphysicalError(GaussMacError):
    """A state, channel or parameter violates a physical constraint"""

    exit_code = 3


class ChannelValidationError(UnphysicalError):
    """Channel fails the bona fide condition; carries the violation report"""

    def __init__(self, message: str, violations: Optional[List[Any]] = None):
        super().__init__(message)
        self.violations = violations or []


class OptimizerError(GaussMacError):
    """Optimizer did not converge; ``partial`` holds the best result found so far"""

    exit_code = 4

    def __init__(self, message: str, partial: Any = None):
        super().__init__(message)
        self.partial = partial
