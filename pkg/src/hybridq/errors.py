"""Exception types shared across the package.

The CLI maps these onto stable exit codes: configuration problems exit
with 2, instability/overload with 3, I/O failures with 1.
"""


class HybridQError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(HybridQError, ValueError):
    """Invalid parameter, distribution or configuration file."""


class UnstableSystemError(HybridQError):
    """A queueing formula was evaluated past its stability boundary (utilization >= 1)."""

    def __init__(self, rho: float, system: str = "system"):
        self.rho = rho
        self.system = system
        super().__init__(f"{system} is unstable: utilization {rho:.6g} >= 1")


class OverloadError(HybridQError):
    """A simulation run exceeded the configured queue-length cap."""
