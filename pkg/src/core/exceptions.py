"""
Custom exceptions for the PTP load simulator.
"""

from typing import List, Optional


class PtpSimError(Exception):
    """Base exception for all simulator-specific errors."""
    pass


class SchedulingError(PtpSimError):
    """Raised when an event is scheduled before the current simulation time."""
    pass


class RngStreamError(PtpSimError):
    """Raised when a random substream label is created twice in one run."""
    pass


class ClockError(PtpSimError):
    """Raised when a clock is read before its anchor or stepped illegally."""
    pass


class ProtocolError(PtpSimError):
    """Raised when the PTP state machines are driven into an invalid state."""
    pass


class TrafficError(PtpSimError):
    """Raised for invalid Pareto parameters or uniform draws."""
    pass


class OutputError(PtpSimError):
    """Raised when statistics files cannot be written."""
    pass


class ConfigError(PtpSimError):
    """Raised when a scenario file is unreadable or violates the schema."""

    def __init__(self, message: str, violations: Optional[List[str]] = None):
        self.violations = list(violations or [])
        if self.violations:
            message = f"{message}: " + "; ".join(self.violations)
        super().__init__(message)
