"""Exception hierarchy shared by every fapsim module.

The CLI maps :class:`ValidationError` to exit code 2 and :class:`InfeasibleError`
to exit code 3.
"""

from __future__ import annotations

from typing import Optional, Sequence


class FapsimError(Exception):
    """Root of all fapsim errors."""


class ValidationError(FapsimError, ValueError):
    """Malformed input: parameters, scenario files, configuration or CLI values."""


class ConfigError(ValidationError):
    """A configuration file could not be parsed or contains unknown/ill-typed keys."""


class ScenarioError(ValidationError):
    """A scenario file is malformed or describes an invalid scenario."""

    def __init__(
        self,
        message: str,
        *,
        line: Optional[int] = None,
        field: Optional[str] = None,
        gu_index: Optional[int] = None,
    ):
        context = []
        if line is not None:
            context.append(f"line {line}")
        if field is not None:
            context.append(f"field '{field}'")
        if gu_index is not None:
            context.append(f"GU {gu_index}")
        super().__init__(f"{message} ({', '.join(context)})" if context else message)
        self.line = line
        self.field = field
        self.gu_index = gu_index


class InfeasibleError(FapsimError):
    """The request cannot be satisfied by the UAV physics or the network."""


class InfeasibleRadiusError(InfeasibleError):
    """A turn radius is below the fixed-wing minimum."""

    def __init__(self, radius: float, r_min: float):
        super().__init__(f"turn radius {radius:.3f} m is below the minimum radius {r_min:.3f} m")
        self.radius = radius
        self.r_min = r_min


class HoverNotPossibleError(InfeasibleError):
    """A fixed-wing UAV was asked to hover or fly at a non-positive speed."""


class InfeasibleGroupError(InfeasibleError):
    """A group of ground users cannot be served by a single access point."""

    def __init__(self, message: str, gu_indices: Sequence[int] = ()):
        super().__init__(message)
        self.gu_indices = tuple(gu_indices)


class LinkBudgetError(InfeasibleError):
    """A target SNR is unreachable within the propagation model's valid range."""
