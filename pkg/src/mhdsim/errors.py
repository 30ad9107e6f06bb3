"""Exception hierarchy shared by all solver layers."""

from __future__ import annotations


class MHDSimError(Exception):
    """Base class for every error raised by the package."""


class InvalidField(MHDSimError, ValueError):
    """Field has the wrong shape, a non power-of-two grid, or non-finite values."""


class GridMismatch(MHDSimError, ValueError):
    """Two fields that must share a grid do not."""


class GapViolation(MHDSimError):
    """The interface came closer than the allowed gap to a wall."""


class DegenerateMap(MHDSimError):
    """A coordinate map lost invertibility (Jacobian below the floor)."""


class EllipticDivergence(MHDSimError):
    """The iterative elliptic solver did not reach its tolerance."""


class IncompatibleData(MHDSimError, ValueError):
    """Neumann data violate the solvability condition."""


class CompatibilityError(MHDSimError, ValueError):
    """Data violate a constraint required by a div-curl or initial-data problem."""


class StabilityError(MHDSimError):
    """The tangential field stability margin dropped below its threshold."""


class NoContraction(MHDSimError):
    """Successive Picard distances failed to contract."""


class MembershipViolation(MHDSimError, ValueError):
    """A trajectory lies outside the admissible iteration set."""


class InsufficientHistory(MHDSimError, ValueError):
    """Not enough time samples for a finite-difference time derivative."""


class CFLViolation(MHDSimError, ValueError):
    """Requested time step exceeds the CFL bound."""


class ParseError(MHDSimError, ValueError):
    """Configuration text could not be parsed."""


class ValidationError(MHDSimError, ValueError):
    """Configuration parsed but holds inadmissible values."""
