"""Exception types shared across the package.

The CLI maps ConfigError to exit code 2 and the numerical family of
errors to exit code 3.
"""


class ContmatchError(Exception):
    """Base class for all package errors."""


class ConfigError(ContmatchError):
    """Invalid or missing configuration (bad flags, bad parameter combos)."""


class NumericalError(ContmatchError):
    """A numerical computation failed or left its validity envelope."""


class BoundaryLeakageError(NumericalError):
    """More than the tolerated fraction of signal energy sits at or beyond
    the grid boundary."""


class RankDeficiencyError(NumericalError):
    """A matrix expected to have full column rank is numerically rank
    deficient (smallest/largest singular value below 1e-10)."""


class LatticeDensityError(NumericalError):
    """A probe lattice is too coarse for the requested resolution."""
