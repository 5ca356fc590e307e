"""Exception types shared across the package.

Each error carries a short ``tag`` so the command line can print a
machine-parsable error line, and an exit ``code`` (2 for bad input, 3 for
numerical/runtime failures).
"""


class DiracMapError(Exception):
    tag = "runtime"
    code = 3


class ConfigError(DiracMapError, ValueError):
    tag = "config"
    code = 2


class SingularityError(DiracMapError, ValueError):
    """Evaluation requested at (or within the exclusion radius of) a singular point."""

    tag = "singularity"

    def __init__(self, x, point):
        self.x = x
        self.point = point
        super().__init__(f"x={x!r} lies within the exclusion radius of singular point {point!r}")


class QuadratureError(DiracMapError, ArithmeticError):
    tag = "quadrature"


class GridError(DiracMapError, ValueError):
    """Grid too small for the packet support, or unsuitable for the method."""

    tag = "grid"


class DomainStraddleError(DiracMapError, ValueError):
    tag = "domain"


class CFLError(DiracMapError, ValueError):
    tag = "cfl"
    code = 2


class ContainmentError(DiracMapError, RuntimeError):
    tag = "containment"

    def __init__(self, time, message):
        self.time = time
        super().__init__(f"t={time:.6g}: {message}")


class PositivityError(DiracMapError, ValueError):
    tag = "positivity"
    code = 2


class WraparoundWarning(UserWarning):
    """Evolved support reached the periodic seam of the grid."""
