"""Exception hierarchy shared by all polytrack modules."""


class PolytrackError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(PolytrackError):
    """Operands have incompatible or out-of-range dimensions."""


class NumericalBreakdown(PolytrackError):
    """An iterative numerical procedure lost its safeguards (pivoting,
    iteration caps)."""


class RankDeficient(PolytrackError):
    """A matrix required to have full column rank does not."""


class Unbounded(PolytrackError):
    """A polyhedron required to be bounded is unbounded."""


class TooHighDimensional(PolytrackError):
    """Operation restricted to small ambient dimensions got a larger one."""


class EmptyInner(PolytrackError):
    """The inner set of an inclusion query is empty."""


class InvalidModel(PolytrackError):
    """Plant/constraint data violates a structural requirement
    (controllability, observability, origin feasibility, ...)."""


class NonFiniteState(PolytrackError):
    """A simulated trajectory left the range of finite floats."""


class NoStabilizingGains(PolytrackError):
    """Rejection sampling could not find gains with a stable closed loop."""


class NoFeasiblePoint(PolytrackError):
    """No synthesis restart produced a certified feasible design."""


class PhaseInfeasible(PolytrackError):
    """One phase LP of the alternating scheme is infeasible."""


class ParseError(PolytrackError):
    """A problem or certificate file does not parse.

    Carries the 1-based line number when one is known.
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
