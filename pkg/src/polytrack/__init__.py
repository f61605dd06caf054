"""Output-feedback tracking controller synthesis with polyhedral
invariant sets: linear programming substrate, polyhedral geometry,
certificate checking/completion, bilinear design via alternating LPs,
and closed-loop simulation."""

from .errors import (
    DimensionMismatch,
    EmptyInner,
    InvalidModel,
    NoFeasiblePoint,
    NonFiniteState,
    NoStabilizingGains,
    NumericalBreakdown,
    ParseError,
    PhaseInfeasible,
    PolytrackError,
    RankDeficient,
    TooHighDimensional,
    Unbounded,
)
from .lp import INFEASIBLE, OPTIMAL, UNBOUNDED, LpOutcome, LpProblem, solve_lp
from .stability import hurwitz_margin, is_hurwitz, left_inverse

__all__ = [
    "DimensionMismatch",
    "EmptyInner",
    "InvalidModel",
    "NoFeasiblePoint",
    "NonFiniteState",
    "NoStabilizingGains",
    "NumericalBreakdown",
    "ParseError",
    "PhaseInfeasible",
    "PolytrackError",
    "RankDeficient",
    "TooHighDimensional",
    "Unbounded",
    "INFEASIBLE",
    "OPTIMAL",
    "UNBOUNDED",
    "LpOutcome",
    "LpProblem",
    "solve_lp",
    "hurwitz_margin",
    "is_hurwitz",
    "left_inverse",
]
