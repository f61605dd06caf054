"""Problem data for constrained tracking design.

Plants are single-output continuous-time LTI triples (A, B, C).  References
come from the second-order exosystem  r'' + alpha*r = 0  (alpha = 0 gives
ramps, alpha = omega^2 sinusoids) bounded in an asymmetric interval
-rho2 <= r <= rho1.  The controller has a proportional path, a double
integrator driven by the tracking error, and a feedforward term; closing
the loop augments the plant with the two integrator states.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidModel
from .polyhedra import Polyhedron

# shape matrix of the reference interval {r : REF_STACK * r <= rho}
REF_STACK = np.array([[1.0], [-1.0]])


def _finite_matrix(m, name):
    m = np.atleast_2d(np.asarray(m, dtype=float))
    if not np.all(np.isfinite(m)):
        raise DimensionMismatch(f"{name} has non-finite entries")
    return m


@dataclass(frozen=True)
class PlantModel:
    """Controllable and observable single-output plant x' = Ax + Bu, y = Cx."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        a = _finite_matrix(self.a, "a")
        b = _finite_matrix(self.b, "b")
        c = _finite_matrix(self.c, "c")
        n = a.shape[0]
        if a.shape != (n, n):
            raise DimensionMismatch(f"a must be square, got {a.shape}")
        if b.shape[0] != n:
            raise DimensionMismatch(f"b must have {n} rows, got {b.shape}")
        if c.shape != (1, n):
            raise DimensionMismatch(f"c must be 1 x {n} (single output), got {c.shape}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        if not self._kalman_rank(a, b.reshape(n, -1)):
            raise InvalidModel("(A, B) is not controllable")
        if not self._kalman_rank(a.T, c.reshape(1, n).T):
            raise InvalidModel("(C, A) is not observable")

    @staticmethod
    def _kalman_rank(a, b, tol=1e-8):
        n = a.shape[0]
        blocks = [b]
        for _ in range(n - 1):
            blocks.append(a @ blocks[-1])
        k = np.hstack(blocks)
        scale = max(1.0, float(np.abs(k).max()))
        return np.linalg.matrix_rank(k, tol=tol * scale) == n

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @property
    def m(self) -> int:
        return self.b.shape[1]

    @property
    def n_cl(self) -> int:
        return self.n + 2


@dataclass(frozen=True)
class StateConstraint:
    """State rows: X x <= 1 with the origin strictly inside."""

    x_mat: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x_mat", _finite_matrix(self.x_mat, "x_mat"))

    @property
    def rows(self) -> int:
        return self.x_mat.shape[0]

    def as_polyhedron(self) -> Polyhedron:
        return Polyhedron(self.x_mat, np.ones(self.rows), origin_interior=True)


@dataclass(frozen=True)
class InputConstraint:
    """Input rows: U u <= 1 with the origin strictly inside."""

    u_mat: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "u_mat", _finite_matrix(self.u_mat, "u_mat"))

    @property
    def rows(self) -> int:
        return self.u_mat.shape[0]

    def as_polyhedron(self) -> Polyhedron:
        return Polyhedron(self.u_mat, np.ones(self.rows), origin_interior=True)


@dataclass(frozen=True)
class ReferenceClass:
    """Exosystem r'' + alpha r = 0 with bound -rho2 <= r <= rho1.

    alpha = 0 describes ramps (any slope, incl. constants); alpha = omega^2
    describes sinusoids of angular frequency omega.
    """

    alpha: float
    rho: np.ndarray
    omega: float = 0.0

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=float).ravel()
        if rho.shape != (2,) or not np.all(np.isfinite(rho)):
            raise DimensionMismatch("rho must be two finite numbers")
        if np.any(rho <= 0.0):
            raise InvalidModel("rho components must be strictly positive")
        if self.alpha < 0.0:
            raise InvalidModel("alpha must be non-negative")
        if self.omega > 0.0 and abs(self.alpha - self.omega**2) > 1e-12:
            raise InvalidModel("alpha must equal omega^2 for a sinusoid class")
        if self.alpha > 0.0 and self.omega <= 0.0:
            raise InvalidModel("sinusoid class (alpha > 0) needs omega > 0")
        object.__setattr__(self, "rho", rho)

    @property
    def r_mat(self) -> np.ndarray:
        return REF_STACK.copy()

    @classmethod
    def ramp(cls, rho) -> "ReferenceClass":
        return cls(alpha=0.0, rho=rho, omega=0.0)

    @classmethod
    def sinusoid(cls, omega: float, rho) -> "ReferenceClass":
        return cls(alpha=omega**2, rho=rho, omega=omega)

    def with_rho(self, rho) -> "ReferenceClass":
        return ReferenceClass(alpha=self.alpha, rho=rho, omega=self.omega)

    def interval(self) -> Polyhedron:
        return Polyhedron(self.r_mat, self.rho, origin_interior=True)


@dataclass(frozen=True)
class ControllerGains:
    """Gains of  u = K y + K_I1 x_I1 + K_I2 x_I2 + K_r r  (each in R^m)."""

    k: np.ndarray
    k_i1: np.ndarray
    k_i2: np.ndarray
    k_r: np.ndarray

    def __post_init__(self):
        vecs = {}
        m = None
        for name in ("k", "k_i1", "k_i2", "k_r"):
            v = np.asarray(getattr(self, name), dtype=float).ravel()
            if not np.all(np.isfinite(v)):
                raise DimensionMismatch(f"gain {name} has non-finite entries")
            if m is None:
                m = v.size
            elif v.size != m:
                raise DimensionMismatch("all gains must share the input dimension")
            vecs[name] = v
        for name, v in vecs.items():
            object.__setattr__(self, name, v)

    @property
    def m(self) -> int:
        return self.k.size


@dataclass(frozen=True)
class IntegralBounds:
    """Asymmetric box on the integral states:
    -1/x_i2_lo <= x_I2 <= 1/x_i2_hi etc., stored as the four positive
    scalars (hi1, lo1, hi2, lo2) of the block-diagonal 4 x 2 stack."""

    hi1: float
    lo1: float
    hi2: float
    lo2: float

    def __post_init__(self):
        vals = (self.hi1, self.lo1, self.hi2, self.lo2)
        if not all(np.isfinite(v) and v > 0.0 for v in vals):
            raise InvalidModel("integral bound scalars must be positive and finite")

    @property
    def xi_mat(self) -> np.ndarray:
        return np.array(
            [
                [self.hi1, 0.0],
                [-self.lo1, 0.0],
                [0.0, self.hi2],
                [0.0, -self.lo2],
            ]
        )

    def as_array(self) -> np.ndarray:
        return np.array([self.hi1, self.lo1, self.hi2, self.lo2])

    @classmethod
    def from_array(cls, vals) -> "IntegralBounds":
        v = np.asarray(vals, dtype=float).ravel()
        if v.shape != (4,):
            raise DimensionMismatch("integral bounds need exactly four scalars")
        return cls(*v)


@dataclass(frozen=True)
class ClosedLoop:
    """Augmented dynamics x_cl' = a_cl x_cl + b_cl r with
    x_cl = (x, x_I1, x_I2)."""

    a_cl: np.ndarray
    b_cl: np.ndarray

    @property
    def n_cl(self) -> int:
        return self.a_cl.shape[0]


def build_closed_loop(plant: PlantModel, gains: ControllerGains, ref: ReferenceClass) -> ClosedLoop:
    """Assemble the augmented closed loop of the double-integrator tracking
    controller around the plant; the exosystem coefficient enters the
    x_I1 row."""
    if gains.m != plant.m:
        raise DimensionMismatch(
            f"gain dimension {gains.m} does not match plant input dimension {plant.m}"
        )
    n, n_cl = plant.n, plant.n_cl
    a, b, c = plant.a, plant.b, plant.c
    a_cl = np.zeros((n_cl, n_cl))
    a_cl[:n, :n] = a + b @ gains.k[:, None] @ c
    a_cl[:n, n] = b @ gains.k_i1
    a_cl[:n, n + 1] = b @ gains.k_i2
    a_cl[n, :n] = -c.ravel()
    a_cl[n, n + 1] = -ref.alpha
    a_cl[n + 1, n] = 1.0
    b_cl = np.zeros((n_cl, 1))
    b_cl[:n, 0] = b @ gains.k_r
    b_cl[n, 0] = 1.0
    return ClosedLoop(a_cl=a_cl, b_cl=b_cl)


def decompose_closed_loop(cl: ClosedLoop, plant: PlantModel):
    """Recover (gains, alpha) from an assembled closed loop; the structural
    inverse of :func:`build_closed_loop` for plants with full-column-rank B."""
    n = plant.n
    b = plant.b
    bpinv = np.linalg.pinv(b)
    k_col = bpinv @ (cl.a_cl[:n, :n] - plant.a) @ np.linalg.pinv(plant.c)
    k_i1 = bpinv @ cl.a_cl[:n, n]
    k_i2 = bpinv @ cl.a_cl[:n, n + 1]
    k_r = bpinv @ cl.b_cl[:n, 0]
    alpha = -cl.a_cl[n, n + 1]
    gains = ControllerGains(k=k_col.ravel(), k_i1=k_i1, k_i2=k_i2, k_r=k_r)
    return gains, float(alpha)


def transmission_zero_check(plant: PlantModel, ref: ReferenceClass, tol: float = 1e-8) -> bool:
    """True iff the plant pencil keeps full rank n+1 at each exosystem pole
    (sigma = 0 for ramps, sigma = +-j*omega for sinusoids).

    The complex case is decided on the doubled real system
    [[Re, -Im], [Im, Re]], avoiding complex arithmetic.
    """
    n = plant.n
    a, b, c = plant.a, plant.b, plant.c
    want = n + 1

    def pencil_rank_real(sigma):
        top = np.hstack([a - sigma * np.eye(n), b])
        bot = np.hstack([c, np.zeros((1, plant.m))])
        mat = np.vstack([top, bot])
        scale = max(1.0, float(np.abs(mat).max()))
        return np.linalg.matrix_rank(mat, tol=tol * scale)

    def pencil_rank_complex(omega):
        re_top = np.hstack([a, b])
        re_bot = np.hstack([c, np.zeros((1, plant.m))])
        re = np.vstack([re_top, re_bot])
        im = np.zeros_like(re)
        im[:n, :n] = -omega * np.eye(n)
        doubled = np.block([[re, -im], [im, re]])
        scale = max(1.0, float(np.abs(doubled).max()))
        return np.linalg.matrix_rank(doubled, tol=tol * scale) // 2

    if ref.alpha == 0.0:
        return pencil_rank_real(0.0) == want
    return pencil_rank_complex(ref.omega) == want


def stack_state_constraints(xc: StateConstraint, xi: IntegralBounds) -> Polyhedron:
    """Block-diagonal closed-loop state constraint diag(X, X_I) with unit
    offsets, in the (x, x_I1, x_I2) coordinates."""
    n = xc.x_mat.shape[1]
    lx = xc.rows
    x_i = xi.xi_mat
    x_cl = np.zeros((lx + 4, n + 2))
    x_cl[:lx, :n] = xc.x_mat
    x_cl[lx:, n:] = x_i
    return Polyhedron(x_cl, np.ones(lx + 4), origin_interior=True)


def input_constraint_map(gains: ControllerGains, plant: PlantModel) -> np.ndarray:
    """Row block [K C, K_I1, K_I2, K_r] mapping (x_cl, r) to u."""
    if gains.m != plant.m:
        raise DimensionMismatch("gain/plant input dimensions differ")
    n, m = plant.n, plant.m
    out = np.zeros((m, n + 3))
    out[:, :n] = gains.k[:, None] @ plant.c
    out[:, n] = gains.k_i1
    out[:, n + 1] = gains.k_i2
    out[:, n + 2] = gains.k_r
    return out


@dataclass(frozen=True)
class ProblemDims:
    """Dimension tuple of one design program instance."""

    n: int
    m: int
    l: int
    l_x: int
    l_u: int
    l_r: int = 2
    l_xi1: int = 2
    l_xi2: int = 2

    @property
    def n_cl(self) -> int:
        return self.n + 2


def problem_size(dims: ProblemDims) -> tuple[int, int, int]:
    """(variables, equalities, inequalities) of the bilinear design program
    for the given dimensions, per the published counting formulas."""
    for name in ("n", "m", "l", "l_r", "l_x", "l_xi1", "l_xi2", "l_u"):
        if getattr(dims, name) < 1:
            raise DimensionMismatch(f"dimension {name} must be >= 1")
    n_cl = dims.n_cl
    l, l_r, l_x = dims.l, dims.l_r, dims.l_x
    l_xi1, l_xi2, l_u = dims.l_xi1, dims.l_xi2, dims.l_u
    variables = (
        dims.m
        + l * (n_cl + l + l_r + l_x + l_xi1 + l_xi2 + l_u)
        + 2 * (l_u + 2)
        + n_cl**2
        + 1
    )
    equalities = n_cl * (l + l_x + l_xi1 + l_xi2 + l_u + n_cl) + 2 * (l + l_u)
    inequalities = l + l_x + l_xi1 + l_xi2 + l_u
    return variables, equalities, inequalities
