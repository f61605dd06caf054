"""Dense two-phase simplex solver for small and mid-size linear programs.

The solver minimizes ``cost @ x`` subject to equality rows, inequality rows
and per-variable bounds.  Variables sit at their bounds explicitly (the
"bounded variable" simplex), so box constraints do not grow the tableau.
Pricing is Dantzig's rule with a permanent switch to Bland's rule after a
streak of degenerate pivots, which keeps the solver deterministic and
cycle-free.  Everything is dense; the problems targeted here have a few
hundred rows at most.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NumericalBreakdown

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

_DUAL_TOL = 1e-9          # reduced-cost threshold for optimality
_PIVOT_TOL = 1e-10        # smallest usable pivot magnitude
_RATIO_TIE = 1e-12        # tie window in the ratio test
_DEGENERATE_STREAK = 64   # degenerate pivots before Bland's rule kicks in
_REFRESH_EVERY = 128      # cost-row / basic-value recomputation period

_AT_LOWER = 0
_AT_UPPER = 1


def _as_matrix(a, ncols, name):
    if a is None:
        return np.zeros((0, ncols))
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[1] != ncols:
        raise DimensionMismatch(f"{name} must be 2-D with {ncols} columns, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DimensionMismatch(f"{name} contains non-finite entries")
    return a


def _as_vector(v, length, name, allow_inf=False):
    if v is None:
        return np.zeros(length)
    v = np.asarray(v, dtype=float).ravel()
    if v.shape != (length,):
        raise DimensionMismatch(f"{name} must have length {length}, got {v.shape}")
    if not allow_inf and not np.all(np.isfinite(v)):
        raise DimensionMismatch(f"{name} contains non-finite entries")
    if allow_inf and np.any(np.isnan(v)):
        raise DimensionMismatch(f"{name} contains NaN entries")
    return v


@dataclass(frozen=True)
class LpProblem:
    """min cost@x  s.t.  eq_lhs@x = eq_rhs,  ineq_lhs@x <= ineq_rhs,
    var_lower <= x <= var_upper  (infinite bounds allowed)."""

    cost: np.ndarray
    eq_lhs: np.ndarray | None = None
    eq_rhs: np.ndarray | None = None
    ineq_lhs: np.ndarray | None = None
    ineq_rhs: np.ndarray | None = None
    var_lower: np.ndarray | None = None
    var_upper: np.ndarray | None = None

    def validated(self):
        c = np.asarray(self.cost, dtype=float).ravel()
        if c.size == 0 or not np.all(np.isfinite(c)):
            raise DimensionMismatch("cost must be a non-empty finite vector")
        n = c.size
        a_eq = _as_matrix(self.eq_lhs, n, "eq_lhs")
        b_eq = _as_vector(self.eq_rhs, a_eq.shape[0], "eq_rhs")
        a_ub = _as_matrix(self.ineq_lhs, n, "ineq_lhs")
        b_ub = _as_vector(self.ineq_rhs, a_ub.shape[0], "ineq_rhs")
        lo = self.var_lower
        hi = self.var_upper
        lo = np.full(n, -np.inf) if lo is None else _as_vector(lo, n, "var_lower", allow_inf=True)
        hi = np.full(n, np.inf) if hi is None else _as_vector(hi, n, "var_upper", allow_inf=True)
        if np.any(lo > hi):
            raise DimensionMismatch("var_lower exceeds var_upper for some variable")
        return c, a_eq, b_eq, a_ub, b_ub, lo, hi


@dataclass(frozen=True)
class LpOutcome:
    status: str
    x: np.ndarray | None = None
    objective: float | None = None


class _Standard:
    """Internal standard form  min c@z,  A z = b,  0 <= z <= u, plus the
    bookkeeping needed to map a solution back onto the original variables:
    x[i] = sign[i] * z[col[i]] + shift[i] (- z[col_neg[i]] for free vars)."""

    def __init__(self, c, a_eq, b_eq, a_ub, b_ub, lo, hi):
        n = c.size
        m_eq, m_ub = a_eq.shape[0], a_ub.shape[0]
        a_full = np.vstack([a_eq, a_ub]) if m_eq + m_ub else np.zeros((0, n))
        b_full = np.concatenate([b_eq, b_ub])

        cols, ups, ccoef = [], [], []
        self.col = np.empty(n, dtype=int)
        self.col_neg = np.full(n, -1, dtype=int)
        self.sign = np.ones(n)
        self.shift = np.zeros(n)
        self.n_orig = n
        b_adj = b_full.copy()

        for i in range(n):
            li, ui = lo[i], hi[i]
            if np.isfinite(li):
                # x = li + z, 0 <= z <= ui - li
                self.col[i] = len(cols)
                self.shift[i] = li
                cols.append(a_full[:, i])
                ups.append(ui - li)
                ccoef.append(c[i])
                b_adj -= a_full[:, i] * li
            elif np.isfinite(ui):
                # x = ui - z, z >= 0
                self.col[i] = len(cols)
                self.sign[i] = -1.0
                self.shift[i] = ui
                cols.append(-a_full[:, i])
                ups.append(np.inf)
                ccoef.append(-c[i])
                b_adj -= a_full[:, i] * ui
            else:
                # free: x = z+ - z-
                self.col[i] = len(cols)
                cols.append(a_full[:, i])
                ups.append(np.inf)
                ccoef.append(c[i])
                self.col_neg[i] = len(cols)
                cols.append(-a_full[:, i])
                ups.append(np.inf)
                ccoef.append(-c[i])

        # slack variables for the inequality rows
        for k in range(m_ub):
            e = np.zeros(m_eq + m_ub)
            e[m_eq + k] = 1.0
            cols.append(e)
            ups.append(np.inf)
            ccoef.append(0.0)

        self.a = np.column_stack(cols) if cols else np.zeros((m_eq + m_ub, 0))
        self.b = b_adj
        self.c = np.asarray(ccoef)
        self.u = np.asarray(ups)

    def back_map(self, z):
        x = self.sign * z[self.col] + self.shift
        split = self.col_neg >= 0
        if np.any(split):
            x[split] -= z[self.col_neg[split]]
        return x


class _Simplex:
    """Bounded-variable simplex over one standard-form problem."""

    def __init__(self, std: _Standard):
        m, n = std.a.shape
        self.m, self.n = m, n
        # row equilibration keeps pivot magnitudes comparable across rows
        row_scale = np.maximum(np.abs(std.a).max(axis=1, initial=0.0), np.abs(std.b))
        row_scale[row_scale < 1e-12] = 1.0
        a = std.a / row_scale[:, None]
        b = std.b / row_scale
        self.c = std.c

        art_sign = np.where(b >= 0.0, 1.0, -1.0)
        self.a_all = np.hstack([a * art_sign[:, None], np.eye(m)])
        self.b_signed = np.abs(b)
        self.tab = self.a_all.copy()
        self.x_basic = self.b_signed.copy()
        self.basis = np.arange(n, n + m)
        self.n_total = n + m
        self.status = np.full(self.n_total, _AT_LOWER, dtype=np.int8)
        self.u_all = np.concatenate([std.u, np.full(m, np.inf)])
        self.allowed = np.ones(self.n_total, dtype=bool)
        self.in_basis = np.zeros(self.n_total, dtype=bool)
        self.in_basis[self.basis] = True
        self.iterations = 0
        self.max_iterations = 20000 + 200 * (m + n)

    def _values(self):
        z = np.where(self.status[: self.n] == _AT_UPPER, self.u_all[: self.n], 0.0)
        z[~np.isfinite(z)] = 0.0
        for r, j in enumerate(self.basis):
            if j < self.n:
                z[j] = self.x_basic[r]
        return z

    def _cost_row(self, c_all):
        d = c_all.copy()
        cb = c_all[self.basis]
        if np.any(cb != 0.0):
            d -= self.tab.T @ cb
        return d

    def _refresh_basics(self):
        if self.m == 0:
            return
        at_up = np.flatnonzero((self.status == _AT_UPPER) & ~self.in_basis)
        rhs = self.b_signed.copy()
        for j in at_up:
            rhs -= self.a_all[:, j] * self.u_all[j]
        basis_mat = self.a_all[:, self.basis]
        try:
            self.x_basic = np.linalg.solve(basis_mat, rhs)
        except np.linalg.LinAlgError:
            pass  # keep the incrementally updated values

    def _run(self, c_all):
        d = self._cost_row(c_all)
        bland = False
        degenerate = 0
        since_refresh = 0
        while True:
            self.iterations += 1
            if self.iterations > self.max_iterations:
                raise NumericalBreakdown("simplex iteration limit exceeded")
            if since_refresh >= _REFRESH_EVERY:
                self._refresh_basics()
                d = self._cost_row(c_all)
                since_refresh = 0

            viol = np.where(self.status == _AT_LOWER, -d, d)
            viol[self.in_basis] = -np.inf
            viol[~self.allowed] = -np.inf
            eligible = viol > _DUAL_TOL
            if not np.any(eligible):
                return OPTIMAL

            if bland:
                j = int(np.flatnonzero(eligible)[0])
            else:
                j = int(np.argmax(viol))
            s = 1.0 if self.status[j] == _AT_LOWER else -1.0
            sw = s * self.tab[:, j]

            # ratio test, vectorized over the basic variables
            t_rows = np.full(self.m, np.inf)
            pos = sw > _PIVOT_TOL
            if np.any(pos):
                t_rows[pos] = self.x_basic[pos] / sw[pos]
            neg = sw < -_PIVOT_TOL
            if np.any(neg):
                ub = self.u_all[self.basis]
                capped = neg & np.isfinite(ub)
                t_rows[capped] = (ub[capped] - self.x_basic[capped]) / (-sw[capped])
            np.maximum(t_rows, 0.0, out=t_rows)
            t_pivot = t_rows.min() if self.m else np.inf
            t_flip = self.u_all[j]

            if np.isinf(t_pivot) and np.isinf(t_flip):
                return UNBOUNDED

            if t_pivot <= t_flip:
                t_step = t_pivot
                ties = np.flatnonzero(t_rows <= t_pivot + _RATIO_TIE)
                leave = int(ties[np.argmin(self.basis[ties])])
                leave_to = _AT_LOWER if sw[leave] > 0 else _AT_UPPER
            else:
                t_step = t_flip
                leave = -1

            if t_step <= _RATIO_TIE:
                degenerate += 1
                if degenerate >= _DEGENERATE_STREAK:
                    bland = True
            else:
                degenerate = 0

            if leave == -1:
                # bound flip: the entering variable runs to its other bound
                self.x_basic -= sw * t_step
                self.status[j] = _AT_UPPER if s > 0 else _AT_LOWER
                since_refresh += 1
                continue

            # pivot
            enter_val = (0.0 if self.status[j] == _AT_LOWER else self.u_all[j]) + s * t_step
            self.x_basic -= sw * t_step
            old = self.basis[leave]
            self.x_basic[leave] = enter_val
            piv = self.tab[leave, j]
            if abs(piv) < _PIVOT_TOL:
                raise NumericalBreakdown("vanishing pivot element")
            self.tab[leave, :] /= piv
            colj = self.tab[:, j].copy()
            colj[leave] = 0.0
            self.tab -= np.outer(colj, self.tab[leave, :])
            self.tab[:, j] = 0.0
            self.tab[leave, j] = 1.0
            d = d - d[j] * self.tab[leave, :]
            d[j] = 0.0
            self.basis[leave] = j
            self.in_basis[old] = False
            self.in_basis[j] = True
            self.status[old] = leave_to
            since_refresh += 1

    def solve(self, feas_tol):
        # phase 1: minimize the sum of artificial variables
        c1 = np.zeros(self.n_total)
        c1[self.n :] = 1.0
        status = self._run(c1)
        if status != OPTIMAL:
            raise NumericalBreakdown("phase-1 simplex did not terminate at optimum")
        self._refresh_basics()
        infeas = sum(
            max(self.x_basic[r], 0.0) for r in range(self.m) if self.basis[r] >= self.n
        )
        scale = 1.0 + float(np.abs(self.b_signed).max(initial=0.0))
        if infeas > feas_tol * scale:
            return INFEASIBLE, None

        # drive leftover artificials out of the basis, or pin redundant rows
        for r in range(self.m):
            j = self.basis[r]
            if j < self.n:
                continue
            row = self.tab[r, : self.n]
            pivots = np.flatnonzero(np.abs(row) > 1e-8)
            pivots = [p for p in pivots if not self.in_basis[p]]
            if pivots:
                p = int(pivots[0])
                piv = self.tab[r, p]
                self.tab[r, :] /= piv
                colp = self.tab[:, p].copy()
                colp[r] = 0.0
                self.tab -= np.outer(colp, self.tab[r, :])
                self.tab[:, p] = 0.0
                self.tab[r, p] = 1.0
                self.in_basis[j] = False
                self.in_basis[p] = True
                self.basis[r] = p
                self.x_basic[r] = 0.0
            else:
                # redundant constraint: freeze the artificial at zero
                self.u_all[j] = 0.0
                self.x_basic[r] = 0.0
        self.allowed[self.n :] = False

        # phase 2
        c2 = np.concatenate([self.c, np.zeros(self.m)])
        status = self._run(c2)
        if status == UNBOUNDED:
            return UNBOUNDED, None
        self._refresh_basics()
        return OPTIMAL, self._values()


def solve_lp(problem: LpProblem, feas_tol: float = 1e-8) -> LpOutcome:
    """Solve a linear program with a deterministic two-phase dense simplex.

    Returns an :class:`LpOutcome` whose status is ``optimal``, ``infeasible``
    or ``unbounded``.  An optimal solution is a vertex of the feasible set
    (basic solution) and satisfies every constraint within ``feas_tol``.

    Raises
    ------
    DimensionMismatch
        If the problem data is malformed.
    NumericalBreakdown
        If pivoting degenerates beyond the anti-cycling safeguards or the
        returned point fails the final feasibility check.
    """
    c, a_eq, b_eq, a_ub, b_ub, lo, hi = problem.validated()

    std = _Standard(c, a_eq, b_eq, a_ub, b_ub, lo, hi)
    if std.a.shape[1] == 0:
        x = lo.copy()
        ok = (np.all(np.abs(a_eq @ x - b_eq) <= feas_tol) if a_eq.size else True) and (
            np.all(a_ub @ x - b_ub <= feas_tol) if a_ub.size else True
        )
        if not ok:
            return LpOutcome(INFEASIBLE)
        return LpOutcome(OPTIMAL, x, float(c @ x))

    simplex = _Simplex(std)
    status, z = simplex.solve(feas_tol)
    if status != OPTIMAL:
        return LpOutcome(status)

    x = std.back_map(z)

    # contract: the reported point must satisfy the original constraints
    if a_eq.size:
        r = np.abs(a_eq @ x - b_eq)
        if r.max() > feas_tol * (1.0 + np.abs(b_eq).max(initial=0.0)):
            raise NumericalBreakdown("equality residual exceeds feas_tol")
    if a_ub.size:
        r = a_ub @ x - b_ub
        if r.max() > feas_tol * (1.0 + np.abs(b_ub).max(initial=0.0)):
            raise NumericalBreakdown("inequality residual exceeds feas_tol")
    if not np.all(x >= lo - feas_tol * (1.0 + np.abs(x))):
        raise NumericalBreakdown("lower-bound residual exceeds feas_tol")
    if not np.all(x <= hi + feas_tol * (1.0 + np.abs(x))):
        raise NumericalBreakdown("upper-bound residual exceeds feas_tol")

    return LpOutcome(OPTIMAL, x, float(c @ x))
