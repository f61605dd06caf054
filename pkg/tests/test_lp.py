import numpy as np
import pytest
import scipy.optimize

from polytrack import (
    INFEASIBLE,
    OPTIMAL,
    UNBOUNDED,
    DimensionMismatch,
    LpProblem,
    solve_lp,
)

from oracles import lp_vertex_oracle


def test_single_variable_box():
    # minimize -x s.t. x <= 1, x >= 0
    out = solve_lp(LpProblem(cost=[-1.0], var_lower=[0.0], var_upper=[1.0]))
    assert out.status == OPTIMAL
    assert out.x[0] == pytest.approx(1.0, abs=1e-12)
    assert out.objective == pytest.approx(-1.0, abs=1e-12)


def test_empty_box_infeasible():
    # minimize 0 s.t. x <= -1, x >= 0
    out = solve_lp(
        LpProblem(cost=[0.0], ineq_lhs=[[1.0]], ineq_rhs=[-1.0], var_lower=[0.0])
    )
    assert out.status == INFEASIBLE


def test_unbounded():
    out = solve_lp(LpProblem(cost=[-1.0], var_lower=[0.0]))
    assert out.status == UNBOUNDED


def test_equality_row():
    out = solve_lp(
        LpProblem(
            cost=[1.0, 0.0],
            eq_lhs=[[1.0, 1.0]],
            eq_rhs=[1.0],
            var_lower=[0.0, 0.0],
            var_upper=[1.0, 1.0],
        )
    )
    assert out.status == OPTIMAL
    assert out.x == pytest.approx([0.0, 1.0], abs=1e-10)


def test_free_variable():
    # min x s.t. x >= -3 via inequality only (x itself unbounded)
    out = solve_lp(LpProblem(cost=[1.0], ineq_lhs=[[-1.0]], ineq_rhs=[3.0]))
    assert out.status == OPTIMAL
    assert out.x[0] == pytest.approx(-3.0, abs=1e-10)


def test_upper_bounds_only_variable():
    # lo = -inf, ub finite exercises the negation transform
    out = solve_lp(
        LpProblem(
            cost=[-1.0, 1.0],
            ineq_lhs=[[1.0, 1.0]],
            ineq_rhs=[4.0],
            var_lower=[-np.inf, 0.0],
            var_upper=[2.0, np.inf],
        )
    )
    assert out.status == OPTIMAL
    assert out.x == pytest.approx([2.0, 0.0], abs=1e-10)


def test_degenerate_redundant_rows():
    # duplicate constraints force degenerate pivots; must still terminate
    a = [[1.0, 1.0], [1.0, 1.0], [1.0, 0.0], [1.0, 0.0]]
    b = [1.0, 1.0, 0.6, 0.6]
    out = solve_lp(
        LpProblem(cost=[-1.0, -1.0], ineq_lhs=a, ineq_rhs=b, var_lower=[0.0, 0.0])
    )
    assert out.status == OPTIMAL
    assert out.objective == pytest.approx(-1.0, abs=1e-9)


def test_redundant_equalities():
    # second equality is a scalar multiple of the first
    out = solve_lp(
        LpProblem(
            cost=[1.0, 1.0],
            eq_lhs=[[1.0, 1.0], [2.0, 2.0]],
            eq_rhs=[1.0, 2.0],
            var_lower=[0.0, 0.0],
            var_upper=[2.0, 2.0],
        )
    )
    assert out.status == OPTIMAL
    assert out.objective == pytest.approx(1.0, abs=1e-9)


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        solve_lp(LpProblem(cost=[1.0, 2.0], eq_lhs=[[1.0]], eq_rhs=[1.0]))
    with pytest.raises(DimensionMismatch):
        solve_lp(LpProblem(cost=[1.0], var_lower=[2.0], var_upper=[1.0]))
    with pytest.raises(DimensionMismatch):
        solve_lp(LpProblem(cost=[np.nan]))


def _random_boxed_lp(rng, n=5, m_ub=4, m_eq=1):
    a_ub = rng.normal(size=(m_ub, n))
    a_eq = rng.normal(size=(m_eq, n))
    x_feas = rng.uniform(-0.5, 0.5, size=n)
    b_ub = a_ub @ x_feas + rng.uniform(0.1, 1.0, size=m_ub)
    b_eq = a_eq @ x_feas
    c = rng.normal(size=n)
    lo = np.full(n, -1.0)
    hi = np.full(n, 1.0)
    return c, a_eq, b_eq, a_ub, b_ub, lo, hi


def test_random_lps_match_vertex_enumeration_oracle():
    rng = np.random.default_rng(7)
    for _ in range(60):
        c, a_eq, b_eq, a_ub, b_ub, lo, hi = _random_boxed_lp(rng)
        out = solve_lp(
            LpProblem(c, a_eq, b_eq, a_ub, b_ub, lo, hi)
        )
        ref_obj, _ = lp_vertex_oracle(c, a_eq, b_eq, a_ub, b_ub, lo, hi)
        assert out.status == OPTIMAL
        assert ref_obj is not None
        assert out.objective == pytest.approx(ref_obj, abs=1e-8)


def test_random_lps_match_scipy():
    rng = np.random.default_rng(21)
    for _ in range(40):
        c, a_eq, b_eq, a_ub, b_ub, lo, hi = _random_boxed_lp(rng, n=8, m_ub=6, m_eq=2)
        out = solve_lp(LpProblem(c, a_eq, b_eq, a_ub, b_ub, lo, hi))
        ref = scipy.optimize.linprog(
            c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq,
            bounds=list(zip(lo, hi)), method="highs",
        )
        assert out.status == OPTIMAL and ref.status == 0
        assert out.objective == pytest.approx(ref.fun, abs=1e-7)


def test_deterministic():
    rng = np.random.default_rng(3)
    c, a_eq, b_eq, a_ub, b_ub, lo, hi = _random_boxed_lp(rng)
    p = LpProblem(c, a_eq, b_eq, a_ub, b_ub, lo, hi)
    first = solve_lp(p)
    second = solve_lp(p)
    assert first.status == second.status == OPTIMAL
    assert np.array_equal(first.x, second.x)
    assert first.objective == second.objective


def test_solution_is_vertex():
    # optimal basic point: n linearly independent constraints active
    rng = np.random.default_rng(11)
    for _ in range(20):
        c, a_eq, b_eq, a_ub, b_ub, lo, hi = _random_boxed_lp(rng)
        out = solve_lp(LpProblem(c, a_eq, b_eq, a_ub, b_ub, lo, hi))
        assert out.status == OPTIMAL
        x = out.x
        n = x.size
        rows = [a_eq[i] for i in range(a_eq.shape[0])]
        for i in range(a_ub.shape[0]):
            if abs(a_ub[i] @ x - b_ub[i]) < 1e-7:
                rows.append(a_ub[i])
        for i in range(n):
            if abs(x[i] - lo[i]) < 1e-7 or abs(x[i] - hi[i]) < 1e-7:
                e = np.zeros(n)
                e[i] = 1.0
                rows.append(e)
        assert np.linalg.matrix_rank(np.array(rows), tol=1e-7) == n
