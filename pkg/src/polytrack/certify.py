"""Checking, completing and stress-testing invariance certificates.

A certificate collects the controller gains, the invariant polyhedron
L = {x_cl : L_cl x_cl <= 1}, the Metzler matrix H and disturbance matrix
H_r of the flow conditions, the inclusion multipliers (T for the state
box, Q/Q_r for the input set), a left inverse V of L_cl and the margin
gamma.  ``check_certificate`` evaluates every algebraic condition and
reports residuals; ``complete_certificate`` finds the multipliers by LP
when only the geometry and gains are fixed; ``falsify_by_simulation``
attacks a certificate with boundary initial states and extreme admissible
references.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, RankDeficient, Unbounded
from .lp import OPTIMAL, LpProblem, solve_lp
from .model import (
    ControllerGains,
    InputConstraint,
    IntegralBounds,
    PlantModel,
    ReferenceClass,
    StateConstraint,
    build_closed_loop,
    stack_state_constraints,
)
from .polyhedra import Polyhedron, is_metzler
from .stability import hurwitz_margin, left_inverse

DEFAULT_TOL = 1e-7
DEFAULT_GAMMA_MIN = 1e-6
DEFAULT_HURWITZ_MARGIN = 1e-6


class InvariantSet:
    """Candidate invariant polyhedron {x_cl : l_cl x_cl <= 1}.

    The row matrix is partitioned [L | L_I1 | L_I2]; it must be strictly
    taller than the closed-loop dimension, have full column rank and bound
    a compact set.
    """

    def __init__(self, l_cl, rank_tol: float = 1e-9):
        l_cl = np.atleast_2d(np.asarray(l_cl, dtype=float))
        l, n_cl = l_cl.shape
        if n_cl < 3:
            raise DimensionMismatch("closed-loop dimension must be at least 3")
        if l <= n_cl:
            raise DimensionMismatch(f"need more rows ({l}) than columns ({n_cl})")
        if not np.all(np.isfinite(l_cl)):
            raise DimensionMismatch("non-finite entries in l_cl")
        s = np.linalg.svd(l_cl, compute_uv=False)
        scale = float(np.linalg.norm(l_cl, axis=0).max())
        if scale == 0.0 or s[-1] <= rank_tol * scale:
            raise RankDeficient("l_cl does not have full column rank")
        self.l_cl = l_cl
        poly = self.as_polyhedron()
        if not poly.is_bounded():
            raise Unbounded("the candidate invariant set is unbounded")

    @property
    def rows(self) -> int:
        return self.l_cl.shape[0]

    @property
    def n_cl(self) -> int:
        return self.l_cl.shape[1]

    def blocks(self, n: int):
        """(L, L_I1, L_I2) for a plant of state dimension n."""
        if n + 2 != self.n_cl:
            raise DimensionMismatch("plant dimension does not match l_cl")
        return self.l_cl[:, :n], self.l_cl[:, n], self.l_cl[:, n + 1]

    def as_polyhedron(self) -> Polyhedron:
        return Polyhedron(self.l_cl, np.ones(self.rows), origin_interior=True)


@dataclass(frozen=True)
class Certificate:
    gains: ControllerGains
    inv: InvariantSet
    h: np.ndarray
    h_r: np.ndarray
    t1: np.ndarray
    t2: np.ndarray
    t3: np.ndarray
    q: np.ndarray
    q_r: np.ndarray
    v: np.ndarray
    gamma: float
    xi: IntegralBounds
    rho: np.ndarray

    @property
    def t_stack(self) -> np.ndarray:
        return np.vstack([self.t1, self.t2, self.t3])


@dataclass(frozen=True)
class CertReport:
    """Residual table of one certificate check.

    Every entry is a violation measure: the check passes iff each value
    stays at or below its named tolerance.
    """

    passed: bool
    residuals: dict
    tolerances: dict
    gamma: float
    stability_margin: float

    def failing(self) -> list[str]:
        return [k for k, v in self.residuals.items() if v > self.tolerances[k]]


def render_report(report: CertReport) -> str:
    lines = ["condition                     residual        tolerance  status"]
    for name, value in report.residuals.items():
        tol = report.tolerances[name]
        ok = "ok" if value <= tol else "FAIL"
        lines.append(f"{name:<28}  {value: .6e}  {tol: .3e}  {ok}")
    lines.append(f"overall: {'PASSED' if report.passed else 'FAILED'}")
    return "\n".join(lines)


def _shape_check(cert: Certificate, plant: PlantModel, xc: StateConstraint, uc: InputConstraint):
    l = cert.inv.rows
    n = plant.n
    n_cl = plant.n_cl
    l_u = uc.rows
    l_x = xc.rows
    checks = [
        (cert.h.shape, (l, l), "h"),
        (cert.h_r.shape, (l, 2), "h_r"),
        (cert.t1.shape, (l_x, l), "t1"),
        (cert.t2.shape, (2, l), "t2"),
        (cert.t3.shape, (2, l), "t3"),
        (cert.q.shape, (l_u, l), "q"),
        (cert.q_r.shape, (l_u, 2), "q_r"),
        (cert.v.shape, (n_cl, l), "v"),
    ]
    for got, want, name in checks:
        if got != want:
            raise DimensionMismatch(f"certificate field {name}: shape {got}, expected {want}")
    if cert.inv.n_cl != n_cl:
        raise DimensionMismatch("invariant set dimension does not match the plant")
    if xc.x_mat.shape[1] != n:
        raise DimensionMismatch("state constraint dimension does not match the plant")
    if uc.u_mat.shape[1] != plant.m:
        raise DimensionMismatch("input constraint dimension does not match the plant")


def check_certificate(
    cert: Certificate,
    plant: PlantModel,
    xc: StateConstraint,
    uc: InputConstraint,
    ref: ReferenceClass,
    tol: float = DEFAULT_TOL,
    gamma_min: float = DEFAULT_GAMMA_MIN,
    stability_margin_min: float = DEFAULT_HURWITZ_MARGIN,
) -> CertReport:
    """Residuals of every certificate condition.

    Equality conditions report the max-abs residual, inequality conditions
    the largest signed violation (negative means slack), sign conditions
    the distance into the forbidden region.  Dimension problems raise;
    semantic failures only show up in the report.
    """
    _shape_check(cert, plant, xc, uc)
    n = plant.n
    big_l, l_i1, l_i2 = cert.inv.blocks(n)
    l_cl = cert.inv.l_cl
    a, b, c = plant.a, plant.b, plant.c
    g = cert.gains
    alpha = ref.alpha
    rho = cert.rho
    r_mat = ref.r_mat
    ones_l = np.ones(cert.inv.rows)

    res: dict[str, float] = {}
    tols: dict[str, float] = {}

    def eq(name, lhs, rhs):
        res[name] = float(np.abs(np.asarray(lhs) - np.asarray(rhs)).max())
        tols[name] = tol

    def le(name, lhs, rhs):
        res[name] = float((np.asarray(lhs) - np.asarray(rhs)).max())
        tols[name] = tol

    # flow conditions on the invariant set rows
    eq("rpi_state", cert.h @ big_l, big_l @ (a + b @ g.k[:, None] @ c) - np.outer(l_i1, c.ravel()))
    eq("rpi_int1", cert.h @ l_i1, big_l @ (b @ g.k_i1) + l_i2)
    eq("rpi_int2", cert.h @ l_i2, big_l @ (b @ g.k_i2) - l_i1 * alpha)
    eq("rpi_ref", cert.h_r @ r_mat, (big_l @ (b @ g.k_r) + l_i1)[:, None])
    le("rpi_margin", cert.h @ ones_l + cert.h_r @ rho + cert.gamma * ones_l, 0.0)

    # rank identity
    eq("rank_identity", cert.v @ l_cl, np.eye(cert.inv.n_cl))

    # state-constraint inclusion
    x_cl_stack = stack_state_constraints(xc, cert.xi).shape_mat
    eq("state_incl_eq", cert.t_stack @ l_cl, x_cl_stack)
    le("state_incl_rows_x", cert.t1 @ ones_l, 1.0)
    le("state_incl_rows_i1", cert.t2 @ ones_l, 1.0)
    le("state_incl_rows_i2", cert.t3 @ ones_l, 1.0)

    # input-constraint inclusion
    u = uc.u_mat
    eq("input_incl_state", cert.q @ big_l, u @ g.k[:, None] @ c)
    eq("input_incl_int1", cert.q @ l_i1, u @ g.k_i1)
    eq("input_incl_int2", cert.q @ l_i2, u @ g.k_i2)
    eq("input_incl_ref", cert.q_r @ r_mat, (u @ g.k_r)[:, None])
    le("input_incl_rows", cert.q @ ones_l + cert.q_r @ rho, 1.0)

    # sign structure
    offdiag = cert.h - np.diag(np.diag(cert.h))
    mask = ~np.eye(cert.inv.rows, dtype=bool)
    res["metzler"] = float(-offdiag[mask].min()) if cert.inv.rows > 1 else 0.0
    tols["metzler"] = tol
    res["h_r_nonneg"] = float(-cert.h_r.min())
    tols["h_r_nonneg"] = tol
    res["t_nonneg"] = float(-cert.t_stack.min())
    tols["t_nonneg"] = tol
    res["q_nonneg"] = float(-min(cert.q.min(), cert.q_r.min()))
    tols["q_nonneg"] = tol
    res["gamma_positive"] = float(gamma_min - cert.gamma)
    tols["gamma_positive"] = 0.0

    # closed-loop stability
    cl = build_closed_loop(plant, g, ref)
    margin = hurwitz_margin(cl.a_cl)
    res["stability"] = float(stability_margin_min - margin)
    tols["stability"] = 0.0

    passed = all(res[k] <= tols[k] for k in res)
    return CertReport(
        passed=passed,
        residuals=res,
        tolerances=tols,
        gamma=float(cert.gamma),
        stability_margin=float(margin),
    )


class _VarLayout:
    """Flat variable indexing for the completion LP."""

    def __init__(self, l, n_cl, l_x, l_u):
        self.l, self.n_cl, self.l_x, self.l_u = l, n_cl, l_x, l_u
        self.sizes = {
            "h": l * l,
            "h_r": 2 * l,
            "t": (l_x + 4) * l,
            "q": l_u * l,
            "q_r": 2 * l_u,
            "v": n_cl * l,
            "gamma": 1,
        }
        self.offsets = {}
        pos = 0
        for name, size in self.sizes.items():
            self.offsets[name] = pos
            pos += size
        self.total = pos

    def h_idx(self, i, j):
        return self.offsets["h"] + i * self.l + j

    def h_r_idx(self, i, j):
        return self.offsets["h_r"] + i * 2 + j

    def t_idx(self, r, j):
        return self.offsets["t"] + r * self.l + j

    def q_idx(self, r, j):
        return self.offsets["q"] + r * self.l + j

    def q_r_idx(self, r, j):
        return self.offsets["q_r"] + r * 2 + j

    def v_idx(self, r, j):
        return self.offsets["v"] + r * self.l + j

    @property
    def gamma_idx(self):
        return self.offsets["gamma"]


def completion_rows(
    gains: ControllerGains,
    inv: InvariantSet,
    rho,
    xi: IntegralBounds,
    plant: PlantModel,
    xc: StateConstraint,
    uc: InputConstraint,
    ref: ReferenceClass,
):
    """(layout, eq_lhs, eq_rhs, ub_lhs, ub_rhs) of the multiplier-search LP
    for fixed gains and geometry."""
    n = plant.n
    l = inv.rows
    n_cl = inv.n_cl
    l_x, l_u = xc.rows, uc.rows
    rho = np.asarray(rho, dtype=float).ravel()
    lay = _VarLayout(l, n_cl, l_x, l_u)
    l_cl = inv.l_cl
    big_l, l_i1, _ = inv.blocks(n)

    cl = build_closed_loop(plant, gains, ref)
    rhs_flow = l_cl @ cl.a_cl  # l x n_cl
    rhs_ref = big_l @ (plant.b @ gains.k_r) + l_i1  # l
    x_cl_stack = stack_state_constraints(xc, xi).shape_mat  # (l_x + 4) x n_cl
    u_map = uc.u_mat @ np.column_stack(
        [gains.k[:, None] @ plant.c, gains.k_i1, gains.k_i2]
    )  # l_u x n_cl
    rhs_qr = uc.u_mat @ gains.k_r  # l_u

    eq_rows, eq_rhs = [], []

    def add_eq(coeffs_idx_val, rhs):
        row = np.zeros(lay.total)
        for idx, val in coeffs_idx_val:
            row[idx] += val
        eq_rows.append(row)
        eq_rhs.append(rhs)

    # H l_cl = l_cl A_cl
    for i in range(l):
        for cc in range(n_cl):
            add_eq([(lay.h_idx(i, j), l_cl[j, cc]) for j in range(l)], rhs_flow[i, cc])
    # H_r R = L B k_r + L_I1
    for i in range(l):
        add_eq([(lay.h_r_idx(i, 0), 1.0), (lay.h_r_idx(i, 1), -1.0)], rhs_ref[i])
    # V l_cl = I
    for r in range(n_cl):
        for cc in range(n_cl):
            add_eq(
                [(lay.v_idx(r, j), l_cl[j, cc]) for j in range(l)],
                1.0 if r == cc else 0.0,
            )
    # T l_cl = diag(X, X_I)
    for r in range(l_x + 4):
        for cc in range(n_cl):
            add_eq([(lay.t_idx(r, j), l_cl[j, cc]) for j in range(l)], x_cl_stack[r, cc])
    # Q l_cl = U [KC K_I1 K_I2]
    for r in range(l_u):
        for cc in range(n_cl):
            add_eq([(lay.q_idx(r, j), l_cl[j, cc]) for j in range(l)], u_map[r, cc])
    # Q_r R = U k_r
    for r in range(l_u):
        add_eq([(lay.q_r_idx(r, 0), 1.0), (lay.q_r_idx(r, 1), -1.0)], rhs_qr[r])

    ub_rows, ub_rhs = [], []

    def add_ub(coeffs_idx_val, rhs):
        row = np.zeros(lay.total)
        for idx, val in coeffs_idx_val:
            row[idx] += val
        ub_rows.append(row)
        ub_rhs.append(rhs)

    # H 1 + H_r rho <= -gamma
    for i in range(l):
        coeffs = [(lay.h_idx(i, j), 1.0) for j in range(l)]
        coeffs += [(lay.h_r_idx(i, 0), rho[0]), (lay.h_r_idx(i, 1), rho[1])]
        coeffs.append((lay.gamma_idx, 1.0))
        add_ub(coeffs, 0.0)
    # T 1 <= 1
    for r in range(l_x + 4):
        add_ub([(lay.t_idx(r, j), 1.0) for j in range(l)], 1.0)
    # Q 1 + Q_r rho <= 1
    for r in range(l_u):
        coeffs = [(lay.q_idx(r, j), 1.0) for j in range(l)]
        coeffs += [(lay.q_r_idx(r, 0), rho[0]), (lay.q_r_idx(r, 1), rho[1])]
        add_ub(coeffs, 1.0)

    return lay, np.array(eq_rows), np.array(eq_rhs), np.array(ub_rows), np.array(ub_rhs)


def completion_bounds(lay: _VarLayout, mult_hi: float, v_hi: float, gamma_min: float, gamma_hi: float):
    lower = np.zeros(lay.total)
    upper = np.full(lay.total, mult_hi)
    # H diagonal is free within the box; everything else keeps sign
    for i in range(lay.l):
        lower[lay.h_idx(i, i)] = -mult_hi
    lower[lay.offsets["v"] : lay.offsets["v"] + lay.sizes["v"]] = -v_hi
    upper[lay.offsets["v"] : lay.offsets["v"] + lay.sizes["v"]] = v_hi
    lower[lay.gamma_idx] = gamma_min
    upper[lay.gamma_idx] = gamma_hi
    return lower, upper


def unpack_multipliers(lay: _VarLayout, x: np.ndarray):
    def grab(name, shape):
        off = lay.offsets[name]
        return x[off : off + lay.sizes[name]].reshape(shape)

    h = grab("h", (lay.l, lay.l))
    h_r = grab("h_r", (lay.l, 2))
    t = grab("t", (lay.l_x + 4, lay.l))
    q = grab("q", (lay.l_u, lay.l))
    q_r = grab("q_r", (lay.l_u, 2))
    v = grab("v", (lay.n_cl, lay.l))
    gamma = float(x[lay.gamma_idx])
    return h, h_r, t, q, q_r, v, gamma


def complete_certificate(
    gains: ControllerGains,
    inv: InvariantSet,
    rho,
    xi: IntegralBounds,
    plant: PlantModel,
    xc: StateConstraint,
    uc: InputConstraint,
    ref: ReferenceClass,
    tol: float = DEFAULT_TOL,
    gamma_min: float = DEFAULT_GAMMA_MIN,
    mult_hi: float = 1e6,
    v_hi: float = 1e6,
    gamma_hi: float = 1e3,
    eq_slack: float = 1e-9,
) -> Certificate | None:
    """Search the multipliers (H, H_r, T, Q, Q_r, V, gamma) by one LP.

    For fixed gains and geometry every certificate condition is linear, so
    feasibility is decided exactly; the LP maximizes gamma.  Equalities are
    relaxed to two-sided inequalities with ``eq_slack`` to keep the LP
    well-posed.  Returns None when the LP is infeasible.
    """
    rho = np.asarray(rho, dtype=float).ravel()
    if rho.shape != (2,):
        raise DimensionMismatch("rho must have two components")
    lay, eq_lhs, eq_rhs, ub_lhs, ub_rhs = completion_rows(
        gains, inv, rho, xi, plant, xc, uc, ref
    )
    lower, upper = completion_bounds(lay, mult_hi, v_hi, gamma_min, gamma_hi)
    cost = np.zeros(lay.total)
    cost[lay.gamma_idx] = -1.0

    a_ub = np.vstack([ub_lhs, eq_lhs, -eq_lhs])
    b_ub = np.concatenate([ub_rhs, eq_rhs + eq_slack, -eq_rhs + eq_slack])
    out = solve_lp(
        LpProblem(cost=cost, ineq_lhs=a_ub, ineq_rhs=b_ub, var_lower=lower, var_upper=upper),
        feas_tol=1e-9,
    )
    if out.status != OPTIMAL:
        return None
    h, h_r, t, q, q_r, v, gamma = unpack_multipliers(lay, out.x)
    l_x = xc.rows
    return Certificate(
        gains=gains,
        inv=inv,
        h=h,
        h_r=np.maximum(h_r, 0.0),
        t1=np.maximum(t[:l_x], 0.0),
        t2=np.maximum(t[l_x : l_x + 2], 0.0),
        t3=np.maximum(t[l_x + 2 :], 0.0),
        q=np.maximum(q, 0.0),
        q_r=np.maximum(q_r, 0.0),
        v=v,
        gamma=gamma,
        xi=xi,
        rho=rho,
    )


@dataclass(frozen=True)
class FalsifyViolation:
    time: float
    sample: int
    kind: str  # "invariant" | "state" | "input"
    row: int
    margin: float
    x_cl: np.ndarray


def _boundary_samples(inv: InvariantSet, n_samples: int, rng) -> np.ndarray:
    """Points on the boundary of the invariant set, n_cl x n_samples."""
    poly = inv.as_polyhedron()
    n_cl = inv.n_cl
    points = []
    if n_cl <= 4:
        verts = poly.vertices()
        points.extend(verts[:n_samples])
        while len(points) < n_samples:
            w = rng.dirichlet(np.ones(len(verts)))
            p = np.sum([wi * v for wi, v in zip(w, verts)], axis=0)
            level = float(np.max(inv.l_cl @ p))
            if level > 1e-9:
                points.append(p / level)
    else:
        while len(points) < n_samples:
            d = rng.normal(size=n_cl)
            status, _, x = poly.support(d)
            if status == OPTIMAL and x is not None:
                points.append(x)
    return np.column_stack(points[:n_samples])


def _excitations(ref: ReferenceClass, n_samples, horizon, dt, steps, rng):
    """Initial exosystem states, slopes and switch schedules per sample.

    Every excitation is an admissible reference: constants at the interval
    ends, grid-aligned square waves between the ends, and exosystem
    trajectories (full-range ramps for the ramp class, amplitude-limited
    sinusoids otherwise).
    """
    rho1, rho2 = float(ref.rho[0]), float(ref.rho[1])
    r0 = np.zeros(n_samples)
    rdot0 = np.zeros(n_samples)
    switches: dict[int, list[tuple[int, float]]] = {}
    for j in range(n_samples):
        pattern = j % 4
        if pattern == 0:
            r0[j] = rho1
        elif pattern == 1:
            r0[j] = -rho2
        elif pattern == 2:
            period = float(rng.uniform(2.0, 40.0))
            half_steps = max(1, int(round(period / (2 * dt))))
            level_hi = bool(rng.integers(0, 2))
            r0[j] = rho1 if level_hi else -rho2
            k = half_steps
            while k < steps:
                level_hi = not level_hi
                switches.setdefault(k, []).append((j, rho1 if level_hi else -rho2))
                k += half_steps
        else:
            if ref.alpha == 0.0:
                descending = bool(rng.integers(0, 2))
                if descending:
                    r0[j] = rho1
                    rdot0[j] = -(rho1 + rho2) / horizon
                else:
                    r0[j] = -rho2
                    rdot0[j] = (rho1 + rho2) / horizon
            else:
                amp = min(rho1, rho2)
                phase = float(rng.uniform(0.0, 2 * np.pi))
                r0[j] = amp * np.sin(phase)
                rdot0[j] = amp * ref.omega * np.cos(phase)
    return r0, rdot0, switches


def falsify_by_simulation(
    cert: Certificate,
    plant: PlantModel,
    xc: StateConstraint,
    uc: InputConstraint,
    ref: ReferenceClass,
    n_samples: int = 100,
    horizon: float = 300.0,
    dt: float = 1e-3,
    tol: float = 1e-6,
    seed: int = 0,
    max_violations: int = 10000,
) -> list[FalsifyViolation]:
    """Monte-Carlo attack on the invariance and constraint claims.

    From ``n_samples`` boundary states of the invariant set, the loop runs
    under worst-case admissible references.  The rollout augments the
    closed loop with the reference exosystem and steps with the exact
    matrix exponential, so reported violations are dynamics, not
    integration error.  Expected empty for a valid certificate.
    """
    rng = np.random.default_rng(seed)
    n = plant.n
    n_cl = plant.n_cl
    cl = build_closed_loop(plant, cert.gains, ref)

    # augmented autonomous system: (x_cl, r, r')
    n_aug = n_cl + 2
    a_aug = np.zeros((n_aug, n_aug))
    a_aug[:n_cl, :n_cl] = cl.a_cl
    a_aug[:n_cl, n_cl] = cl.b_cl.ravel()
    a_aug[n_cl, n_cl + 1] = 1.0
    a_aug[n_cl + 1, n_cl] = -ref.alpha
    e_aug = scipy.linalg.expm(a_aug * dt)

    steps = int(round(horizon / dt))
    x0 = _boundary_samples(cert.inv, n_samples, rng)
    r0, rdot0, switches = _excitations(ref, n_samples, horizon, dt, steps, rng)

    z = np.vstack([x0, r0[None, :], rdot0[None, :]])
    l_cl = cert.inv.l_cl
    x_rows = xc.x_mat
    u_rows = uc.u_mat
    g = cert.gains
    u_map = np.column_stack([g.k[:, None] @ plant.c, g.k_i1, g.k_i2, g.k_r])  # m x (n_cl+1)

    violations: list[FalsifyViolation] = []
    chunk = 2000
    buf = np.empty((chunk, n_aug, n_samples))

    def scan(block, start_step):
        nonlocal violations
        xs = block[:, :n_cl, :]
        rs = block[:, n_cl, :]
        lv = np.einsum("ij,tjs->tis", l_cl, xs) - 1.0
        xv = np.einsum("ij,tjs->tis", x_rows, xs[:, :n, :]) - 1.0
        u = np.einsum("ij,tjs->tis", u_map[:, :n_cl], xs) + u_map[:, n_cl][None, :, None] * rs[:, None, :]
        uv = np.einsum("ij,tjs->tis", u_rows, u) - 1.0
        for kind, arr in (("invariant", lv), ("state", xv), ("input", uv)):
            hit = np.argwhere(arr > tol)
            for t_idx, row, samp in hit[: max(0, max_violations - len(violations))]:
                k_abs = start_step + int(t_idx)
                violations.append(
                    FalsifyViolation(
                        time=k_abs * dt,
                        sample=int(samp),
                        kind=kind,
                        row=int(row),
                        margin=float(arr[t_idx, row, samp]),
                        x_cl=xs[t_idx, :, samp].copy(),
                    )
                )

    filled = 0
    block_start = 0
    for k in range(steps + 1):
        buf[filled] = z
        filled += 1
        if filled == chunk or k == steps:
            scan(buf[:filled], block_start)
            block_start += filled
            filled = 0
            if len(violations) >= max_violations:
                break
        if k < steps:
            z = e_aug @ z
            for samp, value in switches.get(k + 1, ()):  # grid-aligned level changes
                z[n_cl, samp] = value
                z[n_cl + 1, samp] = 0.0
    violations.sort(key=lambda v: (v.time, v.sample, v.kind, v.row))
    return violations[:max_violations]


# ----------------------------------------------------------------------
# certificate files


def _fmt(x: float) -> str:
    return repr(float(x))


def write_certificate(cert: Certificate, path, alpha: float, omega: float) -> None:
    """Serialize a certificate as a human-readable text document.

    The encoding uses shortest round-trip float literals, so identical
    certificates produce byte-identical files.
    """
    lines = ["polytrack-certificate 1"]
    lines.append(f"alpha {_fmt(alpha)}")
    lines.append(f"omega {_fmt(omega)}")
    lines.append(f"gamma {_fmt(cert.gamma)}")
    lines.append("rho " + " ".join(_fmt(v) for v in cert.rho))
    lines.append("xi " + " ".join(_fmt(v) for v in cert.xi.as_array()))
    for name in ("k", "k_i1", "k_i2", "k_r"):
        lines.append(f"{name} " + " ".join(_fmt(v) for v in getattr(cert.gains, name)))

    def matrix(name, m):
        m = np.atleast_2d(m)
        lines.append(f"{name} {m.shape[0]} {m.shape[1]}")
        for row in m:
            lines.append(" ".join(_fmt(v) for v in row))

    matrix("l_cl", cert.inv.l_cl)
    matrix("h", cert.h)
    matrix("h_r", cert.h_r)
    matrix("t1", cert.t1)
    matrix("t2", cert.t2)
    matrix("t3", cert.t3)
    matrix("q", cert.q)
    matrix("q_r", cert.q_r)
    matrix("v", cert.v)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_certificate(path):
    """Parse a certificate file; returns (Certificate, alpha, omega)."""
    from .errors import ParseError

    with open(path) as fh:
        raw = fh.read().splitlines()
    lines = [(i + 1, ln.strip()) for i, ln in enumerate(raw)]
    lines = [(no, ln) for no, ln in lines if ln and not ln.startswith("#")]
    if not lines or not lines[0][1].startswith("polytrack-certificate"):
        raise ParseError("not a certificate file (missing header)", line=1)
    pos = 1
    scalars: dict[str, np.ndarray] = {}
    matrices: dict[str, np.ndarray] = {}

    def parse_floats(no, text):
        try:
            return np.array([float(t) for t in text.split()])
        except ValueError as exc:
            raise ParseError(f"bad number: {exc}", line=no) from None

    matrix_names = {"l_cl", "h", "h_r", "t1", "t2", "t3", "q", "q_r", "v"}
    while pos < len(lines):
        no, ln = lines[pos]
        parts = ln.split(None, 1)
        key = parts[0]
        if key in matrix_names:
            dims = parts[1].split() if len(parts) > 1 else []
            if len(dims) != 2 or not all(d.isdigit() for d in dims):
                raise ParseError(f"matrix {key} needs 'rows cols'", line=no)
            r, c = int(dims[0]), int(dims[1])
            rows = []
            for k in range(r):
                if pos + 1 + k >= len(lines):
                    raise ParseError(f"matrix {key}: expected {r} rows", line=no)
                rno, rln = lines[pos + 1 + k]
                vals = parse_floats(rno, rln)
                if vals.size != c:
                    raise ParseError(f"matrix {key}: row has {vals.size} values, expected {c}", line=rno)
                rows.append(vals)
            matrices[key] = np.vstack(rows)
            pos += 1 + r
        else:
            if len(parts) != 2:
                raise ParseError(f"scalar entry {key} needs values", line=no)
            scalars[key] = parse_floats(no, parts[1])
            pos += 1

    required = {"alpha", "omega", "gamma", "rho", "xi", "k", "k_i1", "k_i2", "k_r"}
    missing = sorted((required - scalars.keys()) | (matrix_names - matrices.keys()))
    if missing:
        raise ParseError(f"missing entries: {', '.join(missing)}")

    gains = ControllerGains(
        k=scalars["k"], k_i1=scalars["k_i1"], k_i2=scalars["k_i2"], k_r=scalars["k_r"]
    )
    try:
        inv = InvariantSet(matrices["l_cl"])
    except (DimensionMismatch, RankDeficient, Unbounded) as exc:
        raise ParseError(f"invalid invariant set: {exc}") from None
    xi_vals = scalars["xi"]
    if xi_vals.size != 4:
        raise ParseError("xi needs four scalars")
    cert = Certificate(
        gains=gains,
        inv=inv,
        h=matrices["h"],
        h_r=matrices["h_r"],
        t1=matrices["t1"],
        t2=matrices["t2"],
        t3=matrices["t3"],
        q=matrices["q"],
        q_r=matrices["q_r"],
        v=matrices["v"],
        gamma=float(scalars["gamma"][0]),
        xi=IntegralBounds.from_array(xi_vals),
        rho=scalars["rho"],
    )
    return cert, float(scalars["alpha"][0]), float(scalars["omega"][0])


def report_key_values(report: CertReport) -> str:
    """Machine-readable key=value rendering of a residual report."""
    lines = [f"passed={'true' if report.passed else 'false'}"]
    lines.append(f"gamma={report.gamma!r}")
    lines.append(f"stability_margin={report.stability_margin!r}")
    for name, value in report.residuals.items():
        lines.append(f"residual.{name}={value!r}")
        lines.append(f"tolerance.{name}={report.tolerances[name]!r}")
    return "\n".join(lines) + "\n"
