"""Bilinear controller design by alternating linear programs.

The design program couples gains, the invariant polyhedron, the reference
bounds, the integral-error box and all inclusion multipliers through
bilinear products.  Fixing one side of every product makes the rest an LP,
so the solver alternates two exact phases:

* multipliers phase - geometry (L_cl, rho, X_I) fixed; gains and all
  multiplier matrices are re-solved maximizing the invariance margin gamma;
* geometry phase - multipliers and gains fixed; the set rows, rho and the
  integral box are re-solved maximizing the design objective plus a small
  gamma bonus, with the left inverse V relaxed and refreshed afterwards.

Both phases keep the previous iterate feasible, so the merit
objective + mu * gamma never decreases.  Restarts draw stabilizing gains by
rejection sampling and seed the geometry with a contractive polytope built
in the real modal coordinates of the closed loop.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .certify import (
    Certificate,
    InvariantSet,
    check_certificate,
    complete_certificate,
)
from .errors import (
    NoFeasiblePoint,
    NoStabilizingGains,
    PhaseInfeasible,
)
from .lp import INFEASIBLE, OPTIMAL, LpProblem, solve_lp
from .model import (
    ControllerGains,
    InputConstraint,
    IntegralBounds,
    PlantModel,
    ReferenceClass,
    StateConstraint,
    build_closed_loop,
    stack_state_constraints,
    transmission_zero_check,
)
from .polyhedra import Polyhedron
from .stability import is_hurwitz, left_inverse

PHI1 = "phi1"
PHI2 = "phi2"

MULTIPLIERS = "multipliers"
GEOMETRY = "geometry"


@dataclass(frozen=True)
class SynthesisOptions:
    objective: str = PHI1
    l_rows: int = 9
    max_outer_iters: int = 200
    restarts: int = 20
    rng_seed: int = 0
    conv_tol: float = 1e-6
    stagnation_sweeps: int = 3
    # element-wise variable boxes
    mult_hi: float = 100.0    # H off-diagonal, H_r, T, Q, Q_r in [0, mult_hi]
    gain_box: float = 100.0   # gains in [-gain_box, gain_box]
    l_box: float = 100.0      # L_cl entries
    v_box: float = 1000.0     # left-inverse entries
    xi_lo: float = 1e-3
    xi_hi: float = 0.1
    rho_lo: float = 1e-4
    rho_hi: float = 100.0
    rho_floor: tuple | None = None  # optional per-component lower bounds
    gamma_min: float = 1e-6
    gamma_hi: float = 1e3
    merit_gamma_weight: float = 1e-3
    rho_bonus: float = 1e-3   # secondary reward on rho under phi2
    rank_relax: float = 1e-6
    # initialization
    init_attempts: int = 30
    gain_attempts: int = 2000
    hurwitz_margin: float = 1e-4

    def __post_init__(self):
        if self.objective not in (PHI1, PHI2):
            raise ValueError(f"objective must be {PHI1} or {PHI2}")
        if self.restarts < 1 or self.l_rows < 4 or self.conv_tol <= 0:
            raise ValueError("need restarts >= 1, l_rows > n_cl, conv_tol > 0")


@dataclass
class Iterate:
    """One feasible point of the design program."""

    gains: ControllerGains
    l_cl: np.ndarray
    rho: np.ndarray
    xi: np.ndarray  # (hi1, lo1, hi2, lo2)
    h: np.ndarray | None = None
    h_r: np.ndarray | None = None
    t: np.ndarray | None = None
    q: np.ndarray | None = None
    q_r: np.ndarray | None = None
    v: np.ndarray | None = None
    gamma: float = 0.0


@dataclass(frozen=True)
class SynthesisResult:
    cert: Certificate
    objective_value: float
    history: list
    restart_index: int
    converged: bool
    report: object


def _objective_value(objective: str, rho, xi) -> float:
    if objective == PHI1:
        return float(rho[0] + rho[1])
    return float(np.sum(xi))


def _merit(objective: str, rho, xi, gamma, opts: SynthesisOptions) -> float:
    base = _objective_value(objective, rho, xi)
    if objective == PHI2:
        base += opts.rho_bonus * float(rho[0] + rho[1])
    return base + opts.merit_gamma_weight * float(gamma)


def _ref_with(ref_kind_alpha, omega, rho) -> ReferenceClass:
    if ref_kind_alpha == 0.0:
        return ReferenceClass.ramp(rho=rho)
    return ReferenceClass.sinusoid(omega=omega, rho=rho)


# ----------------------------------------------------------------------
# initialization


def _real_modal_form(a_cl, cond_cap=1e8):
    """(T, blocks) with A_cl T = T blockdiag; blocks are ('r', lam) or
    ('c', re, im).  None when the eigenbasis is too ill-conditioned."""
    vals, vecs = np.linalg.eig(a_cl)
    n = a_cl.shape[0]
    used = np.zeros(n, dtype=bool)
    cols = []
    blocks = []
    order = np.argsort(vals.real)
    for i in order:
        if used[i]:
            continue
        lam = vals[i]
        if abs(lam.imag) < 1e-9:
            used[i] = True
            cols.append(vecs[:, i].real)
            blocks.append(("r", lam.real))
        else:
            match = None
            for j in order:
                if not used[j] and j != i and abs(vals[j] - lam.conjugate()) < 1e-7:
                    match = j
                    break
            if match is None:
                return None, None
            used[i] = used[match] = True
            v = vecs[:, i]
            cols.append(v.real)
            cols.append(v.imag)
            blocks.append(("c", lam.real, abs(lam.imag)))
    t = np.column_stack(cols)
    if np.linalg.cond(t) > cond_cap:
        return None, None
    return t, blocks


def _modal_budget(blocks, l_rows):
    """Row count of the box/polygon shape for the modal blocks, or None."""
    total = 0
    for blk in blocks:
        if blk[0] == "r":
            total += 2
        else:
            _, re, im = blk
            ratio = abs(re) / im
            k = None
            for cand in range(3, l_rows + 1):
                if np.tan(np.pi / cand) <= 0.8 * ratio:
                    k = cand
                    break
            if k is None:
                return None
            total += k
    return total if total <= l_rows else None


def _modal_rows(blocks, l_rows):
    """Rows (in modal coordinates) of a contractive polytope: intervals for
    real modes, regular polygons for oscillatory pairs."""
    rows = []
    pos = 0
    dim = sum(1 if b[0] == "r" else 2 for b in blocks)
    for blk in blocks:
        if blk[0] == "r":
            e = np.zeros(dim)
            e[pos] = 1.0
            rows.append(e.copy())
            rows.append(-e)
            pos += 1
        else:
            _, re, im = blk
            ratio = abs(re) / im
            k = next(c for c in range(3, l_rows + 1) if np.tan(np.pi / c) <= 0.8 * ratio)
            for j in range(k):
                theta = 2.0 * np.pi * j / k
                e = np.zeros(dim)
                e[pos] = np.cos(theta)
                e[pos + 1] = np.sin(theta)
                rows.append(e)
            pos += 2
    return np.array(rows)


def _simplex_rows(blocks):
    """Simplex-shaped contractive polytope for an all-real spectrum."""
    lams = np.array([b[1] for b in blocks])
    dim = lams.size
    lam_max = lams.max()  # least-negative eigenvalue
    c_min = float(np.sum(lam_max - lams) / (-lam_max))
    c = 2.0 * c_min + 1.0
    rows = np.vstack([np.eye(dim), -np.ones((1, dim)) / c])
    return rows


def _fit_into_half_box(rows_x, x_cl_stack):
    """Scale the candidate set to sit inside half the closed-loop state box."""
    sigma = 0.0
    for r in x_cl_stack:
        out = solve_lp(LpProblem(cost=-r, ineq_lhs=rows_x, ineq_rhs=np.ones(rows_x.shape[0])))
        if out.status != OPTIMAL:
            return None
        sigma = max(sigma, -out.objective)
    if sigma <= 0.0:
        return None
    return rows_x * (2.0 * sigma)


def initialize(
    plant: PlantModel,
    xc: StateConstraint,
    uc: InputConstraint,
    alpha: float,
    omega: float,
    opts: SynthesisOptions,
    rng,
):
    """Draw stabilizing gains and a matching contractive polytope.

    Gains are rejection-sampled uniformly in the gain box until the closed
    loop is Hurwitz and its modal structure fits the row budget; the
    candidate set is a box/polygon (or simplex) in the real modal
    coordinates, scaled into half the closed-loop state box and padded with
    strictly redundant shrunk rows up to ``l_rows``.

    Raises :class:`NoStabilizingGains` when the attempt budget runs out.
    """
    n_cl = plant.n_cl
    ref_probe = _ref_with(alpha, omega, (1.0, 1.0))
    xi0 = np.full(4, opts.xi_lo)
    x_cl_stack = stack_state_constraints(xc, IntegralBounds.from_array(xi0)).shape_mat

    for _ in range(opts.gain_attempts):
        vals = rng.uniform(-opts.gain_box, opts.gain_box, size=4 * plant.m)
        gains = ControllerGains(
            k=vals[: plant.m],
            k_i1=vals[plant.m : 2 * plant.m],
            k_i2=vals[2 * plant.m : 3 * plant.m],
            k_r=vals[3 * plant.m :],
        )
        a_cl = build_closed_loop(plant, gains, ref_probe).a_cl
        if not is_hurwitz(a_cl, opts.hurwitz_margin):
            continue
        t_modal, blocks = _real_modal_form(a_cl)
        if t_modal is None:
            continue
        budget = _modal_budget(blocks, opts.l_rows)
        if budget is not None:
            rows_z = _modal_rows(blocks, opts.l_rows)
        elif all(b[0] == "r" for b in blocks) and n_cl + 1 <= opts.l_rows:
            rows_z = _simplex_rows(blocks)
        else:
            continue
        try:
            t_inv = np.linalg.inv(t_modal)
        except np.linalg.LinAlgError:
            continue
        rows_x = rows_z @ t_inv
        rows_x = _fit_into_half_box(rows_x, x_cl_stack)
        if rows_x is None:
            continue
        # pad with strictly redundant shrunk copies up to the row budget
        filler = []
        base = rows_x.shape[0]
        for k in range(opts.l_rows - base):
            filler.append(0.9 * rows_x[k % base])
        l_cl = np.vstack([rows_x] + ([np.array(filler)] if filler else []))
        rho0 = np.full(2, 1e-2)
        if opts.rho_floor is not None:
            rho0 = np.maximum(rho0, np.asarray(opts.rho_floor, dtype=float))
        return Iterate(gains=gains, l_cl=l_cl, rho=rho0.copy(), xi=xi0.copy())
    raise NoStabilizingGains(
        f"no stabilizing gain sample fit the row budget in {opts.gain_attempts} draws"
    )


# ----------------------------------------------------------------------
# phase LPs


class _MultLayout:
    """Variables of the multipliers phase: gains, H, H_r, T, Q, Q_r, gamma."""

    def __init__(self, l, n_cl, l_x, l_u, m):
        self.l, self.n_cl, self.l_x, self.l_u, self.m = l, n_cl, l_x, l_u, m
        sizes = [
            ("k", m),
            ("k_i1", m),
            ("k_i2", m),
            ("k_r", m),
            ("h", l * l),
            ("h_r", 2 * l),
            ("t", (l_x + 4) * l),
            ("q", l_u * l),
            ("q_r", 2 * l_u),
            ("gamma", 1),
        ]
        self.offsets = {}
        pos = 0
        for name, size in sizes:
            self.offsets[name] = pos
            pos += size
        self.total = pos

    def h_idx(self, i, j):
        return self.offsets["h"] + i * self.l + j

    def h_r_idx(self, i, j):
        return self.offsets["h_r"] + 2 * i + j

    def t_idx(self, r, j):
        return self.offsets["t"] + r * self.l + j

    def q_idx(self, r, j):
        return self.offsets["q"] + r * self.l + j

    def q_r_idx(self, r, j):
        return self.offsets["q_r"] + 2 * r + j

    def gain_idx(self, name, j):
        return self.offsets[name] + j


def _multipliers_lp(it: Iterate, plant, xc, uc, alpha, opts):
    n, m, n_cl = plant.n, plant.m, plant.n_cl
    l = it.l_cl.shape[0]
    l_x, l_u = xc.rows, uc.rows
    lay = _MultLayout(l, n_cl, l_x, l_u, m)
    l_cl = it.l_cl
    big_l = l_cl[:, :n]
    l_i1 = l_cl[:, n]
    l_i2 = l_cl[:, n + 1]
    a, b, c = plant.a, plant.b, plant.c
    lb = big_l @ b  # l x m
    ub_mat = uc.u_mat  # l_u x m
    rho = it.rho
    xi = IntegralBounds.from_array(it.xi)
    x_cl_stack = stack_state_constraints(xc, xi).shape_mat

    eq_rows, eq_rhs = [], []

    def add_eq(pairs, rhs):
        row = np.zeros(lay.total)
        for idx, val in pairs:
            row[idx] += val
        eq_rows.append(row)
        eq_rhs.append(rhs)

    la = big_l @ a  # l x n
    # state columns: H L - (L B) K c = L A - L_I1 c
    for i in range(l):
        for cc in range(n):
            pairs = [(lay.h_idx(i, j), big_l[j, cc]) for j in range(l)]
            pairs += [(lay.gain_idx("k", j), -lb[i, j] * c[0, cc]) for j in range(m)]
            add_eq(pairs, la[i, cc] - l_i1[i] * c[0, cc])
    # x_I1 column: H L_I1 - (L B) K_I1 = L_I2
    for i in range(l):
        pairs = [(lay.h_idx(i, j), l_i1[j]) for j in range(l)]
        pairs += [(lay.gain_idx("k_i1", j), -lb[i, j]) for j in range(m)]
        add_eq(pairs, l_i2[i])
    # x_I2 column: H L_I2 - (L B) K_I2 = -alpha L_I1
    for i in range(l):
        pairs = [(lay.h_idx(i, j), l_i2[j]) for j in range(l)]
        pairs += [(lay.gain_idx("k_i2", j), -lb[i, j]) for j in range(m)]
        add_eq(pairs, -alpha * l_i1[i])
    # H_r R - (L B) K_r = L_I1
    for i in range(l):
        pairs = [(lay.h_r_idx(i, 0), 1.0), (lay.h_r_idx(i, 1), -1.0)]
        pairs += [(lay.gain_idx("k_r", j), -lb[i, j]) for j in range(m)]
        add_eq(pairs, l_i1[i])
    # T l_cl = diag(X, X_I)
    for r in range(l_x + 4):
        for cc in range(n_cl):
            add_eq([(lay.t_idx(r, j), l_cl[j, cc]) for j in range(l)], x_cl_stack[r, cc])
    # Q l_cl - U [K c, K_I1, K_I2] = 0
    for r in range(l_u):
        for cc in range(n_cl):
            pairs = [(lay.q_idx(r, j), l_cl[j, cc]) for j in range(l)]
            if cc < n:
                pairs += [
                    (lay.gain_idx("k", j), -ub_mat[r, j] * c[0, cc]) for j in range(m)
                ]
            elif cc == n:
                pairs += [(lay.gain_idx("k_i1", j), -ub_mat[r, j]) for j in range(m)]
            else:
                pairs += [(lay.gain_idx("k_i2", j), -ub_mat[r, j]) for j in range(m)]
            add_eq(pairs, 0.0)
    # Q_r R - U K_r = 0
    for r in range(l_u):
        pairs = [(lay.q_r_idx(r, 0), 1.0), (lay.q_r_idx(r, 1), -1.0)]
        pairs += [(lay.gain_idx("k_r", j), -ub_mat[r, j]) for j in range(m)]
        add_eq(pairs, 0.0)

    ub_rows, ub_rhs = [], []

    def add_ub(pairs, rhs):
        row = np.zeros(lay.total)
        for idx, val in pairs:
            row[idx] += val
        ub_rows.append(row)
        ub_rhs.append(rhs)

    for i in range(l):
        pairs = [(lay.h_idx(i, j), 1.0) for j in range(l)]
        pairs += [(lay.h_r_idx(i, 0), rho[0]), (lay.h_r_idx(i, 1), rho[1])]
        pairs.append((lay.offsets["gamma"], 1.0))
        add_ub(pairs, 0.0)
    for r in range(l_x + 4):
        add_ub([(lay.t_idx(r, j), 1.0) for j in range(l)], 1.0)
    for r in range(l_u):
        pairs = [(lay.q_idx(r, j), 1.0) for j in range(l)]
        pairs += [(lay.q_r_idx(r, 0), rho[0]), (lay.q_r_idx(r, 1), rho[1])]
        add_ub(pairs, 1.0)

    lower = np.zeros(lay.total)
    upper = np.full(lay.total, opts.mult_hi)
    for name in ("k", "k_i1", "k_i2", "k_r"):
        off = lay.offsets[name]
        lower[off : off + m] = -opts.gain_box
        upper[off : off + m] = opts.gain_box
    for i in range(l):
        lower[lay.h_idx(i, i)] = -opts.mult_hi
    g_idx = lay.offsets["gamma"]
    lower[g_idx] = opts.gamma_min
    upper[g_idx] = opts.gamma_hi

    cost = np.zeros(lay.total)
    cost[g_idx] = -1.0
    return lay, LpProblem(
        cost=cost,
        eq_lhs=np.array(eq_rows),
        eq_rhs=np.array(eq_rhs),
        ineq_lhs=np.array(ub_rows),
        ineq_rhs=np.array(ub_rhs),
        var_lower=lower,
        var_upper=upper,
    )


def multipliers_step(it: Iterate, plant, xc, uc, alpha, opts) -> Iterate:
    """Re-solve gains and multipliers for the current geometry, maximizing
    the invariance margin."""
    lay, prob = _multipliers_lp(it, plant, xc, uc, alpha, opts)
    out = solve_lp(prob, feas_tol=1e-9)
    if out.status != OPTIMAL:
        raise PhaseInfeasible(f"multipliers phase: {out.status}")
    x = out.x
    m = plant.m

    def grab(name, shape):
        off = lay.offsets[name]
        size = int(np.prod(shape))
        return x[off : off + size].reshape(shape)

    gains = ControllerGains(
        k=grab("k", (m,)),
        k_i1=grab("k_i1", (m,)),
        k_i2=grab("k_i2", (m,)),
        k_r=grab("k_r", (m,)),
    )
    l = lay.l
    it2 = replace(it)
    it2.gains = gains
    it2.h = grab("h", (l, l))
    it2.h_r = np.maximum(grab("h_r", (l, 2)), 0.0)
    it2.t = np.maximum(grab("t", (lay.l_x + 4, l)), 0.0)
    it2.q = np.maximum(grab("q", (lay.l_u, l)), 0.0)
    it2.q_r = np.maximum(grab("q_r", (lay.l_u, 2)), 0.0)
    it2.v = left_inverse(it.l_cl)
    it2.gamma = float(x[lay.offsets["gamma"]])
    return it2


class _GeoLayout:
    """Variables of the geometry phase: L_cl, rho, xi, gamma."""

    def __init__(self, l, n_cl):
        self.l, self.n_cl = l, n_cl
        self.total = l * n_cl + 2 + 4 + 1
        self.rho_off = l * n_cl
        self.xi_off = self.rho_off + 2
        self.gamma_off = self.xi_off + 4

    def l_idx(self, i, c):
        return i * self.n_cl + c


def _geometry_lp(it: Iterate, plant, xc, uc, alpha, opts):
    n, n_cl = plant.n, plant.n_cl
    l = it.l_cl.shape[0]
    l_x, l_u = xc.rows, uc.rows
    lay = _GeoLayout(l, n_cl)
    a_cl = build_closed_loop(plant, it.gains, _ref_with(alpha, 0.0 if alpha == 0 else np.sqrt(alpha), (1.0, 1.0))).a_cl
    b_kr = plant.b @ it.gains.k_r  # length n
    h, h_r, t, q = it.h, it.h_r, it.t, it.q
    v = it.v

    eq_rows, eq_rhs = [], []

    def add_eq(pairs, rhs):
        row = np.zeros(lay.total)
        for idx, val in pairs:
            row[idx] += val
        eq_rows.append(row)
        eq_rhs.append(rhs)

    # H L_cl - L_cl A_cl = 0
    for i in range(l):
        for cc in range(n_cl):
            pairs = [(lay.l_idx(j, cc), h[i, j]) for j in range(l)]
            pairs += [(lay.l_idx(i, d), -a_cl[d, cc]) for d in range(n_cl)]
            add_eq(pairs, 0.0)
    # L (B k_r) + L_I1 = H_r R
    rhs_ref = h_r[:, 0] - h_r[:, 1]
    for i in range(l):
        pairs = [(lay.l_idx(i, d), b_kr[d]) for d in range(n)]
        pairs.append((lay.l_idx(i, n), 1.0))
        add_eq(pairs, rhs_ref[i])
    # T L_cl = diag(X, X_I) with the xi entries as variables
    for r in range(l_x + 4):
        for cc in range(n_cl):
            pairs = [(lay.l_idx(j, cc), t[r, j]) for j in range(l)]
            rhs = 0.0
            if r < l_x and cc < n:
                rhs = xc.x_mat[r, cc]
            elif r >= l_x:
                block = r - l_x
                if block == 0 and cc == n:
                    pairs.append((lay.xi_off + 0, -1.0))
                elif block == 1 and cc == n:
                    pairs.append((lay.xi_off + 1, 1.0))
                elif block == 2 and cc == n + 1:
                    pairs.append((lay.xi_off + 2, -1.0))
                elif block == 3 and cc == n + 1:
                    pairs.append((lay.xi_off + 3, 1.0))
            add_eq(pairs, rhs)
    # Q L_cl = U [K c, K_I1, K_I2]
    u_map = uc.u_mat @ np.column_stack(
        [it.gains.k[:, None] @ plant.c, it.gains.k_i1, it.gains.k_i2]
    )
    for r in range(l_u):
        for cc in range(n_cl):
            add_eq([(lay.l_idx(j, cc), q[r, j]) for j in range(l)], u_map[r, cc])

    ub_rows, ub_rhs = [], []

    def add_ub(pairs, rhs):
        row = np.zeros(lay.total)
        for idx, val in pairs:
            row[idx] += val
        ub_rows.append(row)
        ub_rhs.append(rhs)

    # relaxed left-inverse identity: |V L_cl - I| <= rank_relax
    for r in range(n_cl):
        for cc in range(n_cl):
            pairs = [(lay.l_idx(j, cc), v[r, j]) for j in range(l)]
            target = 1.0 if r == cc else 0.0
            add_ub(pairs, target + opts.rank_relax)
            add_ub([(idx, -val) for idx, val in pairs], -target + opts.rank_relax)
    # H 1 + H_r rho + gamma <= 0
    h_row_sums = h @ np.ones(l)
    for i in range(l):
        pairs = [
            (lay.rho_off + 0, h_r[i, 0]),
            (lay.rho_off + 1, h_r[i, 1]),
            (lay.gamma_off, 1.0),
        ]
        add_ub(pairs, -h_row_sums[i])
    # Q 1 + Q_r rho <= 1
    q_row_sums = q @ np.ones(l)
    for r in range(l_u):
        pairs = [(lay.rho_off + 0, it.q_r[r, 0]), (lay.rho_off + 1, it.q_r[r, 1])]
        add_ub(pairs, 1.0 - q_row_sums[r])

    lower = np.empty(lay.total)
    upper = np.empty(lay.total)
    lower[: l * n_cl] = -opts.l_box
    upper[: l * n_cl] = opts.l_box
    rho_lo = np.full(2, opts.rho_lo)
    if opts.rho_floor is not None:
        rho_lo = np.maximum(rho_lo, np.asarray(opts.rho_floor, dtype=float))
    lower[lay.rho_off : lay.rho_off + 2] = rho_lo
    upper[lay.rho_off : lay.rho_off + 2] = opts.rho_hi
    lower[lay.xi_off : lay.xi_off + 4] = opts.xi_lo
    upper[lay.xi_off : lay.xi_off + 4] = opts.xi_hi
    lower[lay.gamma_off] = opts.gamma_min
    upper[lay.gamma_off] = opts.gamma_hi

    cost = np.zeros(lay.total)
    if opts.objective == PHI1:
        cost[lay.rho_off : lay.rho_off + 2] = -1.0
    else:
        cost[lay.xi_off : lay.xi_off + 4] = -1.0
        cost[lay.rho_off : lay.rho_off + 2] = -opts.rho_bonus
    cost[lay.gamma_off] = -opts.merit_gamma_weight
    return lay, LpProblem(
        cost=cost,
        eq_lhs=np.array(eq_rows),
        eq_rhs=np.array(eq_rhs),
        ineq_lhs=np.array(ub_rows),
        ineq_rhs=np.array(ub_rhs),
        var_lower=lower,
        var_upper=upper,
    )


def geometry_step(it: Iterate, plant, xc, uc, alpha, opts) -> Iterate:
    """Re-solve the invariant set rows, reference bounds and integral box
    for the current multipliers, maximizing the design objective."""
    lay, prob = _geometry_lp(it, plant, xc, uc, alpha, opts)
    out = solve_lp(prob, feas_tol=1e-9)
    if out.status != OPTIMAL:
        raise PhaseInfeasible(f"geometry phase: {out.status}")
    x = out.x
    l, n_cl = lay.l, lay.n_cl
    it2 = replace(it)
    it2.l_cl = x[: l * n_cl].reshape(l, n_cl)
    it2.rho = x[lay.rho_off : lay.rho_off + 2].copy()
    it2.xi = x[lay.xi_off : lay.xi_off + 4].copy()
    it2.gamma = float(x[lay.gamma_off])
    it2.v = left_inverse(it2.l_cl)
    return it2


def alternate_step(it: Iterate, phase: str, plant, xc, uc, alpha, opts) -> Iterate:
    """One phase of the alternating scheme; ``phase`` selects which side of
    the bilinear products is re-solved."""
    if phase == MULTIPLIERS:
        return multipliers_step(it, plant, xc, uc, alpha, opts)
    if phase == GEOMETRY:
        return geometry_step(it, plant, xc, uc, alpha, opts)
    raise ValueError(f"unknown phase {phase!r}")


# ----------------------------------------------------------------------
# driver


def _certificate_from(it: Iterate, xc: StateConstraint) -> Certificate:
    l_x = xc.rows
    return Certificate(
        gains=it.gains,
        inv=InvariantSet(it.l_cl),
        h=it.h,
        h_r=it.h_r,
        t1=it.t[:l_x],
        t2=it.t[l_x : l_x + 2],
        t3=it.t[l_x + 2 :],
        q=it.q,
        q_r=it.q_r,
        v=it.v,
        gamma=it.gamma,
        xi=IntegralBounds.from_array(it.xi),
        rho=it.rho.copy(),
    )


def _certify_iterate(it, plant, xc, uc, alpha, omega, opts):
    """Certificate + report for an iterate, re-completing if needed."""
    ref = _ref_with(alpha, omega, it.rho)
    try:
        cert = _certificate_from(it, xc)
    except Exception:
        return None, None
    report = check_certificate(cert, plant, xc, uc, ref, tol=max(opts.conv_tol, 1e-7))
    if report.passed:
        return cert, report
    redo = complete_certificate(
        cert.gains,
        cert.inv,
        it.rho,
        cert.xi,
        plant,
        xc,
        uc,
        ref,
        gamma_min=opts.gamma_min,
        mult_hi=opts.mult_hi,
        v_hi=opts.v_box,
        gamma_hi=opts.gamma_hi,
    )
    if redo is None:
        return None, None
    report = check_certificate(redo, plant, xc, uc, ref, tol=max(opts.conv_tol, 1e-7))
    if report.passed:
        return redo, report
    return None, None


def synthesize(
    plant: PlantModel,
    xc: StateConstraint,
    uc: InputConstraint,
    kind: str,
    omega: float,
    opts: SynthesisOptions,
    log=None,
) -> SynthesisResult:
    """Search a certified tracking design by multi-start alternating LPs.

    ``kind`` is ``"ramp"`` or ``"sinusoid"`` (with angular frequency
    ``omega``).  Returns the best certified result over all restarts,
    breaking objective ties by the larger invariance margin.  Raises
    :class:`NoFeasiblePoint` when no restart certifies.
    """
    if kind not in ("ramp", "sinusoid"):
        raise ValueError("kind must be 'ramp' or 'sinusoid'")
    alpha = 0.0 if kind == "ramp" else float(omega) ** 2
    if kind == "sinusoid" and omega <= 0:
        raise ValueError("sinusoid synthesis needs omega > 0")
    probe = _ref_with(alpha, omega, (1.0, 1.0))
    if not transmission_zero_check(plant, probe):
        raise NoFeasiblePoint("plant has a transmission zero at the reference poles")
    if opts.l_rows <= plant.n_cl:
        raise ValueError(f"l_rows must exceed the closed-loop dimension {plant.n_cl}")

    emit = log if log is not None else (lambda line: None)
    best = None  # (objective, gamma, cert, report, history, restart, converged)

    for restart in range(opts.restarts):
        rng = np.random.default_rng([opts.rng_seed, restart])
        history = []
        it = None
        # find a feasible starting point: sampled geometry + multiplier LP
        for attempt in range(opts.init_attempts):
            try:
                cand = initialize(plant, xc, uc, alpha, omega, opts, rng)
            except NoStabilizingGains:
                break
            for shrink in (1.0, 0.1, 0.01):
                trial = replace(cand)
                trial.rho = np.maximum(cand.rho * shrink, opts.rho_lo)
                if opts.rho_floor is not None:
                    trial.rho = np.maximum(trial.rho, np.asarray(opts.rho_floor))
                try:
                    it = multipliers_step(trial, plant, xc, uc, alpha, opts)
                    break
                except PhaseInfeasible:
                    it = None
            if it is not None:
                break
        if it is None:
            emit(f"restart={restart} status=no-feasible-init")
            continue
        merit = _merit(opts.objective, it.rho, it.xi, it.gamma, opts)
        history.append(
            {
                "sweep": 0,
                "phase": MULTIPLIERS,
                "merit": merit,
                "gamma": it.gamma,
                "objective": _objective_value(opts.objective, it.rho, it.xi),
            }
        )
        emit(
            f"restart={restart} sweep=0 phase=multipliers status=ok "
            f"gamma={it.gamma:.6e} merit={merit:.9e}"
        )

        stagnant = 0
        converged = False
        for sweep in range(1, opts.max_outer_iters + 1):
            prev_merit = merit
            try:
                it = geometry_step(it, plant, xc, uc, alpha, opts)
                it = multipliers_step(it, plant, xc, uc, alpha, opts)
            except PhaseInfeasible as exc:
                emit(f"restart={restart} sweep={sweep} status=phase-infeasible ({exc})")
                break
            merit = _merit(opts.objective, it.rho, it.xi, it.gamma, opts)
            history.append(
                {
                    "sweep": sweep,
                    "phase": GEOMETRY,
                    "merit": merit,
                    "gamma": it.gamma,
                    "objective": _objective_value(opts.objective, it.rho, it.xi),
                }
            )
            emit(
                f"restart={restart} sweep={sweep} phase=geometry status=ok "
                f"gamma={it.gamma:.6e} merit={merit:.9e}"
            )
            if merit - prev_merit < opts.conv_tol:
                stagnant += 1
                if stagnant >= opts.stagnation_sweeps:
                    converged = True
                    break
            else:
                stagnant = 0

        cert, report = _certify_iterate(it, plant, xc, uc, alpha, omega, opts)
        if cert is None:
            emit(f"restart={restart} status=uncertified")
            continue
        objective = _objective_value(opts.objective, cert.rho, cert.xi.as_array())
        emit(
            f"restart={restart} status=certified objective={objective:.9e} "
            f"gamma={cert.gamma:.6e} converged={converged}"
        )
        key = (objective, cert.gamma)
        if best is None or key > (best[0], best[1]):
            best = (objective, cert.gamma, cert, report, history, restart, converged)

    if best is None:
        raise NoFeasiblePoint(f"no certified design in {opts.restarts} restarts")
    objective, _, cert, report, history, restart, converged = best
    return SynthesisResult(
        cert=cert,
        objective_value=objective,
        history=history,
        restart_index=restart,
        converged=converged,
        report=report,
    )
