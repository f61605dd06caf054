"""H-representation polyhedra and their geometric certificates.

A polyhedron is {x : P x <= phi}.  Inclusion between two polyhedra is
certified by a non-negative witness matrix Q with Q P1 = P2 and
Q phi1 <= phi2; the witness search is a single LP over the entries of Q so
the certificate itself is returned, not just a verdict.  Small-dimension
vertex enumeration and Fourier-Motzkin projection support the property
tests and the plotting exports.
"""

from __future__ import annotations

import itertools

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyInner,
    TooHighDimensional,
    Unbounded,
)
from .lp import INFEASIBLE, OPTIMAL, UNBOUNDED, LpProblem, solve_lp

_VERTEX_DEDUP_TOL = 1e-9
_MAX_VERTEX_DIM = 4
_MAX_PROJECT_DIM = 8


class Polyhedron:
    """Convex polyhedron {x in R^n : shape @ x <= offset}."""

    def __init__(self, shape, offset, *, origin_interior=False):
        shape = np.atleast_2d(np.asarray(shape, dtype=float))
        offset = np.asarray(offset, dtype=float).ravel()
        if shape.ndim != 2 or shape.shape[1] < 1:
            raise DimensionMismatch(f"shape matrix must be l x n with n >= 1, got {shape.shape}")
        if offset.shape != (shape.shape[0],):
            raise DimensionMismatch(
                f"offset length {offset.shape[0]} != row count {shape.shape[0]}"
            )
        if not (np.all(np.isfinite(shape)) and np.all(np.isfinite(offset))):
            raise DimensionMismatch("non-finite entries in polyhedron data")
        if origin_interior and not np.all(offset > 0.0):
            raise DimensionMismatch("origin-interior polyhedron needs strictly positive offsets")
        self.shape_mat = shape
        self.offset = offset

    @property
    def dim(self) -> int:
        return self.shape_mat.shape[1]

    @property
    def num_rows(self) -> int:
        return self.shape_mat.shape[0]

    def __repr__(self):
        return f"Polyhedron({self.num_rows} rows, dim {self.dim})"

    def contains(self, x, tol: float = 1e-9) -> bool:
        x = np.asarray(x, dtype=float).ravel()
        if x.shape != (self.dim,):
            raise DimensionMismatch(f"point of dim {x.shape} vs ambient {self.dim}")
        return bool(np.all(self.shape_mat @ x <= self.offset + tol))

    def support(self, direction):
        """(status, value, point) of max direction @ x over the set."""
        direction = np.asarray(direction, dtype=float).ravel()
        out = solve_lp(
            LpProblem(
                cost=-direction,
                ineq_lhs=self.shape_mat,
                ineq_rhs=self.offset,
            )
        )
        if out.status != OPTIMAL:
            return out.status, None, None
        return OPTIMAL, -out.objective, out.x

    def is_empty(self) -> bool:
        out = solve_lp(
            LpProblem(
                cost=np.zeros(self.dim),
                ineq_lhs=self.shape_mat,
                ineq_rhs=self.offset,
            )
        )
        return out.status == INFEASIBLE

    def is_bounded(self) -> bool:
        """Checked by 2n support LPs, one per coordinate direction."""
        for i in range(self.dim):
            e = np.zeros(self.dim)
            for s in (1.0, -1.0):
                e[i] = s
                status, _, _ = self.support(e)
                if status == UNBOUNDED:
                    return False
                if status == INFEASIBLE:
                    return True  # empty sets are vacuously bounded
            e[i] = 0.0
        return True

    def vertices(self) -> list[np.ndarray]:
        """All vertices, by enumeration of row active sets with rank
        filtering; requires ambient dimension <= 4 and a bounded set."""
        n = self.dim
        if n > _MAX_VERTEX_DIM:
            raise TooHighDimensional(f"vertex enumeration limited to dim {_MAX_VERTEX_DIM}")
        if not self.is_bounded():
            raise Unbounded("vertex enumeration requires a bounded polyhedron")
        p, phi = self.shape_mat, self.offset
        scale = 1.0 + float(np.abs(phi).max(initial=0.0))
        found: list[np.ndarray] = []
        for idx in itertools.combinations(range(self.num_rows), n):
            sub = p[list(idx)]
            if np.linalg.matrix_rank(sub, tol=1e-9) < n:
                continue
            try:
                x = np.linalg.solve(sub, phi[list(idx)])
            except np.linalg.LinAlgError:
                continue
            if not np.all(np.isfinite(x)):
                continue
            if np.all(p @ x <= phi + _VERTEX_DEDUP_TOL * scale):
                if not any(np.linalg.norm(x - v, np.inf) <= _VERTEX_DEDUP_TOL for v in found):
                    found.append(x)
        order = np.lexsort(np.array([np.round(v, 9) for v in found]).T[::-1]) if found else []
        return [found[i] for i in order]

    def project_2d(self, dims) -> "Polyhedron":
        """Orthogonal projection onto two coordinates by Fourier-Motzkin
        elimination with LP redundancy pruning after each step."""
        i, j = int(dims[0]), int(dims[1])
        if not (0 <= i < self.dim and 0 <= j < self.dim and i != j):
            raise DimensionMismatch(f"projection coordinates {dims} invalid for dim {self.dim}")
        if self.dim > _MAX_PROJECT_DIM:
            raise TooHighDimensional(f"projection limited to dim {_MAX_PROJECT_DIM}")
        if not self.is_bounded():
            raise Unbounded("projection requires a bounded polyhedron")

        rows = self.shape_mat.copy()
        offs = self.offset.copy()
        keep = [i, j]
        remaining = [k for k in range(self.dim) if k not in keep]
        cols = keep + remaining  # reorder: kept coordinates first
        rows = rows[:, cols]

        while rows.shape[1] > 2:
            rows, offs = _eliminate_best_column(rows, offs)
            rows, offs = _prune_rows(rows, offs)
        return Polyhedron(rows, offs)


def _eliminate_best_column(rows, offs, ztol=1e-11):
    """One Fourier-Motzkin step on the column (index >= 2) with the fewest
    positive*negative row pairings."""
    ncols = rows.shape[1]
    best_k, best_load = None, None
    for k in range(2, ncols):
        col = rows[:, k]
        npos = int(np.sum(col > ztol))
        nneg = int(np.sum(col < -ztol))
        load = npos * nneg
        if best_load is None or load < best_load:
            best_k, best_load = k, load
    k = best_k
    col = rows[:, k]
    zero = np.abs(col) <= ztol
    pos = col > ztol
    neg = col < -ztol

    new_rows = [np.delete(rows[zero], k, axis=1)] if np.any(zero) else []
    new_offs = [offs[zero]] if np.any(zero) else []
    pos_idx = np.flatnonzero(pos)
    neg_idx = np.flatnonzero(neg)
    combo_rows = []
    combo_offs = []
    for pi in pos_idx:
        rp = rows[pi] / col[pi]
        op = offs[pi] / col[pi]
        for ni in neg_idx:
            rn = rows[ni] / (-col[ni])
            on = offs[ni] / (-col[ni])
            combo_rows.append(np.delete(rp + rn, k))
            combo_offs.append(op + on)
    if combo_rows:
        new_rows.append(np.array(combo_rows))
        new_offs.append(np.array(combo_offs))
    if new_rows:
        out_rows = np.vstack([np.atleast_2d(r) for r in new_rows if r.size])
        out_offs = np.concatenate([np.atleast_1d(o) for o in new_offs if o.size])
    else:
        out_rows = np.zeros((0, ncols - 1))
        out_offs = np.zeros(0)
    return out_rows, out_offs


def _prune_rows(rows, offs, tol=1e-9):
    """Row normalization, duplicate removal and LP redundancy pruning."""
    if rows.shape[0] == 0:
        return rows, offs
    norms = np.abs(rows).max(axis=1)
    keep_mask = norms > 1e-12
    # rows with ~zero coefficients are trivial (0 <= b); drop them
    rows, offs, norms = rows[keep_mask], offs[keep_mask], norms[keep_mask]
    rows = rows / norms[:, None]
    offs = offs / norms

    # near-duplicate rows: keep the tightest offset
    order = np.lexsort(np.round(np.column_stack([rows, offs]), 10).T[::-1])
    rows, offs = rows[order], offs[order]
    uniq_rows, uniq_offs = [], []
    for r, o in zip(rows, offs):
        if uniq_rows and np.linalg.norm(r - uniq_rows[-1], np.inf) <= 1e-10:
            uniq_offs[-1] = min(uniq_offs[-1], o)
        else:
            uniq_rows.append(r)
            uniq_offs.append(o)
    rows = np.array(uniq_rows)
    offs = np.array(uniq_offs)

    # LP pruning: a row goes iff the others already imply it; one pass is
    # enough because removing an implied row cannot make a kept row implied
    alive = list(range(rows.shape[0]))
    for pos in list(alive):
        others = [r for r in alive if r != pos]
        if not others:
            break
        out = solve_lp(
            LpProblem(
                cost=-rows[pos],
                ineq_lhs=rows[others],
                ineq_rhs=offs[others],
            )
        )
        if out.status == OPTIMAL and -out.objective <= offs[pos] + tol:
            alive.remove(pos)
    return rows[alive], offs[alive]


def inclusion_witness(inner: Polyhedron, outer: Polyhedron, tol: float = 1e-9):
    """Non-negative Q with Q P_in = P_out and Q phi_in <= phi_out, or None.

    The witness search is one LP over the entries of Q minimizing the total
    slack sum(Q phi_in); LP infeasibility certifies non-inclusion (the inner
    set must be non-empty, otherwise :class:`EmptyInner` is raised).
    """
    if inner.dim != outer.dim:
        raise DimensionMismatch(f"ambient dims differ: {inner.dim} vs {outer.dim}")
    if inner.is_empty():
        raise EmptyInner("inner polyhedron is empty")
    l1, l2 = inner.num_rows, outer.num_rows
    n = inner.dim
    nq = l2 * l1

    # equality block: for each outer row i and coordinate k:
    #   sum_j Q[i, j] * P_in[j, k] = P_out[i, k]
    a_eq = np.zeros((l2 * n, nq))
    b_eq = np.zeros(l2 * n)
    for i in range(l2):
        a_eq[i * n : (i + 1) * n, i * l1 : (i + 1) * l1] = inner.shape_mat.T
        b_eq[i * n : (i + 1) * n] = outer.shape_mat[i]
    a_ub = np.zeros((l2, nq))
    for i in range(l2):
        a_ub[i, i * l1 : (i + 1) * l1] = inner.offset
    cost = np.tile(inner.offset, l2)

    out = solve_lp(
        LpProblem(
            cost=cost,
            eq_lhs=a_eq,
            eq_rhs=b_eq,
            ineq_lhs=a_ub,
            ineq_rhs=outer.offset + tol,
            var_lower=np.zeros(nq),
        ),
        feas_tol=max(tol, 1e-9),
    )
    if out.status != OPTIMAL:
        return None
    q = out.x.reshape(l2, l1)
    return np.maximum(q, 0.0)


def minkowski_inclusion(
    map_a, set_a: Polyhedron, map_b, set_b: Polyhedron, target: Polyhedron, tol: float = 1e-9
):
    """Witness pair (Q, Q_r) for  map_a*set_a (+) map_b*set_b  inside target.

    Solves one LP for non-negative (Q, Q_r) with
    Q P_a = P_t map_a,  Q_r P_b = P_t map_b,  Q phi_a + Q_r phi_b <= phi_t.
    Returns None when the LP is infeasible (sum not included).
    """
    map_a = np.atleast_2d(np.asarray(map_a, dtype=float))
    map_b = np.atleast_2d(np.asarray(map_b, dtype=float))
    d = target.dim
    if map_a.shape != (d, set_a.dim):
        raise DimensionMismatch(f"map_a {map_a.shape} must be {d} x {set_a.dim}")
    if map_b.shape != (d, set_b.dim):
        raise DimensionMismatch(f"map_b {map_b.shape} must be {d} x {set_b.dim}")
    if set_a.is_empty() or set_b.is_empty():
        raise EmptyInner("summand polyhedron is empty")

    lt = target.num_rows
    la, lb = set_a.num_rows, set_b.num_rows
    na, nb = set_a.dim, set_b.dim
    nq, nr = lt * la, lt * lb
    pa_t = target.shape_mat @ map_a  # lt x na
    pb_t = target.shape_mat @ map_b  # lt x nb

    a_eq = np.zeros((lt * (na + nb), nq + nr))
    b_eq = np.zeros(lt * (na + nb))
    row = 0
    for i in range(lt):
        a_eq[row : row + na, i * la : (i + 1) * la] = set_a.shape_mat.T
        b_eq[row : row + na] = pa_t[i]
        row += na
    for i in range(lt):
        a_eq[row : row + nb, nq + i * lb : nq + (i + 1) * lb] = set_b.shape_mat.T
        b_eq[row : row + nb] = pb_t[i]
        row += nb
    a_ub = np.zeros((lt, nq + nr))
    for i in range(lt):
        a_ub[i, i * la : (i + 1) * la] = set_a.offset
        a_ub[i, nq + i * lb : nq + (i + 1) * lb] = set_b.offset
    cost = np.concatenate([np.tile(set_a.offset, lt), np.tile(set_b.offset, lt)])

    out = solve_lp(
        LpProblem(
            cost=cost,
            eq_lhs=a_eq,
            eq_rhs=b_eq,
            ineq_lhs=a_ub,
            ineq_rhs=target.offset + tol,
            var_lower=np.zeros(nq + nr),
        ),
        feas_tol=max(tol, 1e-9),
    )
    if out.status != OPTIMAL:
        return None
    q = np.maximum(out.x[:nq].reshape(lt, la), 0.0)
    q_r = np.maximum(out.x[nq:].reshape(lt, lb), 0.0)
    return q, q_r


def is_metzler(m, tol: float = 0.0) -> bool:
    """True iff all off-diagonal entries are >= -tol."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"square matrix required, got {m.shape}")
    off = m - np.diag(np.diag(m))
    mask = ~np.eye(m.shape[0], dtype=bool)
    return bool(np.all(off[mask] >= -tol))


def counterclockwise_vertices(poly2d: Polyhedron) -> list[np.ndarray]:
    """Vertices of a 2-D polyhedron ordered counterclockwise."""
    if poly2d.dim != 2:
        raise DimensionMismatch("counterclockwise ordering needs a 2-D polyhedron")
    verts = poly2d.vertices()
    if len(verts) < 2:
        return verts
    center = np.mean(verts, axis=0)
    angles = [np.arctan2(v[1] - center[1], v[0] - center[0]) for v in verts]
    order = np.argsort(angles)
    return [verts[k] for k in order]


def write_polygon_csv(poly2d: Polyhedron, path) -> int:
    """Serialize a 2-D polyhedron's vertices as CSV, counterclockwise.

    Returns the number of vertices written.
    """
    verts = counterclockwise_vertices(poly2d)
    with open(path, "w") as fh:
        fh.write("x,y\n")
        for v in verts:
            fh.write(f"{v[0]:.12g},{v[1]:.12g}\n")
    return len(verts)
