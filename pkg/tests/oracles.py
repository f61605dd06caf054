"""Brute-force reference implementations used only to check the library.

These deliberately avoid the code paths they verify: LP optima come from
enumerating basic points, vertex sets from active-set enumeration, and
stability from numpy's root finder.
"""

import itertools

import numpy as np


def lp_vertex_oracle(c, a_eq, b_eq, a_ub, b_ub, lo, hi, tol=1e-9):
    """Minimum of c@x over a bounded polyhedron by enumerating all candidate
    basic points (square subsystems of active constraints).

    All bounds must be finite so that the feasible set is a polytope and the
    optimum sits on a vertex.  Returns (objective, x) or (None, None) when
    infeasible.
    """
    c = np.asarray(c, dtype=float)
    n = c.size
    rows = [np.asarray(a_eq, dtype=float).reshape(-1, n), np.asarray(a_ub, dtype=float).reshape(-1, n), np.eye(n), -np.eye(n)]
    offs = [np.asarray(b_eq, dtype=float).ravel(), np.asarray(b_ub, dtype=float).ravel(), np.asarray(hi, dtype=float), -np.asarray(lo, dtype=float)]
    big_a = np.vstack(rows)
    big_b = np.concatenate(offs)
    m_eq = rows[0].shape[0]

    def feasible(x):
        if not np.all(np.isfinite(x)):
            return False
        if m_eq and np.abs(big_a[:m_eq] @ x - big_b[:m_eq]).max() > tol * (1 + np.abs(big_b[:m_eq]).max()):
            return False
        r = big_a[m_eq:] @ x - big_b[m_eq:]
        return r.max(initial=-np.inf) <= tol * (1 + np.abs(big_b).max())

    best_obj, best_x = None, None
    m_total = big_a.shape[0]
    free = n - m_eq
    if free < 0:
        return None, None
    for extra in itertools.combinations(range(m_eq, m_total), free):
        idx = list(range(m_eq)) + list(extra)
        a_sq = big_a[idx]
        if np.linalg.matrix_rank(a_sq, tol=1e-9) < n:
            continue
        try:
            x = np.linalg.solve(a_sq, big_b[idx])
        except np.linalg.LinAlgError:
            continue
        if feasible(x):
            obj = float(c @ x)
            if best_obj is None or obj < best_obj - 1e-12:
                best_obj, best_x = obj, x
    return best_obj, best_x


def polytope_vertices_oracle(p, phi, tol=1e-9):
    """All vertices of {x: p x <= phi} by enumerating n-row active sets."""
    p = np.asarray(p, dtype=float)
    phi = np.asarray(phi, dtype=float).ravel()
    m, n = p.shape
    verts = []
    for idx in itertools.combinations(range(m), n):
        sub = p[list(idx)]
        if np.linalg.matrix_rank(sub, tol=1e-9) < n:
            continue
        try:
            x = np.linalg.solve(sub, phi[list(idx)])
        except np.linalg.LinAlgError:
            continue
        if np.all(p @ x <= phi + tol * (1 + np.abs(phi).max())):
            verts.append(x)
    out = []
    for v in verts:
        if not any(np.linalg.norm(v - w, np.inf) <= 1e-7 for w in out):
            out.append(v)
    return out


def poly_roots_stable(coeffs, margin):
    """True iff all roots of the monic polynomial have real part < -margin,
    judged by numpy's eigenvalue-based root finder."""
    roots = np.roots(coeffs)
    return bool(np.all(roots.real < -margin))


def convex_hull_2d(points):
    """Monotone-chain convex hull; returns hull vertices counterclockwise."""
    pts = sorted({(float(p[0]), float(p[1])) for p in points})
    if len(pts) <= 2:
        return [np.array(p) for p in pts]

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 1e-12:
            lower.pop()
        lower.append(p)
    upper = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 1e-12:
            upper.pop()
        upper.append(p)
    return [np.array(p) for p in lower[:-1] + upper[:-1]]


def random_bounded_polytope(rng, dim, extra_rows, scale=1.0):
    """A random bounded polytope with the origin inside: a box plus random
    tangent cuts, rows normalized so the offset is 1."""
    rows = np.vstack([np.eye(dim), -np.eye(dim)]) / scale
    for _ in range(extra_rows):
        d = rng.normal(size=dim)
        d /= np.linalg.norm(d)
        level = scale * rng.uniform(0.4, 1.4)
        rows = np.vstack([rows, d / level])
    return rows, np.ones(rows.shape[0])
