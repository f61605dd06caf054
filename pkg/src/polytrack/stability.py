"""Continuous-time stability tests and left inverses of tall matrices.

The stability test works on the characteristic polynomial (computed by the
Faddeev-LeVerrier recursion) and decides strict Hurwitz stability through
the leading principal minors of the Hurwitz matrix.  No eigenvalue solver
is involved; for the matrix sizes admitted here (dimension <= 12) the
determinant route is cheap and robust.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, RankDeficient

_MAX_DIM = 12


def characteristic_polynomial(m: np.ndarray) -> np.ndarray:
    """Coefficients of det(sI - M), leading coefficient first."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"square matrix required, got {m.shape}")
    n = m.shape[0]
    coeffs = np.empty(n + 1)
    coeffs[0] = 1.0
    work = np.eye(n)
    for k in range(1, n + 1):
        work = m @ work
        ck = -np.trace(work) / k
        coeffs[k] = ck
        work = work + ck * np.eye(n)
    return coeffs


def _hurwitz_minors_positive(coeffs: np.ndarray) -> bool:
    """Strict Hurwitz test for a polynomial with positive leading coeff."""
    a = np.asarray(coeffs, dtype=float)
    n = a.size - 1
    if n == 0:
        return True
    a = a / a[0]
    # balance: substitute s -> sigma*s so coefficient magnitudes stay tame
    mags = [abs(a[k]) ** (1.0 / k) for k in range(1, n + 1) if a[k] != 0.0]
    sigma = max(mags) if mags else 1.0
    if sigma <= 0.0 or not np.isfinite(sigma):
        sigma = 1.0
    a = np.array([a[k] / sigma**k for k in range(n + 1)])
    if np.any(a <= 0.0):
        # a necessary condition for Hurwitz stability
        return False
    h = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            k = 2 * (j + 1) - (i + 1)
            if 0 <= k <= n:
                h[i, j] = a[k]
    for k in range(1, n + 1):
        if np.linalg.det(h[:k, :k]) <= 0.0:
            return False
    return True


def is_hurwitz(m: np.ndarray, margin: float = 0.0) -> bool:
    """True iff every eigenvalue of ``m`` has real part below ``-margin``.

    Decided by the Hurwitz-minor criterion applied to the characteristic
    polynomial of ``m + margin*I``.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"square matrix required, got {m.shape}")
    if m.shape[0] > _MAX_DIM:
        raise DimensionMismatch(f"dimension {m.shape[0]} exceeds limit {_MAX_DIM}")
    if not np.all(np.isfinite(m)) or not np.isfinite(margin):
        raise DimensionMismatch("non-finite entries")
    shifted = m + margin * np.eye(m.shape[0])
    return _hurwitz_minors_positive(characteristic_polynomial(shifted))


def hurwitz_margin(m: np.ndarray, upper: float | None = None, iters: int = 60) -> float:
    """Largest ``mu`` with ``is_hurwitz(m, mu)`` true, found by bisection.

    Returns 0.0 for matrices that are not strictly stable at margin 0.
    """
    m = np.asarray(m, dtype=float)
    if not is_hurwitz(m, 0.0):
        return 0.0
    if upper is None:
        upper = float(np.abs(m).sum(axis=1).max()) + 1.0
    lo, hi = 0.0, upper
    if is_hurwitz(m, hi):
        return hi
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if is_hurwitz(m, mid):
            lo = mid
        else:
            hi = mid
    return lo


def left_inverse(m: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Left inverse V with V @ m = I for a tall full-column-rank matrix.

    Rank is judged from the singular values against ``tol`` times the
    largest column norm; failure raises :class:`RankDeficient`.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] < m.shape[1]:
        raise DimensionMismatch(f"tall matrix required, got {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DimensionMismatch("non-finite entries")
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    scale = float(np.linalg.norm(m, axis=0).max())
    if scale == 0.0 or s[-1] <= tol * scale:
        raise RankDeficient(
            f"smallest singular value {s[-1] if scale else 0.0:.3e} below "
            f"tolerance {tol:.1e} * {scale:.3e}"
        )
    return (vt.T / s) @ u.T
