"""Small dense linear-algebra kernel: factorization, solves and matrix norms.

Matrices are plain two-dimensional float64 numpy arrays.  Every public
function validates its input through :func:`as_matrix`, which rejects
non-finite entries.
"""
import numpy as np
from scipy import linalg as sla

from .errors import (ConvergenceFailure, NotPositiveDefinite, ShapeMismatch,
                     UnsupportedOrder)

SYMMETRY_RTOL = 1e-12
PIVOT_RTOL = 1e-14


def as_matrix(A, name="matrix"):
    """Return ``A`` as a finite, nonempty 2-d float64 array.

    One-dimensional input is read as a single column.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim == 1:
        A = A[:, None]
    if A.ndim != 2:
        raise ShapeMismatch(f"{name} must be 2-dimensional, got ndim={A.ndim}")
    if A.size == 0:
        raise ShapeMismatch(f"{name} must be nonempty, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} has non-finite entries")
    return A


def _check_square_symmetric(A):
    A = as_matrix(A)
    if A.shape[0] != A.shape[1]:
        raise ShapeMismatch(f"expected a square matrix, got {A.shape}")
    scale = np.max(np.abs(A))
    if np.max(np.abs(A - A.T)) > SYMMETRY_RTOL * scale:
        raise NotPositiveDefinite("matrix is not symmetric")
    return 0.5 * (A + A.T)


def cholesky(A):
    """Lower-triangular ``L`` with ``A = L @ L.T``.

    Raises
    ------
    NotPositiveDefinite
        If ``A`` is not symmetric or a pivot falls below ``1e-14`` times the
        largest diagonal entry.
    """
    A = _check_square_symmetric(A)
    maxdiag = np.max(np.diag(A))
    if maxdiag <= 0:
        raise NotPositiveDefinite("largest diagonal entry is not positive")
    try:
        L = np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    pivots = np.diag(L) ** 2
    if np.min(pivots) <= PIVOT_RTOL * maxdiag:
        raise NotPositiveDefinite(
            f"pivot {np.min(pivots):.3e} below {PIVOT_RTOL:g} * max diagonal")
    return L


def solve_spd(A, B, L=None):
    """Solve ``A X = B`` for symmetric positive-definite ``A``.

    ``L`` may be passed to reuse an existing Cholesky factor of ``A``.
    """
    B = np.asarray(B, dtype=np.float64)
    vector = B.ndim == 1
    B = as_matrix(B, "B")
    if L is None:
        L = cholesky(A)
    if B.shape[0] != L.shape[0]:
        raise ShapeMismatch(
            f"right-hand side has {B.shape[0]} rows, expected {L.shape[0]}")
    X = sla.cho_solve((L, True), B, check_finite=False)
    return X[:, 0] if vector else X


def _power_on_gram(G, v0, tol, max_iter):
    # Power iteration v_k = G^(2^k) v0 by repeated squaring; the eigenvalue
    # estimate is always the Rayleigh quotient against G itself.
    P = G.copy()
    lam_prev = None
    lam = 0.0
    for _ in range(max_iter):
        v = P @ v0
        nv = np.linalg.norm(v)
        if nv == 0.0:
            return 0.0, True
        v /= nv
        lam = float(v @ G @ v)
        if lam_prev is not None and abs(lam - lam_prev) <= tol * max(abs(lam), 1e-300):
            return lam, True
        lam_prev = lam
        P = P @ P
        scale = np.max(np.abs(P))
        if scale == 0.0:
            return lam, True
        P /= scale
    return lam, False


def spectral_norm(A, tol=1e-10, max_iter=10_000, seed=0):
    """Largest singular value of ``A`` by power iteration on its Gram matrix.

    Two starts are run, the normalized all-ones vector and one seeded random
    unit vector, and the larger Rayleigh quotient wins.
    """
    A = as_matrix(A)
    G = A.T @ A if A.shape[1] <= A.shape[0] else A @ A.T
    G = 0.5 * (G + G.T)
    scale = np.max(np.abs(G))
    if scale == 0.0:
        return 0.0
    G = G / scale
    m = G.shape[0]
    starts = [np.full(m, 1.0 / np.sqrt(m))]
    r = np.random.default_rng(seed).standard_normal(m)
    starts.append(r / np.linalg.norm(r))
    best, ok_all = 0.0, True
    for v0 in starts:
        lam, ok = _power_on_gram(G, v0, tol, max_iter)
        ok_all &= ok
        best = max(best, lam)
    value = float(np.sqrt(max(best, 0.0) * scale))
    if not ok_all:
        raise ConvergenceFailure(
            f"power iteration did not reach rtol={tol:g} in {max_iter} steps", value)
    return value


def _order(x):
    if isinstance(x, str):
        x = x.strip().lower()
        if x in ("inf", "infinity", "∞"):
            return np.inf
        x = float(x)
    return np.inf if np.isinf(x) else float(x)


def block_norm(A, a, b):
    r"""The :math:`\ell_a/\ell_b` block norm over rows of ``A``.

    The inner :math:`\ell_b` norm is taken along each row and the outer
    :math:`\ell_a` norm over the resulting row norms.  Supported orders are
    ``a`` in {1, inf} and ``b`` in {1, 2, inf}.
    """
    a, b = _order(a), _order(b)
    if a not in (1.0, np.inf) or b not in (1.0, 2.0, np.inf):
        raise UnsupportedOrder(f"unsupported block norm order ({a}, {b})")
    A = as_matrix(A)
    rows = np.linalg.norm(A, ord=b, axis=1)
    return float(np.max(rows) if a == np.inf else np.sum(rows))


def row_norms(A):
    return np.linalg.norm(as_matrix(A), axis=1)


def linf_operator_norm(A):
    """Maximum absolute row sum."""
    return float(np.max(np.sum(np.abs(as_matrix(A)), axis=1)))
