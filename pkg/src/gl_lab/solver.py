r"""Block-regularized multivariate least squares.

Solves

.. math::

    \min_B \; \frac{1}{2n} \|Y - XB\|_F^2 + \lambda \sum_i \|\beta_i\|_2

by cyclic block coordinate descent started from ``B = 0``, and certifies the
result through the KKT conditions of the program.
"""
from dataclasses import dataclass, field, replace

import numpy as np

from ._bcd import bcd_gram
from .errors import IllConditioned, NotConverged, ShapeMismatch
from .linalg import as_matrix, block_norm
from .theory import SupportSet

KKT_TOL = 1e-7
MAX_CONDITION = 1e12


@dataclass(frozen=True)
class SolverConfig:
    lam: float
    max_iter: int = 50_000
    tol: float = 1e-9
    zero_tol: float = 1e-10

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.zero_tol < 0:
            raise ValueError("zero_tol must be nonnegative")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass
class Solution:
    B_hat: np.ndarray
    iterations: int
    converged: bool
    objective: float
    kkt_max_violation: float
    support: SupportSet
    objective_trace: np.ndarray = field(repr=False)


@dataclass
class KKTReport:
    max_violation: float
    dual_feasibility_gap: float
    Z_hat: np.ndarray


def _config(cfg):
    return cfg if isinstance(cfg, SolverConfig) else SolverConfig(lam=float(cfg))


def _check_xy(X, Y):
    X = as_matrix(X, "X")
    Y = as_matrix(Y, "Y")
    if Y.shape[0] != X.shape[0]:
        raise ShapeMismatch(f"X has {X.shape[0]} rows but Y has {Y.shape[0]}")
    return X, Y


def objective(X, Y, B, lam):
    X, Y = _check_xy(X, Y)
    R = Y - X @ as_matrix(B, "B")
    return float(0.5 * np.sum(R * R) / X.shape[0] + lam * block_norm(B, 1, 2))


def support(B, zero_tol=1e-10):
    """Rows of ``B`` whose l2 norm exceeds ``zero_tol``."""
    B = as_matrix(B, "B")
    rows = np.flatnonzero(np.linalg.norm(B, axis=1) > zero_tol)
    return SupportSet(tuple(int(i) for i in rows), B.shape[0])


def kkt_residual(X, Y, B_hat, lam):
    """Violation of the optimality conditions at ``B_hat``.

    Active rows must satisfy ``G_i + lam * b_i / ||b_i|| = 0`` where
    ``G = X^T (X B_hat - Y) / n``.  Inactive rows get the dual certificate
    ``z_j = -G_j / lam`` and violate only when ``||z_j|| > 1``.
    ``dual_feasibility_gap`` is ``1 - max ||z_j||`` over inactive rows (1 when
    every row is active).
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    X, Y = _check_xy(X, Y)
    B_hat = as_matrix(B_hat, "B_hat")
    n = X.shape[0]
    G = X.T @ (X @ B_hat - Y) / n
    norms = np.linalg.norm(B_hat, axis=1)
    on = norms > 0
    Z = -G / lam
    Z[on] = B_hat[on] / norms[on, None]
    viol = np.zeros(B_hat.shape[0])
    viol[on] = np.linalg.norm(G[on] + lam * Z[on], axis=1)
    off_norms = np.linalg.norm(Z[~on], axis=1)
    viol[~on] = np.maximum(0.0, off_norms - 1.0)
    gap = 1.0 - float(off_norms.max()) if off_norms.size else 1.0
    return KKTReport(max_violation=float(viol.max()), dual_feasibility_gap=gap, Z_hat=Z)


def _solve(X, Y, cfg, init=None):
    X, Y = _check_xy(X, Y)
    n, p = X.shape
    G = X.T @ X / n
    C = X.T @ Y / n
    yy = float(np.sum(Y * Y) / n)
    B = np.zeros((p, Y.shape[1])) if init is None else np.array(init, dtype=np.float64)
    trace = np.empty(cfg.max_iter + 1)
    tol, used, pieces = cfg.tol, 0, []
    converged = False
    kkt = None
    while used < cfg.max_iter:
        sweeps, done = bcd_gram(G, C, B, yy, cfg.lam, tol, cfg.max_iter - used, trace)
        pieces.append(trace[: sweeps + 1].copy() if not pieces else trace[1: sweeps + 1].copy())
        used += sweeps
        if not done:
            break
        kkt = kkt_residual(X, Y, B, cfg.lam).max_violation if cfg.lam > 0 else 0.0
        if kkt <= KKT_TOL:
            converged = True
            break
        # block changes below tol but stationarity still off: tighten and resume
        tol *= 1e-2
        if tol < 1e-15:
            break
    if kkt is None:
        kkt = kkt_residual(X, Y, B, cfg.lam).max_violation if cfg.lam > 0 else float("nan")
    sol = Solution(B_hat=B, iterations=used, converged=converged,
                   objective=objective(X, Y, B, cfg.lam), kkt_max_violation=kkt,
                   support=support(B, cfg.zero_tol),
                   objective_trace=np.concatenate(pieces) if pieces else trace[:1].copy())
    return sol


def group_lasso(X, Y, cfg):
    """Minimize the l1/l2 block-regularized least-squares objective.

    Parameters
    ----------
    X : array of shape (n, p)
    Y : array of shape (n, K) or (n,)
    cfg : SolverConfig or float
        A bare float is taken as the regularization weight.

    Raises
    ------
    NotConverged
        With the best iterate in ``err.solution``.
    """
    cfg = _config(cfg)
    sol = _solve(X, Y, cfg)
    if not sol.converged:
        raise NotConverged(
            f"no convergence after {sol.iterations} sweeps "
            f"(kkt violation {sol.kkt_max_violation:.3e})", sol)
    return sol


def restricted_group_lasso(X_S, Y, cfg, init=None):
    """Solve the program over the columns ``X_S`` only; returns ``B_S``.

    Requires ``s < n`` and a well-conditioned ``X_S^T X_S / n``, which makes
    the minimizer unique.
    """
    cfg = _config(cfg)
    X_S, Y = _check_xy(X_S, Y)
    n, s = X_S.shape
    if s >= n:
        raise IllConditioned(f"restricted problem needs s < n, got s={s}, n={n}")
    cond = np.linalg.cond(X_S.T @ X_S / n)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise IllConditioned(f"empirical support covariance has condition {cond:.3e}")
    sol = _solve(X_S, Y, cfg, init=init)
    if not sol.converged:
        raise NotConverged(f"restricted solve did not converge in {sol.iterations} sweeps", sol)
    return sol.B_hat


def lasso_union_rows(X, Y, cfg):
    """Union of the supports of separate single-task Lasso fits."""
    cfg = _config(cfg)
    X, Y = _check_xy(X, Y)
    rows = set()
    for k in range(Y.shape[1]):
        rows.update(group_lasso(X, Y[:, k:k + 1], cfg).support.indices)
    return SupportSet(tuple(sorted(rows)), X.shape[1])


def zero_solution_threshold(X, Y):
    """Smallest lambda for which ``B = 0`` is optimal."""
    X, Y = _check_xy(X, Y)
    return block_norm(X.T @ Y / X.shape[0], np.inf, 2)


def with_lambda(cfg, lam):
    return replace(_config(cfg), lam=lam)
