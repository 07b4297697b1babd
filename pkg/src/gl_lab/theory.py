"""Closed-form quantities governing row-selection sample complexity.

All logarithms are natural logarithms and all angles are in radians.
"""
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateLogArgument, EmptyColumnSupport, ShapeMismatch, ZeroRow
from .linalg import as_matrix, row_norms, solve_spd, spectral_norm

ZERO_TOL = 1e-12
# trig values at multiples of pi/2 come out as ~6e-17 rather than 0
_TRIG_ZERO_TOL = 1e-12


@dataclass(frozen=True)
class SupportSet:
    """Sorted row indices into ``range(ambient_p)``."""

    indices: tuple
    ambient_p: int

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if self.ambient_p < 1:
            raise ValueError("ambient_p must be positive")
        if any(j <= i for i, j in zip(idx, idx[1:])):
            raise ValueError("support indices must be strictly increasing")
        if idx and (idx[0] < 0 or idx[-1] >= self.ambient_p):
            raise ValueError(f"support indices must lie in [0, {self.ambient_p})")
        object.__setattr__(self, "indices", idx)

    @classmethod
    def from_iterable(cls, indices, ambient_p):
        return cls(tuple(sorted(set(int(i) for i in indices))), ambient_p)

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def __contains__(self, i):
        return i in self.indices

    def complement(self):
        inside = set(self.indices)
        return SupportSet(tuple(i for i in range(self.ambient_p) if i not in inside),
                          self.ambient_p)

    def as_array(self):
        return np.asarray(self.indices, dtype=np.intp)


@dataclass(frozen=True)
class TheoryReport:
    psi: float
    theta: float | None
    psi_lower: float
    psi_upper: float
    bmin: float


@dataclass(frozen=True)
class TwoByTwoOverlap:
    psi_group: float
    psi_col1: float
    psi_col2: float
    mu_plus: float
    mu_minus: float


def zeta(B_S, zero_tol=ZERO_TOL):
    """Normalize each row of ``B_S`` to unit l2 norm.

    For a single column this is the sign vector of the entries.
    """
    B_S = as_matrix(B_S, "B_S")
    norms = row_norms(B_S)
    bad = np.flatnonzero(norms <= zero_tol)
    if bad.size:
        raise ZeroRow(int(bad[0]))
    return B_S / norms[:, None]


def sparsity_overlap(B_S, Sigma_SS):
    """Spectral norm of ``zeta(B_S).T @ inv(Sigma_SS) @ zeta(B_S)``."""
    Z = zeta(B_S)
    Sigma_SS = as_matrix(Sigma_SS, "Sigma_SS")
    if Sigma_SS.shape != (Z.shape[0], Z.shape[0]):
        raise ShapeMismatch(
            f"Sigma_SS has shape {Sigma_SS.shape}, expected {(Z.shape[0],) * 2}")
    M = Z.T @ solve_spd(Sigma_SS, Z)
    return spectral_norm(0.5 * (M + M.T))


def sample_complexity_theta(n, p, s, psi):
    """Rescaled sample size ``n / (2 psi log(p - s))``."""
    if p - s < 2:
        raise DegenerateLogArgument(f"log(p - s) needs p - s >= 2, got p={p}, s={s}")
    if psi <= 0:
        raise ValueError("psi must be positive")
    return n / (2.0 * psi * math.log(p - s))


def psi_bounds(s, K, Cmin, Cmax):
    if min(s, K, Cmin, Cmax) <= 0 or Cmin > Cmax:
        raise ValueError("need positive arguments with Cmin <= Cmax")
    return s / (Cmax * K), s / Cmin


def _sign(x):
    return 0.0 if abs(x) <= _TRIG_ZERO_TOL else math.copysign(1.0, x)


def psi_two_by_two(theta1, theta2, rho):
    """Overlap values for two unit rows at angles ``theta1``, ``theta2``.

    The inverse support covariance is ``[[1, rho], [rho, 1]]``.  Returns the
    eigenvalues of the overlap matrix and the per-column (ordinary Lasso)
    values, using sign(0) = 0 for entries that vanish.
    """
    if not -1.0 < rho < 1.0:
        raise ValueError("rho must lie in (-1, 1)")
    c = math.cos(theta1 - theta2)
    mu_plus = (1.0 + rho) * (1.0 + c)
    mu_minus = (1.0 - rho) * (1.0 - c)

    def column(f):
        a, b = _sign(f(theta1)), _sign(f(theta2))
        return abs(a) + abs(b) + 2.0 * rho * a * b

    return TwoByTwoOverlap(psi_group=max(mu_plus, mu_minus),
                           psi_col1=column(math.cos), psi_col2=column(math.sin),
                           mu_plus=mu_plus, mu_minus=mu_minus)


def column_supports(B, zero_tol=ZERO_TOL):
    B = as_matrix(B, "B")
    return [np.flatnonzero(np.abs(B[:, k]) > zero_tol) for k in range(B.shape[1])]


def column_overlaps(B, Sigma, zero_tol=ZERO_TOL, on_union=False):
    """Single-task overlap value of every column of ``B``.

    By default column ``k`` is measured on its own support ``S_k`` against
    ``inv(Sigma[S_k, S_k])``.  With ``on_union=True`` the rows of ``B`` are
    taken as the union support and column ``k`` contributes
    ``sign(b_k)^T inv(Sigma) sign(b_k)`` with sign(0) = 0.
    """
    B = as_matrix(B, "B")
    Sigma = as_matrix(Sigma, "Sigma")
    out = []
    if on_union:
        for k in range(B.shape[1]):
            z = np.where(np.abs(B[:, k]) > zero_tol, np.sign(B[:, k]), 0.0)
            if not z.any():
                raise EmptyColumnSupport(k)
            out.append(float(z @ solve_spd(Sigma, z)))
        return out
    for k, Sk in enumerate(column_supports(B, zero_tol)):
        if Sk.size == 0:
            raise EmptyColumnSupport(k)
        out.append(sparsity_overlap(B[Sk, k:k + 1], Sigma[np.ix_(Sk, Sk)]))
    return out


def ordinary_lasso_complexity(B, Sigma, p=None, zero_tol=ZERO_TOL):
    """``max_k psi(beta_k) log(p - s_k)`` for the per-column Lasso strategy.

    The leading constant of the sufficient condition is deliberately left out;
    only ratios against the group complexity are meaningful.
    """
    B = as_matrix(B, "B")
    p = B.shape[0] if p is None else p
    psis = column_overlaps(B, Sigma, zero_tol)
    best = -math.inf
    for psi_k, Sk in zip(psis, column_supports(B, zero_tol)):
        if p - Sk.size < 2:
            raise DegenerateLogArgument(f"p - s_k = {p - Sk.size} < 2")
        best = max(best, psi_k * math.log(p - Sk.size))
    return best


def bmin(B_S):
    """Smallest l2 row norm."""
    return float(np.min(row_norms(B_S)))
