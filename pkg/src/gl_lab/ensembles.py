"""Random problem ensembles: coefficient families, Gaussian designs and noise."""
import math
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .errors import BadFamilyShape, ShapeMismatch
from .linalg import as_matrix, cholesky, linf_operator_norm, solve_spd, spectral_norm
from .theory import SupportSet

FAMILIES = ("identical", "orthonormal", "intermediate", "b1_alpha", "custom")
PLACEMENTS = ("first_s", "random")

_R2 = 1.0 / math.sqrt(2.0)
# length-4 patterns for the second column; the first column is always all ones
_SECOND_COLUMN = {
    "identical": (1.0, 1.0, 1.0, 1.0),
    "orthonormal": (1.0, -1.0, 1.0, -1.0),
    "intermediate": (1.0, 1.0, 1.0, -1.0),
}


@dataclass(frozen=True, eq=False)
class EnsembleSpec:
    """Recipe for one regression ensemble.

    ``covariance`` is ``None`` for the standard Gaussian design, or an explicit
    p x p covariance.  ``B_S`` is required for the ``custom`` family only.
    """

    p: int
    s: int
    K: int = 2
    sigma: float = 0.1
    family: str = "identical"
    alpha: float | None = None
    B_S: np.ndarray | None = field(default=None, repr=False)
    covariance: np.ndarray | None = field(default=None, repr=False)
    support_placement: str = "first_s"
    placement_seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise BadFamilyShape(f"unknown family {self.family!r}")
        if self.support_placement not in PLACEMENTS:
            raise ValueError(f"unknown support placement {self.support_placement!r}")
        if not 1 <= self.s <= self.p:
            raise BadFamilyShape(f"need 1 <= s <= p, got s={self.s}, p={self.p}")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if self.family in ("identical", "orthonormal", "intermediate"):
            if self.K != 2 or self.s % 4:
                raise BadFamilyShape(
                    f"family {self.family!r} needs K=2 and s divisible by 4")
        elif self.family == "b1_alpha":
            if self.K != 2 or self.s % 2:
                raise BadFamilyShape("family 'b1_alpha' needs K=2 and even s")
            if self.alpha is None:
                raise BadFamilyShape("family 'b1_alpha' needs alpha")
        else:
            if self.B_S is None:
                raise BadFamilyShape("family 'custom' needs B_S")
            B_S = as_matrix(self.B_S, "B_S")
            if B_S.shape != (self.s, self.K):
                raise BadFamilyShape(f"B_S has shape {B_S.shape}, expected {(self.s, self.K)}")
        if self.covariance is not None:
            cov = as_matrix(self.covariance, "covariance")
            if cov.shape != (self.p, self.p):
                raise ShapeMismatch(f"covariance must be {self.p} x {self.p}")

    @property
    def Sigma(self):
        return np.eye(self.p) if self.covariance is None else as_matrix(self.covariance)


@dataclass(frozen=True)
class AssumptionReport:
    cmin: float
    cmax: float
    incoherence_gamma: float
    dmax: float
    a1_ok: bool
    a2_ok: bool
    a3_ok: bool


def support_rows(spec):
    if spec.support_placement == "first_s":
        return SupportSet(tuple(range(spec.s)), spec.p)
    g = rng.stream(spec.placement_seed, "support")
    return SupportSet.from_iterable(g.choice(spec.p, size=spec.s, replace=False), spec.p)


def b1_block(alpha):
    """The 2 x 2 base block whose rows are at angle ``alpha``."""
    return np.array([[_R2, _R2],
                     [math.cos(math.pi / 4 + alpha), math.sin(math.pi / 4 + alpha)]])


def family_rows(spec):
    """The s x K nonzero block of the coefficient matrix, in support order."""
    s = spec.s
    if spec.family in _SECOND_COLUMN:
        col2 = np.tile(_SECOND_COLUMN[spec.family], s // 4)
        return _R2 * np.column_stack([np.ones(s), col2])
    if spec.family == "b1_alpha":
        return np.tile(b1_block(spec.alpha), (s // 2, 1))
    return as_matrix(spec.B_S).copy()


def make_coefficients(spec):
    """Return ``(Bstar, S)`` with ``Bstar`` zero outside the support ``S``."""
    S = support_rows(spec)
    B = np.zeros((spec.p, spec.K))
    B[S.as_array()] = family_rows(spec)
    return B, S


def sample_design(n, Sigma, seed):
    """n x p matrix ``G @ L.T`` with ``G`` standard normal and ``L L^T = Sigma``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    Sigma = as_matrix(Sigma, "Sigma")
    L = cholesky(Sigma)
    G = rng.stream(seed, "design").standard_normal((n, Sigma.shape[0]))
    return G @ L.T


def sample_standard_design(n, p, seed):
    """Design with i.i.d. N(0, 1) entries; equal to ``sample_design(n, I, seed)``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return rng.stream(seed, "design").standard_normal((n, p))


def draw_design(spec, n, seed):
    if spec.covariance is None:
        return sample_standard_design(n, spec.p, seed)
    return sample_design(n, spec.covariance, seed)


def sample_noise(n, K, sigma, seed):
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    return sigma * rng.stream(seed, "noise").standard_normal((n, K))


def assemble_observations(X, Bstar, W):
    X, Bstar, W = (as_matrix(A, name) for A, name in ((X, "X"), (Bstar, "Bstar"), (W, "W")))
    if X.shape[1] != Bstar.shape[0] or W.shape != (X.shape[0], Bstar.shape[1]):
        raise ShapeMismatch(
            f"incompatible shapes X{X.shape}, Bstar{Bstar.shape}, W{W.shape}")
    return X @ Bstar + W


def toeplitz_covariance(p, rho):
    """Covariance with entries ``rho ** |i - j|``."""
    idx = np.arange(p)
    return rho ** np.abs(idx[:, None] - idx[None, :]).astype(float)


def check_assumptions(Sigma, S):
    """Evaluate eigenvalue bounds, mutual incoherence and self-incoherence."""
    Sigma = as_matrix(Sigma, "Sigma")
    cholesky(Sigma)
    rows = S.as_array()
    if rows.size == 0 or rows.size == Sigma.shape[0]:
        raise ValueError("support must be nonempty and proper")
    out = S.complement().as_array()
    Sigma_SS = Sigma[np.ix_(rows, rows)]
    L = cholesky(Sigma_SS)
    inv_SS = solve_spd(Sigma_SS, np.eye(rows.size), L=L)
    inv_SS = 0.5 * (inv_SS + inv_SS.T)
    cmax = spectral_norm(Sigma_SS)
    cmin = min(1.0 / spectral_norm(inv_SS), cmax)
    gamma = min(1.0, 1.0 - linf_operator_norm(Sigma[np.ix_(out, rows)] @ inv_SS))
    dmax = linf_operator_norm(inv_SS)
    return AssumptionReport(
        cmin=cmin, cmax=cmax, incoherence_gamma=gamma, dmax=dmax,
        a1_ok=bool(0.0 < cmin <= cmax < math.inf),
        a2_ok=bool(0.0 < gamma <= 1.0),
        a3_ok=bool(math.isfinite(dmax)))
