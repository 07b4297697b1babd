"""Monte Carlo support-recovery experiments.

The control parameter is ``theta = n / (2 s log(p - s))``; for a family with
overlap ``psi`` the recovery threshold sits near ``theta = psi / s``.
"""
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import isotonic_regression

from . import rng
from .ensembles import EnsembleSpec, draw_design, make_coefficients, sample_noise
from .errors import DegenerateLogArgument, GLLabError, NoCrossing
from .linalg import spectral_norm
from .solver import SolverConfig, group_lasso, lasso_union_rows

log = logging.getLogger(__name__)

METHODS = ("group_l12", "lasso_union")
LAMBDA_RULES = ("paper_sim", "theorem", "fixed")


@dataclass(frozen=True)
class LambdaRule:
    """``paper_sim``: sqrt(log(p - s) log(s) / n).
    ``theorem``: sqrt(log(p)^2 / n), i.e. f(p) = log p.
    ``fixed``: a constant ``value``.
    """

    kind: str = "paper_sim"
    value: float | None = None

    def __post_init__(self):
        if self.kind not in LAMBDA_RULES:
            raise ValueError(f"unknown lambda rule {self.kind!r}")
        if self.kind == "fixed" and (self.value is None or self.value < 0):
            raise ValueError("fixed lambda rule needs a nonnegative value")

    @classmethod
    def parse(cls, text):
        """Accept ``paper_sim``, ``theorem``, ``fixed(0.5)`` or a bare number."""
        if isinstance(text, LambdaRule):
            return text
        if isinstance(text, (int, float)):
            return cls("fixed", float(text))
        t = str(text).strip()
        if t.startswith("fixed(") and t.endswith(")"):
            return cls("fixed", float(t[6:-1]))
        try:
            return cls("fixed", float(t))
        except ValueError:
            return cls(t)

    def __str__(self):
        return f"fixed({self.value!r})" if self.kind == "fixed" else self.kind


def lambda_from_rule(rule, n, p, s):
    rule = LambdaRule.parse(rule)
    if rule.kind == "fixed":
        return rule.value
    if n < 1:
        raise ValueError("n must be at least 1")
    if rule.kind == "paper_sim":
        if p - s < 2 or s < 2:
            raise DegenerateLogArgument(f"paper_sim rule needs p - s >= 2 and s >= 2 (p={p}, s={s})")
        return math.sqrt(math.log(p - s) * math.log(s) / n)
    if p < 2:
        raise DegenerateLogArgument("theorem rule needs p >= 2")
    return math.sqrt(math.log(p) * math.log(p) / n)


def sample_size(theta, p, s):
    """``round(2 theta s log(p - s))``, halves rounded up, at least 1."""
    if p - s < 2:
        raise DegenerateLogArgument(f"need p - s >= 2, got p={p}, s={s}")
    return max(1, int(math.floor(2.0 * theta * s * math.log(p - s) + 0.5)))


@dataclass
class TrialOutcome:
    success: bool
    n: int
    lam: float
    iterations: int
    failure: str | None = None


def run_trial(spec, theta, lambda_rule, method, seed, cfg=None):
    """One draw of (X, W) at ``n = sample_size(theta)``; success iff the
    recovered row support equals the true support exactly."""
    if theta <= 0:
        raise ValueError("theta must be positive")
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    n = sample_size(theta, spec.p, spec.s)
    lam = lambda_from_rule(lambda_rule, n, spec.p, spec.s)
    Bstar, S = make_coefficients(spec)
    X = draw_design(spec, n, seed)
    Y = X @ Bstar + sample_noise(n, spec.K, spec.sigma, seed)
    base = SolverConfig(lam=lam) if cfg is None else SolverConfig(
        lam=lam, max_iter=cfg.max_iter, tol=cfg.tol, zero_tol=cfg.zero_tol)
    try:
        if method == "group_l12":
            sol = group_lasso(X, Y, base)
            est, iters = sol.support, sol.iterations
        else:
            est, iters = lasso_union_rows(X, Y, base), 0
    except GLLabError as exc:
        return TrialOutcome(False, n, lam, getattr(getattr(exc, "solution", None),
                                                   "iterations", 0),
                            failure=type(exc).__name__)
    return TrialOutcome(est.indices == S.indices, n, lam, iters)


@dataclass(frozen=True, eq=False)
class SweepSpec:
    ensemble: EnsembleSpec
    theta_grid: tuple
    trials: int = 200
    base_seed: int = 0
    lambda_rule: LambdaRule = LambdaRule()
    method: str = "group_l12"

    def __post_init__(self):
        grid = tuple(float(t) for t in self.theta_grid)
        if not grid:
            raise ValueError("theta_grid must be nonempty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("theta_grid must be strictly increasing")
        if grid[0] <= 0:
            raise ValueError("theta values must be positive")
        if self.trials < 1:
            raise ValueError("trials must be ≥ 1")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        object.__setattr__(self, "theta_grid", grid)
        object.__setattr__(self, "lambda_rule", LambdaRule.parse(self.lambda_rule))


@dataclass
class SweepPoint:
    theta: float
    n: int
    successes: int
    trials: int
    success_rate: float
    solver_failures: int = 0


@dataclass
class SweepResult:
    points: list
    spec_echo: SweepSpec = field(repr=False)
    theta50: float | None = None


def trial_seed(base_seed, grid_index, trial_index):
    return rng.mix_seed(base_seed, grid_index, trial_index)


def resolve_threads(threads=None):
    """``threads`` if given and positive, else ``GL_LAB_THREADS``, else CPU count."""
    if threads is None:
        threads = int(os.environ.get("GL_LAB_THREADS", "1"))
    if threads <= 0:
        threads = os.cpu_count() or 1
    return threads


def sweep_theta(spec, threads=1):
    """Success rate at every grid point; independent of scheduling."""
    threads = resolve_threads(threads)
    points = []
    pool = ThreadPoolExecutor(threads) if threads > 1 else None
    try:
        for gi, theta in enumerate(spec.theta_grid):
            seeds = [trial_seed(spec.base_seed, gi, t) for t in range(spec.trials)]

            def one(seed, theta=theta):
                return run_trial(spec.ensemble, theta, spec.lambda_rule, spec.method, seed)

            outcomes = list(pool.map(one, seeds)) if pool else [one(sd) for sd in seeds]
            wins = sum(o.success for o in outcomes)
            fails = sum(o.failure is not None for o in outcomes)
            points.append(SweepPoint(theta=theta, n=outcomes[0].n, successes=wins,
                                     trials=spec.trials, success_rate=wins / spec.trials,
                                     solver_failures=fails))
            log.info("theta=%.4g n=%d success=%d/%d failures=%d", theta,
                     outcomes[0].n, wins, spec.trials, fails)
    finally:
        if pool:
            pool.shutdown()
    result = SweepResult(points=points, spec_echo=spec)
    try:
        result.theta50 = estimate_theta50(result)
    except NoCrossing:
        result.theta50 = None
    return result


def estimate_theta50(result):
    """Where the monotonized success curve first reaches 0.5.

    Success rates are pooled into a nondecreasing curve (weighted by trial
    counts) and interpolated linearly between the bracketing grid points.
    Accepts a :class:`SweepResult` or a sequence of ``(theta, rate)`` pairs.
    """
    if isinstance(result, SweepResult):
        theta = np.array([pt.theta for pt in result.points], dtype=float)
        rate = np.array([pt.success_rate for pt in result.points], dtype=float)
        weights = np.array([pt.trials for pt in result.points], dtype=float)
    else:
        pairs = np.asarray(result, dtype=float)
        theta, rate = pairs[:, 0], pairs[:, 1]
        weights = np.ones_like(rate)
    mono = isotonic_regression(rate, weights=weights, increasing=True).x
    hits = np.flatnonzero(mono >= 0.5)
    if hits.size == 0:
        raise NoCrossing("success curve stays below 0.5")
    i = int(hits[0])
    if i == 0:
        if mono[0] == 0.5:
            return float(theta[0])
        raise NoCrossing("success curve starts above 0.5")
    lo, hi = mono[i - 1], mono[i]
    return float(theta[i - 1] + (0.5 - lo) / (hi - lo) * (theta[i] - theta[i - 1]))


@dataclass
class TailCheck:
    empirical_rate: float
    bound: float
    ok: bool


def chi2_max_tail_bound(m, d, t):
    """``m exp(-t (1 - 2 sqrt(d / t)))`` bounding P[max of m chi2_d >= 2t]."""
    if t <= d:
        raise ValueError("need t > d")
    return m * math.exp(-t * (1.0 - 2.0 * math.sqrt(d / t)))


def chi2_tail_check(m, d, t, trials, seed):
    bound = chi2_max_tail_bound(m, d, t)
    draws = rng.stream(seed, "chi2").chisquare(d, size=(trials, m))
    rate = float(np.mean(draws.max(axis=1) >= 2.0 * t))
    slack = 3.0 * math.sqrt(bound / trials) + 0.01
    return TailCheck(empirical_rate=rate, bound=bound, ok=bool(rate <= min(1.0, bound) + slack))


@dataclass
class ConcentrationCheck:
    rate: float
    radius: float
    deviations: np.ndarray = field(repr=False)


def gaussian_gram_concentration(n, s, trials, seed, radius=None):
    """Fraction of trials with ``||U^T U / n - I||_2 <= radius`` for standard
    Gaussian ``U`` of shape (n, s); ``radius`` defaults to ``sqrt(s / n)``."""
    radius = math.sqrt(s / n) if radius is None else radius
    dev = np.empty(trials)
    for t in range(trials):
        U = rng.stream(seed, "gram", t).standard_normal((n, s))
        dev[t] = spectral_norm(U.T @ U / n - np.eye(s))
    return ConcentrationCheck(rate=float(np.mean(dev <= radius)), radius=radius, deviations=dev)


@dataclass
class AlphaPoint:
    alpha: float
    cos_alpha: float
    theta50_group: float | None
    theta50_lasso: float | None


def theta50_scan(p, s, alphas, theta_grid, trials, base_seed=0, sigma=0.1,
                 lambda_rule="paper_sim", methods=METHODS, threads=1):
    """Estimated 50% threshold for each angle of the two-row base family."""
    out = []
    for ai, alpha in enumerate(alphas):
        est = {}
        for method in METHODS:
            if method not in methods:
                est[method] = None
                continue
            ens = EnsembleSpec(p=p, s=s, K=2, sigma=sigma, family="b1_alpha", alpha=float(alpha))
            sweep = SweepSpec(ensemble=ens, theta_grid=tuple(theta_grid), trials=trials,
                              base_seed=rng.mix_seed(base_seed, ai), lambda_rule=lambda_rule,
                              method=method)
            est[method] = sweep_theta(sweep, threads=threads).theta50
        out.append(AlphaPoint(alpha=float(alpha), cos_alpha=abs(math.cos(alpha)),
                              theta50_group=est["group_l12"], theta50_lasso=est["lasso_union"]))
    return out
