"""Parameter estimators for hypothesised agent behaviours.

Three strategies produce a fresh in-bounds estimate from observed actions:

* gradient ascent on a polynomial fit of the latest-action likelihood,
* approximate Bayesian updating of a per-parameter polynomial posterior,
* global optimisation of the whole-history log-likelihood with a Gaussian
  process surrogate and the expected-improvement acquisition rule.

Parameters are treated one coordinate at a time (others pinned at the
previous estimate) for the first two strategies; coordinates are updated
simultaneously from their fits so the result does not depend on update
order. The global optimiser searches the full box instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.linalg import cho_factor, cho_solve
from scipy.special import ndtr
from scipy.stats import qmc

from .agent_model import (
    PROB_FLOOR,
    HypotheticalType,
    Observation,
    ParameterVector,
    action_probabilities,
    history_log_likelihood,
)
from .polynomials import FIT_DEGREE, UnivariatePolynomial, fit_polynomial

PROFILE_POINTS = 5
ABU_SAMPLE_FLOOR = 1e-6
ABU_ESTIMATE_SAMPLES = 10
CDF_TABLE_POINTS = 512
EI_CANDIDATES = 1000
GP_LENGTH_SCALE_FRACTION = 0.3
GP_JITTER = 1e-8


def sample_likelihood_profile(
    type_: HypotheticalType,
    history: Sequence[Observation],
    observed_action: int,
    params_pinned: ParameterVector,
    k: int,
) -> list[tuple[float, float]]:
    """Probability of the observed action at 5 uniform points of parameter k.

    Other coordinates stay pinned at ``params_pinned``; the type's internal
    state is replayed from scratch for every probe value, so non-Markovian
    parameter effects are captured.
    """
    if not 0 <= k < len(params_pinned.values):
        raise IndexError(f"parameter index {k} out of range")
    lo, hi = params_pinned.bounds[k]
    xs = np.linspace(lo, hi, PROFILE_POINTS)
    profile = []
    for x in xs:
        probed = params_pinned.with_value(k, float(x))
        dist = action_probabilities(type_, history, probed)
        profile.append((float(x), max(dist.prob(observed_action), PROB_FLOOR)))
    return profile


def backtracking_step(
    poly: UnivariatePolynomial,
    x0: float,
    gradient: float,
    initial_step: float = 1.0,
    contraction: float = 0.5,
    acceptance: float = 0.5,
    max_halvings: int = 20,
) -> float:
    """Armijo backtracking on the fitted polynomial; 0.0 if nothing accepts."""
    f0 = float(poly(x0))
    step = initial_step
    for _ in range(max_halvings + 1):
        if float(poly(x0 + step * gradient)) >= f0 + acceptance * step * gradient**2:
            return step
        step *= contraction
    return 0.0


def aga_update(
    type_: HypotheticalType,
    history: Sequence[Observation],
    observed_action: int,
    p_prev: ParameterVector,
) -> ParameterVector:
    """One gradient-ascent step per parameter on the fitted likelihood."""
    raw = np.array(p_prev.values, dtype=float)
    for k, (lo, hi) in enumerate(p_prev.bounds):
        profile = sample_likelihood_profile(type_, history, observed_action, p_prev, k)
        fhat = fit_polynomial(profile, lo, hi)
        x0 = p_prev.values[k]
        grad = float(fhat.derivative()(x0))
        if grad == 0.0:
            continue
        lam = backtracking_step(fhat, x0, grad)
        raw[k] = x0 + lam * grad
    return p_prev.clamped(raw)


@dataclass(frozen=True)
class ParameterPosterior:
    """One normalised degree-4 density polynomial per parameter."""

    polynomials: tuple[UnivariatePolynomial, ...]

    def __post_init__(self):
        for poly in self.polynomials:
            z = poly.absolute_definite_integral()
            if abs(z - 1.0) > 1e-6:
                raise ValueError(f"posterior polynomial integrates to {z}, not 1")

    @staticmethod
    def uniform(bounds: Sequence[tuple[float, float]]) -> "ParameterPosterior":
        return ParameterPosterior(
            tuple(
                UnivariatePolynomial.constant(1.0 / (hi - lo), lo, hi)
                for lo, hi in bounds
            )
        )


def sample_absolute_density(
    poly: UnivariatePolynomial, n: int, rng: np.random.Generator
) -> np.ndarray:
    """Inverse-CDF samples from |poly| using a 512-point cumulative table."""
    xs = np.linspace(poly.lo, poly.hi, CDF_TABLE_POINTS)
    pdf = np.abs(poly(xs))
    cdf = cumulative_trapezoid(pdf, xs, initial=0.0)
    if cdf[-1] <= 0.0:
        return np.full(n, 0.5 * (poly.lo + poly.hi))
    return np.interp(rng.random(n) * cdf[-1], cdf, xs)


def abu_update(
    posterior: ParameterPosterior,
    type_: HypotheticalType,
    history: Sequence[Observation],
    observed_action: int,
    p_prev: ParameterVector,
    rng: np.random.Generator,
) -> tuple[ParameterPosterior, ParameterVector]:
    """Bayesian update of each parameter's polynomial posterior.

    Per coordinate: fit the likelihood profile, take the exact polynomial
    product with the prior (degree 8), re-sample it on the 5-point grid with
    a small positive floor so negative fit minima cannot compound across
    steps, refit at degree 4 and renormalise by the absolute integral. The
    point estimate averages 10 inverse-CDF draws from the refreshed density.
    """
    new_polys = []
    raw = np.empty(len(p_prev.values))
    for k, (lo, hi) in enumerate(p_prev.bounds):
        profile = sample_likelihood_profile(type_, history, observed_action, p_prev, k)
        fhat = fit_polynomial(profile, lo, hi)
        product = fhat.multiply(posterior.polynomials[k])
        xs = np.linspace(lo, hi, PROFILE_POINTS)
        resampled = np.maximum(product(xs), ABU_SAMPLE_FLOOR)
        refit = fit_polynomial(list(zip(xs, resampled)), lo, hi)
        normalised = refit.scaled(1.0 / refit.absolute_definite_integral())
        new_polys.append(normalised)
        raw[k] = sample_absolute_density(normalised, ABU_ESTIMATE_SAMPLES, rng).mean()
    return ParameterPosterior(tuple(new_polys)), p_prev.clamped(raw)


class GpSurrogate:
    """Gaussian process over a bounded box with a squared-exponential kernel.

    The per-dimension length-scale is fixed (no hyperparameter fitting) and
    the objective values are standardised internally, so the kernel amplitude
    is unit on the standardised scale; ``signal_variance`` reports the
    amplitude back on the objective's own scale. The prior mean is the
    empirical mean of the observed values.
    """

    def __init__(
        self,
        X: np.ndarray,
        y: np.ndarray,
        length_scales: np.ndarray,
        jitter: float = GP_JITTER,
    ):
        self.X = np.atleast_2d(np.asarray(X, dtype=float))
        self.y = np.asarray(y, dtype=float)
        if self.X.shape[0] != self.y.size or self.y.size == 0:
            raise ValueError("X and y must hold the same positive number of points")
        self.length_scales = np.asarray(length_scales, dtype=float)
        self.jitter = float(jitter)
        self._y_mean = float(self.y.mean())
        scale = float(self.y.std())
        self._y_scale = scale if scale > 1e-12 else 1.0
        kernel = self._kernel(self.X, self.X)
        kernel[np.diag_indices_from(kernel)] += self.jitter
        self._chol = cho_factor(kernel, lower=True)
        self._alpha = cho_solve(self._chol, (self.y - self._y_mean) / self._y_scale)

    @property
    def prior_mean(self) -> float:
        return self._y_mean

    @property
    def signal_variance(self) -> float:
        return self._y_scale**2

    def _kernel(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        diff = (A[:, None, :] - B[None, :, :]) / self.length_scales
        return np.exp(-0.5 * np.sum(diff**2, axis=-1))

    def posterior(self, queries: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Posterior mean and variance at each query row."""
        Q = np.atleast_2d(np.asarray(queries, dtype=float))
        k_star = self._kernel(Q, self.X)
        mean = self._y_mean + self._y_scale * (k_star @ self._alpha)
        solved = cho_solve(self._chol, k_star.T)
        var_unit = 1.0 + self.jitter - np.sum(k_star * solved.T, axis=1)
        var = self._y_scale**2 * np.maximum(var_unit, 0.0)
        return mean, var

    @classmethod
    def from_bounds(
        cls,
        X: np.ndarray,
        y: np.ndarray,
        bounds: Sequence[tuple[float, float]],
        jitter: float = GP_JITTER,
    ) -> "GpSurrogate":
        scales = np.array([GP_LENGTH_SCALE_FRACTION * (hi - lo) for lo, hi in bounds])
        return cls(X, y, scales, jitter)


def gp_posterior(surrogate: GpSurrogate, query) -> tuple[float, float]:
    values = query.as_array() if isinstance(query, ParameterVector) else query
    mean, var = surrogate.posterior(np.atleast_2d(values))
    return float(mean[0]), float(var[0])


def expected_improvement(mean, variance, best_so_far: float):
    """EI for a maximisation problem; identically 0 where the variance is 0."""
    mean = np.asarray(mean, dtype=float)
    sigma = np.sqrt(np.asarray(variance, dtype=float))
    improve = mean - best_so_far
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(sigma > 0.0, improve / np.where(sigma > 0.0, sigma, 1.0), 0.0)
    phi = np.exp(-0.5 * z**2) / math.sqrt(2.0 * math.pi)
    ei = np.where(sigma > 0.0, improve * ndtr(z) + sigma * phi, 0.0)
    if ei.ndim == 0:
        return float(ei)
    return ei


def ego_maximize(
    objective: Callable[[np.ndarray], float],
    bounds: Sequence[tuple[float, float]],
    budget: int,
    rng: np.random.Generator,
    initial_points: np.ndarray | None = None,
    candidates: np.ndarray | None = None,
) -> np.ndarray:
    """Budget-limited global maximisation over a box.

    Spends ``max(2, budget // 2)`` evaluations on quasi-random initial points
    and the remainder on points chosen by expected improvement of a Gaussian
    process surrogate over 1000 uniformly random candidates. Returns the best
    point actually evaluated. ``initial_points`` and ``candidates`` override
    the random choices, mainly for testing.
    """
    if budget < 2:
        raise ValueError("budget must be at least 2")
    lows = np.array([lo for lo, _ in bounds])
    highs = np.array([hi for _, hi in bounds])
    dim = lows.size

    if initial_points is None:
        n_init = min(budget, max(2, budget // 2))
        sampler = qmc.Halton(d=dim, scramble=True, seed=rng)
        unit = sampler.random(n_init)
        initial = lows + unit * (highs - lows)
    else:
        initial = np.atleast_2d(np.asarray(initial_points, dtype=float))
        if initial.shape[0] > budget:
            raise ValueError("more initial points than budget")

    X = [row.copy() for row in initial]
    y = [float(objective(row)) for row in X]

    while len(X) < budget:
        surrogate = GpSurrogate.from_bounds(np.array(X), np.array(y), bounds)
        if candidates is None:
            pool = rng.uniform(lows, highs, size=(EI_CANDIDATES, dim))
        else:
            pool = np.atleast_2d(np.asarray(candidates, dtype=float))
        mean, var = surrogate.posterior(pool)
        scores = expected_improvement(mean, var, max(y))
        chosen = pool[int(np.argmax(scores))].copy()
        X.append(chosen)
        y.append(float(objective(chosen)))

    return X[int(np.argmax(y))]


def ego_update(
    type_: HypotheticalType,
    full_history: Sequence[Observation],
    budget: int,
    rng: np.random.Generator,
    initial_points: np.ndarray | None = None,
    candidates: np.ndarray | None = None,
) -> ParameterVector:
    """Globally re-estimate all parameters from the whole history.

    The objective is the summed log-probability of every observed action
    under a fresh replay, floored per step so impossible actions cannot
    produce infinities.
    """
    bounds = type_.bounds

    def objective(point: np.ndarray) -> float:
        params = ParameterVector(tuple(float(v) for v in point), tuple(bounds))
        return history_log_likelihood(type_, full_history, params)

    best = ego_maximize(objective, bounds, budget, rng, initial_points, candidates)
    return ParameterVector(tuple(float(v) for v in best), tuple(bounds))
