"""Univariate polynomials over a closed interval.

Coefficients are stored densely from constant to leading term, so
evaluation, differentiation, products and definite integrals are exact
coefficient operations. Fitted polynomials keep a fixed degree (trailing
zero coefficients permitted) because downstream updates rely on the
representation staying the same size.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly

FIT_DEGREE = 4


@dataclass(frozen=True)
class UnivariatePolynomial:
    """Dense polynomial on the interval [lo, hi]."""

    coeffs: np.ndarray
    lo: float
    hi: float

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=float)
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)
        if coeffs.ndim != 1 or coeffs.size == 0:
            raise ValueError("coefficients must be a non-empty 1-D array")
        if not self.lo < self.hi:
            raise ValueError("domain must satisfy lo < hi")

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    def __call__(self, x):
        return npoly.polyval(x, self.coeffs)

    def derivative(self) -> "UnivariatePolynomial":
        return UnivariatePolynomial(npoly.polyder(self.coeffs), self.lo, self.hi)

    def multiply(self, other: "UnivariatePolynomial") -> "UnivariatePolynomial":
        if (other.lo, other.hi) != (self.lo, self.hi):
            raise ValueError("polynomial product requires matching domains")
        return UnivariatePolynomial(
            npoly.polymul(self.coeffs, other.coeffs), self.lo, self.hi
        )

    def scaled(self, factor: float) -> "UnivariatePolynomial":
        return UnivariatePolynomial(self.coeffs * factor, self.lo, self.hi)

    def definite_integral(self) -> float:
        anti = npoly.polyint(self.coeffs)
        return float(npoly.polyval(self.hi, anti) - npoly.polyval(self.lo, anti))

    def real_roots_in_domain(self) -> np.ndarray:
        """Real roots strictly inside (lo, hi), sorted ascending."""
        trimmed = npoly.polytrim(self.coeffs, tol=0.0)
        if trimmed.size <= 1:
            return np.empty(0)
        roots = npoly.polyroots(trimmed)
        real = roots.real[np.abs(roots.imag) < 1e-9]
        inside = real[(real > self.lo) & (real < self.hi)]
        return np.sort(inside)

    def absolute_definite_integral(self) -> float:
        """Integral of |p| over the domain, splitting at interior sign changes."""
        anti = npoly.polyint(self.coeffs)
        knots = np.concatenate(([self.lo], self.real_roots_in_domain(), [self.hi]))
        total = 0.0
        for a, b in zip(knots[:-1], knots[1:]):
            total += abs(npoly.polyval(b, anti) - npoly.polyval(a, anti))
        return float(total)

    @staticmethod
    def constant(value: float, lo: float, hi: float) -> "UnivariatePolynomial":
        coeffs = np.zeros(FIT_DEGREE + 1)
        coeffs[0] = value
        return UnivariatePolynomial(coeffs, lo, hi)


def fit_polynomial(
    samples: Sequence[tuple[float, float]],
    lo: float,
    hi: float,
    degree: int = FIT_DEGREE,
) -> UnivariatePolynomial:
    """Least-squares polynomial of the given degree through the samples.

    With exactly ``degree + 1`` distinct abscissae the fit interpolates.
    """
    xs = np.array([x for x, _ in samples], dtype=float)
    ys = np.array([y for _, y in samples], dtype=float)
    if np.unique(xs).size < degree + 1:
        raise ValueError(
            f"need at least {degree + 1} distinct sample points, got {np.unique(xs).size}"
        )
    coeffs = npoly.polyfit(xs, ys, degree)
    return UnivariatePolynomial(coeffs, lo, hi)
