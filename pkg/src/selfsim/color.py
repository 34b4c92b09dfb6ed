"""Closed-form color field v(xi) and its derivative psi(xi).

The color field selects between the two half-models: it solves the decoupled
self-similar heat equation exactly, rising from -1 to +1 across a Gaussian
layer of thickness eps^(p/2). Normalization is taken over the solve window
[-M, M] (so v(+-M) = +-1 exactly); the discrepancy against the whole-line
normalization is of size exp(-M^2 / 2 eps^p).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf, erfc


@dataclass(frozen=True)
class ColorProfile:
    eps: float
    p: float = 1.0
    M: float = 2.0
    normalization: float = field(init=False)

    def __post_init__(self):
        if self.eps <= 0 or self.p <= 0 or self.M <= 0:
            raise ValueError("eps, p and M must be positive")
        a = self._scale()
        norm = a * np.sqrt(np.pi) * erf(self.M / a)
        object.__setattr__(self, "normalization", float(norm))

    def _scale(self) -> float:
        # exp(-xi^2 / 2 eps^p) = exp(-(xi/a)^2) with a = sqrt(2 eps^p)
        return float(np.sqrt(2.0 * self.eps ** self.p))

    def evaluate_v(self, xi):
        """Color value in [-1, 1]; odd, strictly increasing, v(+-M) = +-1."""
        a = self._scale()
        return np.clip(erf(np.asarray(xi, dtype=float) / a) / erf(self.M / a), -1.0, 1.0)

    def evaluate_psi(self, xi):
        """psi = dv/dxi = 2 exp(-xi^2 / 2 eps^p) / normalization >= 0."""
        xi = np.asarray(xi, dtype=float)
        return 2.0 * np.exp(-(xi ** 2) / (2.0 * self.eps ** self.p)) / self.normalization

    def sgn_deviation(self, c: float) -> float:
        """sup over c <= |xi| <= M of |v(xi) - sgn(xi)|.

        By monotonicity and oddness the sup is attained at |xi| = c.
        """
        if not 0.0 <= c <= self.M:
            raise ValueError("require 0 <= c <= M")
        a = self._scale()
        # 1 - v(c) = (erfc(c/a) - erfc(M/a)) / erf(M/a)
        return float((erfc(c / a) - erfc(self.M / a)) / erf(self.M / a))

    def invert_v(self, target: float, tol: float = 1e-12) -> float:
        """xi with v(xi) = target, by bisection on the interior."""
        if not -1.0 < target < 1.0:
            raise ValueError("target must be interior to (-1, 1)")
        lo, hi = -self.M, self.M
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if self.evaluate_v(mid) < target:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)
