"""Sampled functions of the self-similar variable xi on a uniform grid."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid


@dataclass(frozen=True)
class GridFunction:
    """Real- or vector-valued function of xi sampled on [-M, M].

    ``values`` has shape (n,) for scalar functions or (n, N) for vector
    functions; the xi grid is shared between all quantities of one solve so
    that no inter-module interpolation is ever needed.
    """

    xi: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        xi = np.asarray(self.xi, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if xi.ndim != 1 or len(xi) < 2:
            raise ValueError("xi grid must be 1-d with at least two points")
        if values.shape[0] != xi.shape[0]:
            raise ValueError("values and xi length mismatch")
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return len(self.xi)

    @property
    def M(self) -> float:
        return float(self.xi[-1])

    def __call__(self, x):
        """Linear interpolation (scalar-valued functions only)."""
        if self.values.ndim != 1:
            raise ValueError("interpolation only supported for scalar values")
        return np.interp(x, self.xi, self.values)

    def trapz(self) -> float | np.ndarray:
        return np.trapezoid(self.values, self.xi, axis=0)

    def cumtrapz(self) -> "GridFunction":
        cum = cumulative_trapezoid(self.values, self.xi, axis=0, initial=0.0)
        return GridFunction(self.xi, cum)

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))

    def tv(self) -> float:
        """Total variation; vector values use the Euclidean norm of jumps."""
        d = np.diff(self.values, axis=0)
        if d.ndim == 1:
            return float(np.sum(np.abs(d)))
        return float(np.sum(np.linalg.norm(d, axis=1)))

    def is_monotone(self, slack: float = 1e-12) -> bool:
        d = np.diff(self.values)
        return bool(np.all(d >= -slack) or np.all(d <= slack))

    def map(self, fn) -> "GridFunction":
        return GridFunction(self.xi, fn(self.values))


def uniform_grid(M: float, n: int) -> np.ndarray:
    return np.linspace(-M, M, n)


def default_grid_size(M: float, eps: float, floor: int = 512) -> int:
    """Uniform grid resolving the O(eps) viscous layer with >= 40 points."""
    return max(floor, int(np.ceil(40.0 * M / eps)))
