"""Compactly supported smoothing kernels on [-1, 1] and their
location-adaptive variants for densities supported on [0, 1].

A plain kernel loses mass when its window sticks out past 0 or 1.  The
location-adaptive form ``K_h(u, t)`` takes the evaluation location ``t``
as a second argument and, under the moment-matched policy, rescales the
kernel near the edges with a linear multiplier so that the zeroth scaled
moment stays 1 and the first stays 0.  In the interior it reduces
exactly to ``K(u/h)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import InputDataError, ParameterError, DomainError


class KernelFamily(str, Enum):
    EPANECHNIKOV = "epanechnikov"
    BIWEIGHT = "biweight"
    UNIFORM = "uniform"
    # fourth-order polynomial variant; plain policy only
    EPANECHNIKOV_O4 = "epanechnikov4"


class BoundaryPolicy(str, Enum):
    PLAIN = "plain"
    MOMENT_MATCHED = "matched"


# coefficients in ascending powers of u, valid on [-1, 1]
_COEFFS = {
    KernelFamily.EPANECHNIKOV: np.array([0.75, 0.0, -0.75]),
    KernelFamily.BIWEIGHT: np.array([15.0, 0.0, -30.0, 0.0, 15.0]) / 16.0,
    KernelFamily.UNIFORM: np.array([0.5]),
    KernelFamily.EPANECHNIKOV_O4: np.array([45.0, 0.0, -150.0, 0.0, 105.0]) / 32.0,
}

_ORDER = {
    KernelFamily.EPANECHNIKOV: 2,
    KernelFamily.BIWEIGHT: 2,
    KernelFamily.UNIFORM: 2,
    KernelFamily.EPANECHNIKOV_O4: 4,
}

# antiderivatives of u^j * K(u), keyed by (family, j)
_MOMENT_ANTIDERIV: dict[tuple[KernelFamily, int], np.ndarray] = {}


def _moment_antideriv(family: KernelFamily, j: int) -> np.ndarray:
    key = (family, j)
    if key not in _MOMENT_ANTIDERIV:
        c = _COEFFS[family]
        shifted = np.concatenate([np.zeros(j), c])  # u^j * K(u)
        _MOMENT_ANTIDERIV[key] = npoly.polyint(shifted)
    return _MOMENT_ANTIDERIV[key]


@dataclass(frozen=True)
class BaseKernel:
    """Symmetric kernel with support [-1, 1], integrating to one."""

    family: KernelFamily = KernelFamily.EPANECHNIKOV

    @property
    def order(self) -> int:
        return _ORDER[self.family]

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        if not np.all(np.isfinite(u)):
            raise InputDataError("kernel argument must be finite")
        out = npoly.polyval(u, _COEFFS[self.family])
        out = np.where(np.abs(u) <= 1.0, out, 0.0)
        return float(out) if out.ndim == 0 else out

    def partial_moment(self, j: int, lo, hi):
        """Exact integral of u^j K(u) over [lo, hi] (clipped to the support)."""
        lo = np.clip(np.asarray(lo, dtype=float), -1.0, 1.0)
        hi = np.clip(np.asarray(hi, dtype=float), -1.0, 1.0)
        anti = _moment_antideriv(self.family, j)
        return npoly.polyval(hi, anti) - npoly.polyval(lo, anti)


@dataclass(frozen=True)
class GeneralizedKernel:
    """Location-adaptive kernel ``K_h(u, t)`` for data living on [0, 1].

    ``K_h(u, t)`` vanishes whenever ``u > t`` or ``u < t - 1``, so that
    only offsets reachable from points inside [0, 1] ever contribute.
    """

    base: BaseKernel
    bandwidth: float
    policy: BoundaryPolicy = BoundaryPolicy.MOMENT_MATCHED

    def __post_init__(self):
        if not (np.isfinite(self.bandwidth) and self.bandwidth > 0):
            raise ParameterError(f"bandwidth must be positive, got {self.bandwidth}")
        if self.policy is BoundaryPolicy.MOMENT_MATCHED and self.base.order != 2:
            raise ParameterError(
                "moment matching is implemented for second-order kernels only"
            )

    def evaluate(self, u, t):
        """Evaluate ``K_h(u, t)``; vectorized over broadcastable u and t."""
        u = np.asarray(u, dtype=float)
        t = np.asarray(t, dtype=float)
        if not np.all(np.isfinite(u)):
            raise InputDataError("kernel offset must be finite")
        if np.any((t < 0.0) | (t > 1.0)):
            raise DomainError("location argument must lie in [0, 1]")
        h = self.bandwidth
        u, t = np.broadcast_arrays(u, t)
        v = u / h
        out = np.asarray(self.base(v))

        if self.policy is BoundaryPolicy.MOMENT_MATCHED:
            lo = np.maximum(-1.0, (t - 1.0) / h)
            hi = np.minimum(1.0, t / h)
            near_edge = (lo > -1.0) | (hi < 1.0)
            if np.any(near_edge):
                s0 = self.base.partial_moment(0, lo, hi)
                s1 = self.base.partial_moment(1, lo, hi)
                s2 = self.base.partial_moment(2, lo, hi)
                denom = s0 * s2 - s1 * s1
                usable = near_edge & (hi > lo) & (denom > 0.0)
                mult = np.ones_like(out)
                np.divide(s2 - s1 * v, denom, out=mult, where=usable)
                out = np.where(near_edge & ~usable, 0.0, out * np.where(near_edge, mult, 1.0))

        # support in the offset variable, exact
        out = np.where((u > t) | (u < t - 1.0), 0.0, out)
        return float(out) if out.ndim == 0 else out


def scaled_moments(gk: GeneralizedKernel, t: float, up_to_j: int) -> np.ndarray:
    """Scaled moments ``h^-(j+1) * int u^j K_h(u, t) du`` for j = 0..up_to_j.

    Computed by 128-point Gauss-Legendre quadrature over the effective
    support, independently of the closed-form moments used inside
    :meth:`GeneralizedKernel.evaluate`.
    """
    h = gk.bandwidth
    lo = max(t - 1.0, -h)
    hi = min(t, h)
    if hi <= lo:
        return np.zeros(up_to_j + 1)
    x, w = np.polynomial.legendre.leggauss(128)
    x = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
    w = 0.5 * (hi - lo) * w
    k = gk.evaluate(x, t)
    return np.array(
        [np.sum(w * x**j * k) / h ** (j + 1) for j in range(up_to_j + 1)]
    )
