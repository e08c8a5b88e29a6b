"""Simulation design for the Monte Carlo experiments.

The regressor/instrument pair lives on the unit square with joint
density proportional to a truncated alternating sine series,

    f(x, w) = 2 c sum_j (-1)^(j+1) j^-1 sin(j pi x) sin(j pi w),

whose normalizer has the closed form c = pi^2 / (8 sum_{odd j} j^-3)
(only odd terms survive integration).  In the orthonormal sine basis
the induced operator kernel is diagonal with eigenvalues c^2 j^-2, and
the target regression function has coefficients decaying like j^-2, so
both the spectral-decay and the smoothness exponents of the design
equal 2.  The response is the conditional mean of the target given the
instrument plus Gaussian noise.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DomainError, ParameterError
from .operator import Dataset


@dataclass(eq=False)
class DgpSpec:
    """Design parameters; treat instances as immutable.

    ``n_terms`` truncates the sine series, ``noise_sd`` is the standard
    deviation of the additive response noise, and ``sampler_cells`` is
    the per-axis resolution of the tabulated inverse-CDF sampler.
    """

    n_terms: int = 100
    noise_sd: float = 0.1
    sampler_cells: int = 1024

    def __post_init__(self):
        if self.n_terms < 1:
            raise ParameterError("n_terms must be at least 1")
        if self.noise_sd < 0:
            raise ParameterError("noise_sd must be nonnegative")
        if self.sampler_cells < 16:
            raise ParameterError("sampler_cells must be at least 16")

    @cached_property
    def _j(self) -> np.ndarray:
        return np.arange(1, self.n_terms + 1)

    @cached_property
    def norm_const(self) -> float:
        """Normalizer making the truncated series integrate to one."""
        odd = self._j[self._j % 2 == 1]
        return float(np.pi**2 / (8.0 * np.sum(1.0 / odd.astype(float) ** 3)))

    @cached_property
    def _sampler_tables(self):
        g = self.sampler_cells
        centers = (np.arange(g) + 0.5) / g
        tab = joint_density(self, centers[:, None], centers[None, :])
        clipped = np.clip(tab, 0.0, None)
        total = tab.sum()
        clipped_mass = float((clipped - tab).sum() / total)
        clipped /= clipped.sum() / g**2
        # marginal CDF of x at cell edges, conditional CDF of w per x-cell
        px = clipped.sum(axis=1)
        cdf_x = np.concatenate([[0.0], np.cumsum(px)])
        cdf_x /= cdf_x[-1]
        cum_w = np.cumsum(clipped, axis=1)
        cdf_w = np.concatenate([np.zeros((g, 1)), cum_w / cum_w[:, -1:]], axis=1)
        return cdf_x, cdf_w, clipped_mass

    @property
    def clipped_mass(self) -> float:
        """Fraction of tabulated mass removed by clamping negative ripple."""
        return self._sampler_tables[2]


def joint_density(spec: DgpSpec, x, w):
    """Truncated-series joint density of (X, W); not clamped."""
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    j = spec._j
    coeff = 2.0 * spec.norm_const * (-1.0) ** (j + 1) / j
    sx = np.sin(np.pi * x[..., None] * j)
    sw = np.sin(np.pi * w[..., None] * j)
    out = np.einsum("...j,j,...j->...", sx, coeff, sw)
    return float(out) if out.ndim == 0 else out


def marginal_density(spec: DgpSpec, v):
    """Common marginal density of X and of W (the design is symmetric)."""
    v = np.asarray(v, dtype=float)
    j = spec._j
    odd = j[j % 2 == 1].astype(float)
    out = (4.0 * spec.norm_const / np.pi) * np.sin(np.pi * v[..., None] * odd) @ (odd**-2)
    return float(out) if out.ndim == 0 else out


def true_regression(spec: DgpSpec, x):
    """Target regression function, a truncated alternating sine series."""
    x = np.asarray(x, dtype=float)
    j = spec._j
    out = np.sqrt(2.0) * np.sin(np.pi * x[..., None] * j) @ ((-1.0) ** (j + 1) / j.astype(float) ** 2)
    return float(out) if out.ndim == 0 else out


def mean_outcome_given_instrument(spec: DgpSpec, w):
    """Conditional mean of the target given the instrument.

    Sine orthogonality reduces the numerator integral to the closed
    form sqrt(2) c sum_j j^-3 sin(j pi w); the denominator is the
    marginal density of the instrument.
    """
    w = np.asarray(w, dtype=float)
    j = spec._j.astype(float)
    numer = np.sqrt(2.0) * spec.norm_const * np.sin(np.pi * w[..., None] * spec._j) @ (j**-3)
    denom = marginal_density(spec, w)
    if np.any(np.abs(denom) < 1e-12):
        raise DomainError("instrument density vanishes at the requested point")
    out = numer / denom
    return float(out) if np.ndim(out) == 0 else out


def operator_eigenvalues(spec: DgpSpec, count: int) -> np.ndarray:
    """Exact eigenvalues c^2 j^-2 of the design's operator kernel."""
    if count > spec.n_terms:
        raise ParameterError("the truncated design has only n_terms nonzero eigenvalues")
    j = np.arange(1, count + 1, dtype=float)
    return spec.norm_const**2 / j**2


def sample_dataset(spec: DgpSpec, n: int, seed: int) -> Dataset:
    """Draw n observations; fully determined by the seed.

    X comes from the tabulated marginal by inverse CDF, W from the
    conditional row of X's cell, both with linear interpolation within
    cells; the response adds Gaussian noise to the conditional mean.
    The generator is PCG64 and the draw order is fixed (x uniforms,
    w uniforms, then noise), so results reproduce across platforms and
    worker counts.
    """
    if n < 1:
        raise ParameterError("n must be at least 1")
    cdf_x, cdf_w, _ = spec._sampler_tables
    g = spec.sampler_cells
    rng = np.random.Generator(np.random.PCG64(seed))
    ux = rng.uniform(size=n)
    uw = rng.uniform(size=n)

    kx = np.minimum(np.searchsorted(cdf_x, ux, side="right") - 1, g - 1)
    frac = (ux - cdf_x[kx]) / (cdf_x[kx + 1] - cdf_x[kx])
    x = (kx + frac) / g

    # row-wise inverse CDF, grouped by cell so each row is searched once
    w = np.empty(n)
    order = np.argsort(kx, kind="stable")
    sorted_cells = kx[order]
    starts = np.flatnonzero(np.concatenate([[True], np.diff(sorted_cells) > 0]))
    bounds = np.append(starts, n)
    for s, e in zip(bounds[:-1], bounds[1:]):
        cell = sorted_cells[s]
        idx = order[s:e]
        row = cdf_w[cell]
        kw = np.minimum(np.searchsorted(row, uw[idx], side="right") - 1, g - 1)
        w[idx] = (kw + (uw[idx] - row[kw]) / (row[kw + 1] - row[kw])) / g

    y = mean_outcome_given_instrument(spec, w) + rng.normal(0.0, spec.noise_sd, size=n)
    return Dataset(x=x, w=w, y=y)
