"""Kernel instrumental-variables estimator.

For scalar regressor x and instrument w the estimate at a point is the
average over observations i of ``((T + aI)^-1 f_loo_i)(x) * Y_i``, where
``f_loo_i`` is the leave-one-out joint density estimate sliced at the
observed instrument value ``W_i`` and ``T`` is the discretized operator
from :mod:`npiv.operator`.  One factorization serves all n right-hand
sides.  With exogenous covariates z the same inversion is carried out
with every observation localized around the requested z by a product
kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InputDataError, ParameterError
from .kernels import BaseKernel, BoundaryPolicy, GeneralizedKernel, KernelFamily
from .operator import (
    Dataset,
    DiscretizedOperator,
    QuadratureGrid,
    build_grid,
    density_mesh,
    gram_from_mesh,
    kernel_cross,
)

# default evaluation mesh: 19 equally spaced interior points
DEFAULT_EVAL_POINTS = np.round(np.arange(1, 20) * 0.05, 10)


@dataclass(frozen=True)
class KernelIvConfig:
    """Tuning for the kernel estimator.

    ``bandwidth`` smooths x and w; ``bandwidth_z`` (multivariate only)
    smooths the exogenous covariates.  ``ridge`` stabilizes the operator
    inversion and must be positive: the estimated operator has
    eigenvalues accumulating at zero, so the unridged solve is
    meaningless.
    """

    bandwidth: float
    ridge: float
    grid_size: int = 65
    boundary: BoundaryPolicy = BoundaryPolicy.MOMENT_MATCHED
    family: KernelFamily = KernelFamily.EPANECHNIKOV
    bandwidth_z: float | None = None
    eval_points: np.ndarray | None = None
    with_diagnostics: bool = True

    def __post_init__(self):
        if not (np.isfinite(self.bandwidth) and self.bandwidth > 0):
            raise ParameterError(f"bandwidth must be positive, got {self.bandwidth}")
        if not (np.isfinite(self.ridge) and self.ridge > 0):
            raise ParameterError(f"ridge must be positive, got {self.ridge}")
        if self.bandwidth_z is not None and self.bandwidth_z <= 0:
            raise ParameterError(f"bandwidth_z must be positive, got {self.bandwidth_z}")
        if self.grid_size < 2:
            raise ParameterError("grid_size must be at least 2")

    def kernel(self, bandwidth: float | None = None) -> GeneralizedKernel:
        return GeneralizedKernel(
            BaseKernel(self.family),
            self.bandwidth if bandwidth is None else bandwidth,
            self.boundary,
        )

    def resolved_eval_points(self) -> np.ndarray:
        pts = DEFAULT_EVAL_POINTS if self.eval_points is None else np.asarray(self.eval_points, float)
        if pts.ndim != 1:
            raise ParameterError("eval_points must be one-dimensional")
        if np.any((pts < 0.0) | (pts > 1.0)):
            raise DomainError("evaluation points must lie in [0, 1]")
        return pts


@dataclass
class Estimate:
    """Estimated regression values plus run diagnostics."""

    points: np.ndarray
    values: np.ndarray
    diagnostics: dict = field(default_factory=dict)


class BivariateDesign:
    """Bandwidth-dependent pieces of the kernel pipeline.

    Assembling the operator kernel matrix and the n leave-one-out
    right-hand sides costs far more than a ridged solve, and none of it
    depends on the ridge.  Building this once lets a caller sweep many
    ridge values cheaply (the Monte Carlo harness does exactly that).
    """

    def __init__(self, d: Dataset, gk: GeneralizedKernel, grid: QuadratureGrid):
        if d.p != 1:
            raise InputDataError("bivariate design requires scalar x and w")
        if d.n < 2:
            raise InputDataError("need at least two observations")
        self.grid = grid
        self.y = d.y
        n, h = d.n, gk.bandwidth
        kx = kernel_cross(grid.nodes[:, None], d.x, gk)  # (M, n)
        kw = kernel_cross(grid.nodes[:, None], d.w, gk)  # (M, n)
        mesh = (kx @ kw.T) / (n * h * h)
        self.t_matrix = gram_from_mesh(mesh, grid.weights)
        # leave-one-out density slices at (node_l, W_i): drop the own
        # term from the full sum instead of recomputing n kernel sums
        kww = kernel_cross(d.w, d.w, gk)  # (n, n), entry (i, j) = K(W_i - W_j, W_i)
        full = kx @ kww.T
        own = kx * np.diag(kww)[None, :]
        self.rhs = (full - own) / ((n - 1) * h * h)

    def solve_mean(self, ridge: float) -> tuple[np.ndarray, DiscretizedOperator]:
        """Grid values of the estimate at one ridge."""
        op = DiscretizedOperator(self.grid, self.t_matrix, ridge)
        psi = op.solve(self.rhs)
        return psi @ self.y / self.y.size, op

    def estimate_values(self, ridge: float, eval_points: np.ndarray) -> np.ndarray:
        grid_values, _ = self.solve_mean(ridge)
        return np.interp(eval_points, self.grid.nodes, grid_values)


def estimate_bivariate(d: Dataset, cfg: KernelIvConfig) -> Estimate:
    """Kernel estimate of the regression function at the configured points."""
    if d.z is not None:
        raise InputDataError(
            "dataset has exogenous covariates; use estimate_multivariate"
        )
    pts = cfg.resolved_eval_points()
    design = BivariateDesign(d, cfg.kernel(), build_grid(cfg.grid_size))
    grid_values, op = design.solve_mean(cfg.ridge)
    values = np.interp(pts, design.grid.nodes, grid_values)
    diag = {
        "bandwidth": cfg.bandwidth,
        "ridge": cfg.ridge,
        "grid_size": cfg.grid_size,
        "boundary": cfg.boundary.value,
    }
    if cfg.with_diagnostics:
        lam, _ = op.spectrum()
        diag["spectrum_head"] = lam[:5].tolist()
    return Estimate(points=pts, values=values, diagnostics=diag)


def estimate_multivariate(d: Dataset, cfg: KernelIvConfig, z0) -> Estimate:
    """Kernel estimate localized at exogenous covariate value ``z0``.

    Supports scalar endogenous x (the operator lives on a 1-d grid;
    tensor grids for higher-dimensional x grow as grid_size**p and are
    not provided) and any number of exogenous covariates.
    """
    if d.z is None:
        raise InputDataError("dataset has no exogenous covariates")
    if d.p != 1:
        raise ParameterError("only a scalar endogenous regressor is supported")
    if d.n < 2:
        raise InputDataError("need at least two observations")
    if cfg.bandwidth_z is None:
        raise ParameterError("bandwidth_z is required for the multivariate estimator")
    pts = cfg.resolved_eval_points()
    z0 = np.atleast_1d(np.asarray(z0, dtype=float))
    if z0.shape != (d.q,):
        raise InputDataError(f"z0 must have {d.q} coordinates")
    if np.any((z0 < 0.0) | (z0 > 1.0)):
        raise DomainError("z0 outside [0, 1]")

    n, hx, hz, q = d.n, cfg.bandwidth, cfg.bandwidth_z, d.q
    gk_x = cfg.kernel()
    gk_z = cfg.kernel(hz)
    # localization weights of each observation around z0
    loc = kernel_cross(z0[None, :], d.z, gk_z)[0]  # (n,)
    sparse = bool(np.all(loc == 0.0))

    grid = build_grid(cfg.grid_size)
    divisor = n * hx * hx * hz**q
    mesh = density_mesh(d, gk_x, grid.nodes, grid.nodes, obs_weights=loc, divisor=divisor)
    op = DiscretizedOperator(grid, gram_from_mesh(mesh, grid.weights), cfg.ridge)

    kx = kernel_cross(grid.nodes[:, None], d.x, gk_x)
    kww = kernel_cross(d.w, d.w, gk_x)
    full = (kx * loc[None, :]) @ kww.T
    own = kx * (loc * np.diag(kww))[None, :]
    rhs = (full - own) / ((n - 1) * hx * hx * hz**q)

    psi = op.solve(rhs)
    grid_values = psi @ (d.y * loc) / (n * hz**q)
    values = np.interp(pts, grid.nodes, grid_values)
    diag = {
        "bandwidth": hx,
        "bandwidth_z": hz,
        "ridge": cfg.ridge,
        "grid_size": cfg.grid_size,
        "boundary": cfg.boundary.value,
        "z0": z0.tolist(),
        "local_weight_total": float(loc.sum()),
        "sparse_locality": sparse,
    }
    if cfg.with_diagnostics:
        lam, _ = op.spectrum()
        diag["spectrum_head"] = lam[:5].tolist()
    return Estimate(points=pts, values=values, diagnostics=diag)


def estimation_band(estimates, truth, level: float = 0.95) -> np.ndarray:
    """Smallest pointwise half-widths so that ``truth +- delta`` covers a
    ``level`` fraction of the replicated estimates.

    ``estimates`` is a sequence of :class:`Estimate` objects or a 2-d
    array with one replication per row.
    """
    if not 0.0 < level <= 1.0:
        raise ParameterError(f"level must be in (0, 1], got {level}")
    if hasattr(estimates, "ndim"):
        values = np.asarray(estimates, dtype=float)
    else:
        values = np.asarray([e.values for e in estimates], dtype=float)
    if values.ndim != 2 or values.shape[0] < 2:
        raise InputDataError("need at least two replications")
    truth = np.asarray(truth, dtype=float)
    if truth.shape != (values.shape[1],):
        raise InputDataError("truth length does not match the evaluation points")
    deviations = np.sort(np.abs(values - truth[None, :]), axis=0)
    rank = math.ceil(level * values.shape[0]) - 1
    return deviations[rank]
