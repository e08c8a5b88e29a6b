"""Density estimation and discretized integral operators.

The conditional-moment identity behind the estimators involves the
integral operator with kernel ``t(x, z) = int f(x, w) f(z, w) dw`` built
from the joint density ``f`` of the regressor and the instrument.  Here
``f`` is replaced by a product-kernel density estimate, ``t`` is
collocated on a quadrature grid (Nystrom), and the ridged system
``(T + a I) psi = rhs`` is solved through its symmetrized form
``D^1/2 T_mat D^1/2 + a I`` with ``D = diag(weights)``, which is
positive semidefinite by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import (
    DomainError,
    InputDataError,
    NumericalInvariantError,
    ParameterError,
)
from .kernels import GeneralizedKernel

GAUSS_LEGENDRE = "gauss-legendre"
TRAPEZOID = "trapezoid"


@dataclass
class Dataset:
    """Observations (x, w, y) with optional exogenous covariates z.

    ``x``, ``w`` and ``z`` are stored as 2-d arrays of shape (n, p) /
    (n, q); 1-d inputs are treated as a single column.  All coordinates
    must be finite and lie in [0, 1].
    """

    x: np.ndarray
    w: np.ndarray
    y: np.ndarray
    z: np.ndarray | None = None

    def __post_init__(self):
        self.x = _as_columns(self.x, "x")
        self.w = _as_columns(self.w, "w")
        self.y = np.asarray(self.y, dtype=float)
        if self.y.ndim != 1:
            raise InputDataError("y must be one-dimensional")
        if not np.all(np.isfinite(self.y)):
            raise InputDataError("y contains non-finite values")
        if self.z is not None:
            self.z = _as_columns(self.z, "z")
        n = self.x.shape[0]
        if n < 1:
            raise InputDataError("dataset is empty")
        lengths = {n, self.w.shape[0], self.y.shape[0]}
        if self.z is not None:
            lengths.add(self.z.shape[0])
        if len(lengths) != 1:
            raise InputDataError("x, w, y (and z) must have equal length")
        if self.x.shape[1] != self.w.shape[1]:
            raise InputDataError("x and w must have the same dimension")
        for arr in (self.x, self.w, self.y) + ((self.z,) if self.z is not None else ()):
            arr.setflags(write=False)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    @property
    def q(self) -> int:
        return 0 if self.z is None else self.z.shape[1]

    def permuted(self, order) -> "Dataset":
        order = np.asarray(order)
        return Dataset(
            x=self.x[order],
            w=self.w[order],
            y=self.y[order],
            z=None if self.z is None else self.z[order],
        )


def _as_columns(arr, name: str) -> np.ndarray:
    a = np.array(arr, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise InputDataError(f"{name} must be 1- or 2-dimensional")
    if not np.all(np.isfinite(a)):
        raise InputDataError(f"{name} contains non-finite values")
    if np.any((a < 0.0) | (a > 1.0)):
        raise InputDataError(f"{name} has coordinates outside [0, 1]")
    return a


def _as_points(arr, p: int, name: str = "point") -> np.ndarray:
    """Normalize query points to shape (k, p)."""
    a = np.asarray(arr, dtype=float)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    elif a.ndim == 1:
        a = a[:, None] if p == 1 else a[None, :]
    if a.ndim != 2 or a.shape[1] != p:
        raise InputDataError(f"{name} must have dimension {p}")
    if np.any((a < 0.0) | (a > 1.0)):
        raise DomainError(f"{name} outside [0, 1]^{p}")
    return a


def kernel_cross(points: np.ndarray, data: np.ndarray, gk: GeneralizedKernel) -> np.ndarray:
    """Product-kernel matrix ``K_h(point_a - data_b, point_a)`` of shape (k, n).

    Both arguments are 2-d with matching column count; kernels multiply
    across columns.
    """
    k = gk.evaluate(points[:, None, 0] - data[None, :, 0], points[:, None, 0])
    for c in range(1, points.shape[1]):
        k = k * gk.evaluate(points[:, None, c] - data[None, :, c], points[:, None, c])
    return k


def kde_joint(d: Dataset, gk: GeneralizedKernel, x, w):
    """Joint density estimate of (X, W) at query pairs (x, w)."""
    xp = _as_points(x, d.p, "x")
    wp = _as_points(w, d.p, "w")
    if xp.shape[0] != wp.shape[0]:
        raise InputDataError("x and w query arrays must align")
    kx = kernel_cross(xp, d.x, gk)
    kw = kernel_cross(wp, d.w, gk)
    vals = (kx * kw).sum(axis=1) / (d.n * gk.bandwidth ** (2 * d.p))
    return float(vals[0]) if np.ndim(x) == 0 and np.ndim(w) == 0 else vals


def kde_loo(d: Dataset, gk: GeneralizedKernel, x, w, omit_i: int):
    """Leave-one-out joint density estimate, observation ``omit_i`` removed."""
    if d.n < 2:
        raise InputDataError("leave-one-out requires at least two observations")
    if not 0 <= omit_i < d.n:
        raise InputDataError(f"index {omit_i} out of range for n={d.n}")
    xp = _as_points(x, d.p, "x")
    wp = _as_points(w, d.p, "w")
    kx = kernel_cross(xp, d.x, gk)
    kw = kernel_cross(wp, d.w, gk)
    prod = kx * kw
    vals = (prod.sum(axis=1) - prod[:, omit_i]) / ((d.n - 1) * gk.bandwidth ** (2 * d.p))
    return float(vals[0]) if np.ndim(x) == 0 and np.ndim(w) == 0 else vals


@dataclass(frozen=True)
class QuadratureGrid:
    """Nodes and weights representing Lebesgue measure on [0, 1]."""

    nodes: np.ndarray
    weights: np.ndarray
    scheme: str

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        if nodes.ndim != 1 or nodes.shape != weights.shape:
            raise InputDataError("nodes and weights must be matching 1-d arrays")
        if np.any(np.diff(nodes) <= 0):
            raise InputDataError("nodes must be strictly increasing")
        if nodes[0] < 0.0 or nodes[-1] > 1.0:
            raise InputDataError("nodes must lie in [0, 1]")
        if np.any(weights <= 0):
            raise InputDataError("weights must be positive")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise InputDataError("weights must sum to one")
        nodes.setflags(write=False)
        weights.setflags(write=False)

    @property
    def size(self) -> int:
        return self.nodes.shape[0]

    def integrate(self, values: np.ndarray):
        return values @ self.weights


def build_grid(m: int, scheme: str = GAUSS_LEGENDRE) -> QuadratureGrid:
    """Quadrature grid with ``m`` nodes on [0, 1]."""
    if m < 2:
        raise ParameterError(f"grid needs at least 2 nodes, got {m}")
    if scheme == GAUSS_LEGENDRE:
        x, w = np.polynomial.legendre.leggauss(m)
        return QuadratureGrid((x + 1.0) / 2.0, w / 2.0, scheme)
    if scheme == TRAPEZOID:
        nodes = np.linspace(0.0, 1.0, m)
        step = 1.0 / (m - 1)
        w = np.full(m, step)
        w[0] = w[-1] = step / 2.0
        return QuadratureGrid(nodes, w, scheme)
    raise ParameterError(f"unknown quadrature scheme {scheme!r}")


def density_mesh(
    d: Dataset,
    gk: GeneralizedKernel,
    xnodes: np.ndarray,
    wnodes: np.ndarray,
    obs_weights: np.ndarray | None = None,
    divisor: float | None = None,
) -> np.ndarray:
    """Joint density estimate tabulated on a product mesh (scalar x and w).

    Entry (l, q) is the estimate at ``(xnodes[l], wnodes[q])``.
    ``obs_weights`` rescales each observation's contribution (used for
    localization on exogenous covariates); ``divisor`` overrides the
    default ``n * h**2`` normalization.
    """
    if d.p != 1:
        raise ParameterError("density_mesh supports scalar x and w only")
    kx = kernel_cross(np.asarray(xnodes, float)[:, None], d.x, gk)
    kw = kernel_cross(np.asarray(wnodes, float)[:, None], d.w, gk)
    if obs_weights is not None:
        kx = kx * np.asarray(obs_weights, float)[None, :]
    if divisor is None:
        divisor = d.n * gk.bandwidth**2
    return (kx @ kw.T) / divisor


class DiscretizedOperator:
    """Collocation of the ridged operator on a quadrature grid.

    Holds the symmetric kernel matrix ``t(node_l, node_m)``, the ridge,
    and a Cholesky factorization of ``D^1/2 T D^1/2 + a I``.  Immutable
    after construction; concurrent solves against one instance are safe.
    """

    def __init__(self, grid: QuadratureGrid, kernel_matrix: np.ndarray, ridge: float):
        if ridge <= 0 or not np.isfinite(ridge):
            raise ParameterError(f"ridge must be positive, got {ridge}")
        kernel_matrix = np.asarray(kernel_matrix, dtype=float)
        m = grid.size
        if kernel_matrix.shape != (m, m):
            raise InputDataError("kernel matrix shape does not match the grid")
        # enforce exact symmetry; assembly routines produce a Gram form
        self.kernel_matrix = 0.5 * (kernel_matrix + kernel_matrix.T)
        self.kernel_matrix.setflags(write=False)
        self.grid = grid
        self.ridge = float(ridge)
        self._sqrt_w = np.sqrt(grid.weights)
        sym = self._sqrt_w[:, None] * self.kernel_matrix * self._sqrt_w[None, :]
        self._sym = 0.5 * (sym + sym.T)
        try:
            self._factor = cho_factor(self._sym + self.ridge * np.eye(m), lower=True)
        except LinAlgError as exc:  # cannot happen for a PSD matrix plus ridge
            raise NumericalInvariantError(
                f"Cholesky factorization failed at ridge {ridge}: {exc}"
            ) from exc
        self._spectrum: tuple[np.ndarray, np.ndarray] | None = None

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """Solve ``(T + a I) psi = rhs`` collocated on the grid.

        ``rhs`` may be a vector or a matrix of stacked right-hand side
        columns; the factorization is reused across the batch.
        """
        rhs = np.asarray(rhs, dtype=float)
        if rhs.shape[0] != self.grid.size:
            raise InputDataError("right-hand side length does not match the grid")
        vec = rhs.ndim == 1
        rhs2 = rhs[:, None] if vec else rhs
        phi = cho_solve(self._factor, self._sqrt_w[:, None] * rhs2)
        psi = phi / self._sqrt_w[:, None]
        return psi[:, 0] if vec else psi

    def spectrum(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigenvalues (descending) and grid values of orthonormal eigenfunctions.

        Eigenfunction columns are normalized in the weighted inner
        product ``sum_m weight_m f(node_m) g(node_m)`` and sign-fixed so
        the largest-magnitude entry is positive.
        """
        if self._spectrum is None:
            lam, vecs = np.linalg.eigh(self._sym)
            order = np.argsort(lam)[::-1]
            lam = lam[order]
            vecs = vecs[:, order]
            funcs = vecs / self._sqrt_w[:, None]
            flip = funcs[np.argmax(np.abs(funcs), axis=0), np.arange(funcs.shape[1])] < 0
            funcs[:, flip] *= -1.0
            funcs.setflags(write=False)
            lam.setflags(write=False)
            self._spectrum = (lam, funcs)
        return self._spectrum


def gram_from_mesh(mesh: np.ndarray, w_weights: np.ndarray) -> np.ndarray:
    """Operator kernel matrix ``sum_q w_q mesh[l, q] mesh[m, q]``, symmetrized."""
    t = (mesh * w_weights[None, :]) @ mesh.T
    return 0.5 * (t + t.T)


def discretize_operator(
    d: Dataset,
    gk: GeneralizedKernel,
    grid: QuadratureGrid,
    ridge: float,
    w_grid: QuadratureGrid | None = None,
) -> DiscretizedOperator:
    """Estimate ``t(x, z) = int f(x, w) f(z, w) dw`` on the grid and factorize.

    The inner integral over w uses ``w_grid`` (defaults to the main grid).
    """
    if w_grid is None:
        w_grid = grid
    mesh = density_mesh(d, gk, grid.nodes, w_grid.nodes)
    return DiscretizedOperator(grid, gram_from_mesh(mesh, w_grid.weights), ridge)


def discretize_from_density(
    density, grid: QuadratureGrid, ridge: float, w_grid: QuadratureGrid | None = None
) -> DiscretizedOperator:
    """Same as :func:`discretize_operator` but from an exact density function.

    ``density(x, w)`` must broadcast over array arguments.
    """
    if w_grid is None:
        w_grid = grid
    mesh = density(grid.nodes[:, None], w_grid.nodes[None, :])
    return DiscretizedOperator(grid, gram_from_mesh(mesh, w_grid.weights), ridge)


def ridge_solve(op: DiscretizedOperator, rhs: np.ndarray) -> np.ndarray:
    return op.solve(rhs)


def spectrum(op: DiscretizedOperator) -> tuple[np.ndarray, np.ndarray]:
    return op.spectrum()


def fit_decay_exponent(eigenvalues: np.ndarray, j_max: int = 20) -> tuple[float, float]:
    """Least-squares slope of log(lambda_j) against log(j) for j <= j_max.

    Returns ``(decay_exponent, intercept)`` with the exponent reported
    as a positive number for decaying sequences.
    """
    lam = np.asarray(eigenvalues, dtype=float)[:j_max]
    keep = lam > 0
    if keep.sum() < 2:
        raise InputDataError("need at least two positive eigenvalues to fit a decay")
    j = np.arange(1, lam.size + 1)[keep]
    slope, intercept = np.polyfit(np.log(j), np.log(lam[keep]), 1)
    return -slope, intercept
