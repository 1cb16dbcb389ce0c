"""Quadratic interpolation surrogate and its analytic minimizer.

A quadratic in n variables,

    q(x) = const + linear . x + x . quad @ x        (quad symmetric),

has 1 + n + n(n+1)/2 = (n+1)(n+2)/2 independent coefficients, so exactly that
many distinct sample points determine it. The coefficients come from solving
the square interpolation system built by :func:`build_design_matrix`; the
stationary point follows from setting the gradient to zero, i.e. solving
``2 * quad @ x = -linear``.

Linear systems are solved by dense LU factorization with partial pivoting
(LAPACK ``getrf``/``getrs``). Singularity is declared deterministically: the
solve fails when any pivot magnitude drops below ``PIVOT_RTOL`` times the
largest absolute entry of the matrix. No explicit inverse is ever formed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack

from .archive import Archive, ArchiveEntry, EmptyArchiveError
from .objectives import Objective, clip_to_bounds

# Scaled pivot threshold for declaring a matrix singular.
PIVOT_RTOL = 1e-10

FALLBACK_NONE = "none"
FALLBACK_TOO_FEW_POINTS = "too_few_points"
FALLBACK_SINGULAR_SYSTEM = "singular_system"
FALLBACK_SINGULAR_QUADRATIC = "singular_quadratic"
FALLBACK_NON_IMPROVING = "non_improving"

FALLBACK_REASONS = (
    FALLBACK_NONE,
    FALLBACK_TOO_FEW_POINTS,
    FALLBACK_SINGULAR_SYSTEM,
    FALLBACK_SINGULAR_QUADRATIC,
    FALLBACK_NON_IMPROVING,
)


class SingularMatrixError(ArithmeticError):
    """A pivot of the LU factorization fell below the scaled threshold."""


def solve_pivoted(matrix: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve ``matrix @ x = rhs`` by partially pivoted LU.

    Raises :class:`SingularMatrixError` when any pivot magnitude is smaller
    than ``PIVOT_RTOL * max|matrix|``, which flags collinear or otherwise
    degenerate geometry deterministically.
    """
    a = np.array(matrix, dtype=float, order="F")
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    if scale == 0.0 or not math.isfinite(scale):
        raise SingularMatrixError("matrix is zero or non-finite")
    lu, piv, info = lapack.dgetrf(a, overwrite_a=True)
    if info < 0:
        raise ValueError(f"illegal value in LU factorization argument {-info}")
    pivots = np.abs(np.diagonal(lu))
    if info > 0 or float(pivots.min()) < PIVOT_RTOL * scale:
        raise SingularMatrixError("pivot below threshold; system is singular")
    x, info = lapack.dgetrs(lu, piv, np.asarray(rhs, dtype=float))
    if info != 0:
        raise ValueError(f"illegal value in triangular solve argument {-info}")
    return x


def required_points(dimension: int) -> int:
    """Number of distinct samples that uniquely determine the quadratic."""
    if dimension < 1:
        raise ValueError("dimension must be >= 1")
    return (dimension + 1) * (dimension + 2) // 2


@dataclass(frozen=True, eq=False)
class QuadraticModel:
    """Coefficients of the interpolating quadratic.

    ``quad`` is exactly symmetric by construction: each fitted cross-product
    coefficient is split evenly between the two mirrored entries.
    """

    const: float
    linear: np.ndarray
    quad: np.ndarray

    @property
    def dimension(self) -> int:
        return self.linear.size

    def __call__(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(self.const + self.linear @ x + x @ self.quad @ x)


@dataclass(frozen=True, eq=False)
class SurrogateResult:
    """Attractor proposed for the swarm, with fallback diagnostics.

    ``f_min`` is the actual objective value at ``x_min``, never the surrogate
    prediction. ``used_fallback`` is true exactly when ``fallback_reason`` is
    not ``"none"``.
    """

    x_min: np.ndarray
    f_min: float
    used_fallback: bool
    fallback_reason: str

    def __post_init__(self):
        if self.fallback_reason not in FALLBACK_REASONS:
            raise ValueError(f"unknown fallback reason {self.fallback_reason!r}")
        if self.used_fallback != (self.fallback_reason != FALLBACK_NONE):
            raise ValueError("used_fallback must mirror fallback_reason")


def build_design_matrix(points) -> np.ndarray:
    """Square interpolation matrix, one row per sample point.

    Column order: the constant 1, the n coordinates, then the products
    x_i * x_j for i <= j (outer index i, inner j running from i to n).
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    count, dim = pts.shape
    need = required_points(dim)
    if count != need:
        raise ValueError(f"expected {need} points for dimension {dim}, got {count}")
    m = np.empty((count, need))
    m[:, 0] = 1.0
    m[:, 1 : dim + 1] = pts
    col = dim + 1
    for i in range(dim):
        for j in range(i, dim):
            np.multiply(pts[:, i], pts[:, j], out=m[:, col])
            col += 1
    return m


def fit(points, values) -> QuadraticModel:
    """Interpolate the quadratic through exactly ``required_points(n)`` samples.

    The system is solved in centered, whitened coordinates (principal cloud
    axes scaled to unit extent) and the coefficients are mapped back exactly.
    This keeps the pivot-based singularity test a statement about the sample
    *geometry* (collinear or otherwise degenerate layouts) rather than the
    cluster scale: tightly clustered, strongly anisotropic samples around a
    good point are the normal late state of a converging swarm and must
    still fit cleanly.

    Raises :class:`SingularMatrixError` when the geometry is degenerate.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    vals = np.asarray(values, dtype=float)
    count, dim = pts.shape
    if vals.shape != (count,):
        raise ValueError("values must be a vector matching the point count")
    # z = W (x - center); exactly degenerate directions map to zero columns,
    # which the pivot test flags.
    center = pts.mean(axis=0)
    _, sigma, vt = np.linalg.svd(pts - center, full_matrices=False)
    sigma = np.where(sigma > sigma.max() * 1e-15, sigma, 1.0) if sigma.max() > 0 else np.ones(dim)
    w = vt / sigma[:, None]  # rows: principal directions over their extents
    matrix = build_design_matrix((pts - center) @ w.T)
    theta = solve_pivoted(matrix, vals)
    lin_z = theta[1 : dim + 1]
    quad_z = np.empty((dim, dim))
    idx = dim + 1
    for i in range(dim):
        quad_z[i, i] = theta[idx]
        idx += 1
        for j in range(i + 1, dim):
            half = 0.5 * theta[idx]
            quad_z[i, j] = half
            quad_z[j, i] = half
            idx += 1
    # Map q(z) = theta0 + lin_z.z + z.quad_z@z back to raw coordinates.
    lin_w = w.T @ lin_z
    quad = w.T @ quad_z @ w
    quad = 0.5 * (quad + quad.T)  # erase rounding asymmetry from the products
    quad_center = quad @ center
    linear = lin_w - 2.0 * quad_center
    const = float(theta[0] - lin_w @ center + center @ quad_center)
    return QuadraticModel(const=const, linear=linear, quad=quad)


def minimize(model: QuadraticModel) -> np.ndarray:
    """Unique stationary point of the quadratic, from a gradient-zero solve.

    Solves ``quad @ y = linear`` and returns ``-y / 2``; raises
    :class:`SingularMatrixError` when the quadratic term is singular.
    """
    y = solve_pivoted(model.quad, model.linear)
    return -0.5 * y


def surrogate_attractor(
    archive: Archive, objective: Objective, global_best: ArchiveEntry
) -> SurrogateResult:
    """Propose the swarm attractor from the archived best samples.

    Fit the quadratic to the archive, minimize it analytically, clip the
    minimizer to the bounds, and evaluate the actual objective there. The
    evaluated point is offered back to the archive. The minimizer is accepted
    only when its actual value strictly improves on ``global_best``;
    otherwise, and on any degeneracy, the result falls back to a known best
    point. Fallbacks are ordinary results, never errors.
    """
    if archive.size == 0:
        raise EmptyArchiveError("surrogate_attractor requires a nonempty archive")
    need = required_points(objective.dimension)
    if archive.size < need or archive.size < archive.capacity:
        # Not enough material yet: fall back to the overall best solution.
        return SurrogateResult(
            x_min=np.asarray(global_best.position, dtype=float),
            f_min=float(global_best.value),
            used_fallback=True,
            fallback_reason=FALLBACK_TOO_FEW_POINTS,
        )
    points, values = archive.sorted_points()
    try:
        model = fit(np.stack(points[:need]), values[:need])
    except SingularMatrixError:
        return _archive_fallback(archive, FALLBACK_SINGULAR_SYSTEM)
    try:
        x_min = minimize(model)
    except SingularMatrixError:
        return _archive_fallback(archive, FALLBACK_SINGULAR_QUADRATIC)
    x_min = clip_to_bounds(x_min, objective.bounds)
    f_min = float(objective.evaluate(x_min))
    archive.observe(x_min, f_min)  # rejects non-finite values itself
    if f_min < global_best.value:
        return SurrogateResult(
            x_min=x_min, f_min=f_min, used_fallback=False, fallback_reason=FALLBACK_NONE
        )
    return _archive_fallback(archive, FALLBACK_NON_IMPROVING)


def _archive_fallback(archive: Archive, reason: str) -> SurrogateResult:
    best = archive.best()
    return SurrogateResult(
        x_min=np.asarray(best.position, dtype=float),
        f_min=float(best.value),
        used_fallback=True,
        fallback_reason=reason,
    )
