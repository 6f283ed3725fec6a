"""Quadrature on uniform grids, Gibbs normalization and inverse-CDF sampling.

Everything here is a pure function of its inputs. Functions that accept
"values on a grid" operate along the last axis, so a stack of curves
(e.g. heads x queries x grid points) can be handled in one call.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDensityError, InvalidArgumentError

__all__ = [
    "QuadratureGrid",
    "uniform_grid",
    "integrate",
    "normalized_exp",
    "cumulative_trapezoid",
    "inverse_cdf_sample",
    "histogram_sample",
    "stratified_quantiles",
]

DEFAULT_GRID_SIZE = 1000


@dataclass(frozen=True)
class QuadratureGrid:
    """Ordered points spanning ``[a, b]`` with trapezoidal weights."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        points = np.asarray(self.points, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if points.ndim != 1 or points.size < 2:
            raise InvalidArgumentError("a grid needs at least two points")
        if weights.shape != points.shape:
            raise InvalidArgumentError("weights and points differ in length")
        if not np.all(np.diff(points) > 0):
            raise InvalidArgumentError("grid points must be strictly increasing")
        if not np.all(weights > 0):
            raise InvalidArgumentError("trapezoid weights must be positive")
        points.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "weights", weights)

    @property
    def a(self) -> float:
        return float(self.points[0])

    @property
    def b(self) -> float:
        return float(self.points[-1])

    def __len__(self) -> int:
        return self.points.size


def uniform_grid(a: float, b: float, count: int = DEFAULT_GRID_SIZE) -> QuadratureGrid:
    """Evenly spaced grid on ``[a, b]`` (endpoints included).

    Endpoint weights are ``h/2`` and interior weights ``h`` with
    ``h = (b - a) / (count - 1)``.
    """
    if not (np.isfinite(a) and np.isfinite(b)):
        raise InvalidArgumentError(f"grid bounds must be finite, got ({a}, {b})")
    if not a < b:
        raise InvalidArgumentError(f"need a < b, got ({a}, {b})")
    if int(count) != count or count < 2:
        raise InvalidArgumentError(f"grid needs count >= 2, got {count}")
    count = int(count)
    points = np.linspace(a, b, count)
    h = (b - a) / (count - 1)
    weights = np.full(count, h)
    weights[0] = weights[-1] = h / 2
    return QuadratureGrid(points, weights)


def _check_on_grid(values, grid: QuadratureGrid) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.ndim == 0 or values.shape[-1] != len(grid):
        raise InvalidArgumentError(
            f"values have trailing length {values.shape[-1:] or 'scalar'}, grid has {len(grid)}"
        )
    if not np.all(np.isfinite(values)):
        raise InvalidArgumentError("values must be finite")
    return values


def integrate(values, grid: QuadratureGrid):
    """Trapezoidal integral ``sum_k w_k f(t_k)`` along the last axis."""
    values = _check_on_grid(values, grid)
    return values @ grid.weights


def normalized_exp(scores, grid: QuadratureGrid) -> np.ndarray:
    """Gibbs density ``exp(s) / integral(exp(s))`` on the grid.

    The maximum score is subtracted before exponentiating, so arbitrary
    finite scores are safe and adding a constant leaves the result unchanged.
    """
    scores = _check_on_grid(scores, grid)
    unnorm = np.exp(scores - scores.max(axis=-1, keepdims=True))
    return unnorm / (unnorm @ grid.weights)[..., None]


def cumulative_trapezoid(density, grid: QuadratureGrid) -> np.ndarray:
    """Running trapezoidal integral at each grid point (starts at 0)."""
    density = _check_on_grid(density, grid)
    h = np.diff(grid.points)
    segments = 0.5 * (density[..., 1:] + density[..., :-1]) * h
    out = np.zeros(density.shape)
    np.cumsum(segments, axis=-1, out=out[..., 1:])
    return out


def stratified_quantiles(count: int) -> np.ndarray:
    """Midpoint quantiles ``(i - 0.5) / count`` for ``i = 1..count``."""
    return (np.arange(count) + 0.5) / count


def _quantiles(count, mode, seed):
    if int(count) != count or count < 1:
        raise InvalidArgumentError(f"sample count must be >= 1, got {count}")
    count = int(count)
    if mode == "stratified":
        return stratified_quantiles(count)
    if mode == "random":
        rng = np.random.default_rng(seed)
        return np.sort(rng.uniform(size=count))
    raise InvalidArgumentError(f"unknown sampling mode {mode!r}")


def _invert_piecewise_linear(knots, cdf, quantiles):
    # cdf is nondecreasing with cdf[0] == 0; flat stretches are never selected
    # because side="left" lands on the first knot reaching the quantile.
    total = cdf[-1]
    if not np.isfinite(total) or total <= 0:
        raise DegenerateDensityError("density integrates to zero")
    targets = quantiles * total
    hi = np.clip(np.searchsorted(cdf, targets, side="left"), 1, cdf.size - 1)
    lo = hi - 1
    span = cdf[hi] - cdf[lo]
    frac = np.divide(targets - cdf[lo], span, out=np.zeros_like(targets), where=span > 0)
    frac = np.clip(frac, 0.0, 1.0)
    locations = knots[lo] + frac * (knots[hi] - knots[lo])
    return np.sort(locations)


def inverse_cdf_sample(density, grid: QuadratureGrid, count: int, mode: str = "stratified",
                       seed=None) -> np.ndarray:
    """Draw ``count`` sorted locations from a density sampled on ``grid``.

    The CDF is the running trapezoidal integral, linear between grid
    points, and is inverted exactly on each segment. ``"stratified"`` uses
    the quantiles ``(i - 0.5) / count``; ``"random"`` uses sorted uniform
    quantiles from ``numpy.random.default_rng(seed)``.
    """
    density = _check_on_grid(density, grid)
    if density.ndim != 1:
        raise InvalidArgumentError("expected a single density curve")
    if np.any(density < 0):
        raise InvalidArgumentError("density must be nonnegative")
    cdf = cumulative_trapezoid(density, grid)
    if cdf[-1] <= 0:
        raise DegenerateDensityError("density integrates to zero")
    if abs(cdf[-1] - 1.0) > 1e-6:
        raise InvalidArgumentError(f"density integrates to {cdf[-1]:.9g}, expected 1")
    return _invert_piecewise_linear(grid.points, cdf, _quantiles(count, mode, seed))


def histogram_sample(masses, count: int, mode: str = "stratified", seed=None) -> np.ndarray:
    """Sample locations in ``[0, 1]`` from a piecewise-constant density.

    ``masses[j]`` is the probability of the bin ``[j/D, (j+1)/D]``; the
    masses are renormalized, so they only need to be nonnegative.
    """
    masses = np.asarray(masses, dtype=float)
    if masses.ndim != 1 or masses.size < 1:
        raise InvalidArgumentError("masses must be a nonempty vector")
    if not np.all(np.isfinite(masses)) or np.any(masses < 0):
        raise InvalidArgumentError("masses must be finite and nonnegative")
    knots = np.linspace(0.0, 1.0, masses.size + 1)
    cdf = np.concatenate(([0.0], np.cumsum(masses)))
    return _invert_piecewise_linear(knots, cdf, _quantiles(count, mode, seed))
