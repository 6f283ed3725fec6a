"""Long-term memory consolidation.

A :class:`MemoryState` is an immutable value. Each new chunk contracts the
stored signal into ``[0, tau]``, resamples it at ``T`` locations (evenly or
following the previous attention histogram), appends the new frames on
``(tau, 1]`` and refits.
"""

import dataclasses
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .attention import DensityProfile
from .basis import BasisFamily
from .config import PipelineConfig
from .errors import ConfigError, EmptyMemoryError, InvalidArgumentError
from .numerics import cumulative_trapezoid, histogram_sample, stratified_quantiles
from .signal import ContinuousSignal, evaluate_many, fit, frame_times

__all__ = [
    "MemoryState",
    "init_memory",
    "sample_past",
    "consolidate",
    "record_density",
    "bin_masses",
    "top_density_intervals",
]


@dataclass(frozen=True)
class MemoryState:
    basis: BasisFamily
    tau: float = 0.75
    T: int = 256
    sampling: str = "sticky"
    D: int = 64
    ridge: float = 1e-3
    draw: str = "stratified"
    seed: int = 0
    signal: Optional[ContinuousSignal] = None
    histogram: Optional[np.ndarray] = None
    chunks_seen: int = 0

    def __post_init__(self):
        if not 0.0 < self.tau < 1.0:
            raise ConfigError(f"tau must lie in (0, 1), got {self.tau}")
        if self.T < 1 or self.D < 1:
            raise ConfigError("T and D must be positive")
        if self.sampling not in ("uniform", "sticky"):
            raise ConfigError(f"unknown sampling {self.sampling!r}")
        if (self.signal is None) != (self.chunks_seen == 0):
            raise InvalidArgumentError("signal must be empty exactly when no chunk was seen")
        if self.histogram is not None:
            hist = np.array(self.histogram, dtype=float)
            if hist.shape != (self.D,) or np.any(hist < 0) or abs(hist.sum() - 1) > 1e-9:
                raise InvalidArgumentError("histogram must be D nonnegative masses summing to 1")
            hist.setflags(write=False)
            object.__setattr__(self, "histogram", hist)

    @property
    def empty(self) -> bool:
        return self.signal is None

    def nbytes(self) -> int:
        """Bytes held by the state's arrays."""
        total = 0 if self.signal is None else self.signal.coefficients.nbytes
        return total + (0 if self.histogram is None else self.histogram.nbytes)

    def replace(self, **changes) -> "MemoryState":
        return dataclasses.replace(self, **changes)


def init_memory(config: PipelineConfig) -> MemoryState:
    """Empty memory for a run described by ``config``."""
    return MemoryState(
        basis=config.basis_family(),
        tau=config.tau,
        T=config.past_samples,
        sampling=config.sampling,
        D=config.D,
        ridge=config.ridge,
        draw=config.draw,
        seed=config.seed,
    )


def _source_locations(state: MemoryState) -> np.ndarray:
    hist = state.histogram
    sticky = state.sampling == "sticky" and hist is not None and not np.all(hist == hist[0])
    seed = (state.seed, state.chunks_seen)
    if sticky:
        return histogram_sample(hist, state.T, state.draw, seed)
    # uniform mode, or no informative histogram yet
    if state.draw == "stratified":
        return stratified_quantiles(state.T)
    return np.sort(np.random.default_rng(seed).uniform(size=state.T))


def sample_past(state: MemoryState):
    """Resample the stored signal for consolidation.

    Returns ``(values, targets)``: ``T x e`` signal values at source locations
    ``u`` in ``[0, 1]`` and their contracted positions ``tau * u``.
    """
    if state.empty:
        raise EmptyMemoryError("memory holds no signal yet")
    u = _source_locations(state)
    return evaluate_many(state.signal, u), state.tau * u


def consolidate(state: MemoryState, X_new) -> MemoryState:
    """Merge ``M x e`` new frame embeddings into the memory.

    The first chunk is fit on its own at the frame midpoints. Later chunks
    are placed at ``tau + (1 - tau) * frame_times(M)`` after the resampled
    past. The stored histogram is cleared until :func:`record_density`
    is called with the next attention profile.
    """
    X_new = np.asarray(X_new, dtype=float)
    if X_new.ndim != 2 or X_new.shape[0] < 1:
        raise InvalidArgumentError(f"new frames must be an M x e matrix, got {X_new.shape}")
    if not np.all(np.isfinite(X_new)):
        raise InvalidArgumentError("new frames must be finite")
    times_new = frame_times(X_new.shape[0])
    if state.empty:
        X, times = X_new, times_new
    else:
        if X_new.shape[1] != state.signal.dim:
            raise InvalidArgumentError(f"new frames have dim {X_new.shape[1]}, memory has {state.signal.dim}")
        past, targets = sample_past(state)
        X = np.vstack([past, X_new])
        times = np.concatenate([targets, state.tau + (1.0 - state.tau) * times_new])
    signal = fit(X, times, state.basis, state.ridge)
    return state.replace(signal=signal, histogram=None, chunks_seen=state.chunks_seen + 1)


def bin_masses(densities, grid, D: int) -> np.ndarray:
    """Trapezoidal mass of each density curve over ``D`` equal bins of ``[0, 1]``.

    The density is taken as the linear interpolant of its grid samples (the
    function the trapezoid rule integrates exactly); bin edges falling inside
    a grid segment get the exact partial integral of that interpolant.
    """
    densities = np.asarray(densities, dtype=float)
    cdf = cumulative_trapezoid(densities, grid)
    t = grid.points
    edges = np.linspace(grid.a, grid.b, D + 1)
    k = np.clip(np.searchsorted(t, edges, side="right") - 1, 0, t.size - 2)
    h = t[k + 1] - t[k]
    x = edges - t[k]
    lo, hi = densities[..., k], densities[..., k + 1]
    at_edges = cdf[..., k] + lo * x + (hi - lo) * x * x / (2 * h)
    return np.diff(at_edges, axis=-1)


def record_density(state: MemoryState, profile: DensityProfile, D: Optional[int] = None) -> MemoryState:
    """Store the attention histogram ``sum_h sum_i mass of p_i^h in bin j`` (normalized)."""
    D = state.D if D is None else D
    masses = bin_masses(profile.densities, profile.grid, D).sum(axis=(0, 1))
    masses = np.clip(masses, 0.0, None)
    hist = masses / masses.sum()
    return state.replace(histogram=hist, D=D)


def top_density_intervals(profile: DensityProfile, k: int, frame_count: int):
    """The ``k`` frames with the highest aggregated density.

    Frame ``f`` sits at ``(f + 0.5) / frame_count``; its density is read off
    the grid by linear interpolation. Returns ``[(frame, density), ...]`` in
    descending density, ties going to the lower frame index.
    """
    if k < 1 or k > frame_count:
        raise InvalidArgumentError(f"need 1 <= k <= frame_count, got k={k}, frame_count={frame_count}")
    agg = profile.aggregate()
    values = np.interp(frame_times(frame_count), profile.grid.points, agg)
    order = np.lexsort((np.arange(frame_count), -values))[:k]
    return [(int(f), float(values[f])) for f in order]
