"""Fit a continuous signal to a handful of frames and attend over it.

Shows the trapezoid grid, the Gibbs density produced by one query, and how
the continuous read-out approaches a discrete value when the density peaks.
"""

import numpy as np

from contmem import (BasisFamily, ProjectionSet, fit, frame_times, integrate, ltm_attention,
                     uniform_grid)

grid = uniform_grid(0.0, 1.0, 1000)
print(f"grid: {len(grid)} points, weights sum to {grid.weights.sum():.12f}")

# eight frames, each with its own marker channel so a query can pick one out
rng = np.random.default_rng(0)
frames = np.hstack([rng.standard_normal((8, 4)), np.eye(8)])
signal = fit(frames, frame_times(8), BasisFamily("rectangular", 8), ridge=1e-8)
proj = ProjectionSet.identity(frames.shape[1])

for strength in (1.0, 5.0, 50.0):
    query = np.zeros(frames.shape[1])
    query[4 + 5] = strength  # marker of frame 5
    Z, profile = ltm_attention(query[None], signal, proj, grid)
    density = profile.densities[0, 0]
    err = np.abs(Z[0] - frames[5]).max()
    print(f"strength {strength:5.1f}: density integrates to {integrate(density, grid):.9f}, "
          f"peak {density.max():7.3f}, distance to frame 5 = {err:.2e}")
