"""Watch the memory contract old content toward t = 0 as chunks arrive.

A ramp is stored first; every later chunk squeezes it into [0, tau] and the
new frames take (tau, 1]. After k steps the ramp lives on [0, tau^k].
"""

import numpy as np

from contmem import PipelineConfig, consolidate, evaluate_many, init_memory

cfg = PipelineConfig(M=64, P=1, e=1, R=1, H=1, N=64, tau=0.5, ridge=1e-6, sampling="uniform", T=128)
state = consolidate(init_memory(cfg), np.linspace(0, 1, 64)[:, None])
probe = np.array([0.1, 0.3, 0.5, 0.7, 0.9])
print("chunk 1:", np.round(evaluate_many(state.signal, probe)[:, 0], 3))

for c in range(2, 5):
    state = consolidate(state, np.full((64, 1), -1.0))  # new chunks are a flat -1
    scaled = probe * cfg.tau ** (c - 1)
    print(f"chunk {c}: ramp read back at tau^{c - 1} * t:",
          np.round(evaluate_many(state.signal, scaled)[:, 0], 3),
          f"| new content at t=0.9: {evaluate_many(state.signal, [0.9])[0, 0]:+.3f}")

print(f"state holds {state.nbytes()} bytes after {state.chunks_seen} chunks")
