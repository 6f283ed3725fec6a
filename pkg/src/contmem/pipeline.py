"""Single-pass stream processing: STM + LTM per chunk, blended and averaged."""

import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, List, Optional, Sequence, Union

import numpy as np

from .attention import DensityProfile, ProjectionSet, ltm_attention, stm_attention
from .basis import design_matrix
from .config import PipelineConfig
from .errors import EmptyMemoryError, InvalidArgumentError
from .memory import MemoryState, consolidate, init_memory, record_density
from .numerics import QuadratureGrid, uniform_grid
from .signal import FrameChunk, pool_patches

__all__ = [
    "ChunkDiagnostics",
    "StreamResult",
    "default_projections",
    "default_queries",
    "process_chunk",
    "run_stream",
    "state_nbytes",
]


@dataclass
class ChunkDiagnostics:
    chunk_index: int
    frames: int
    profile: DensityProfile
    histogram: np.ndarray
    tokens: np.ndarray
    seconds: float


@dataclass
class StreamResult:
    tokens: np.ndarray
    diagnostics: List[ChunkDiagnostics] = field(default_factory=list)
    chunks: int = 0
    state: Optional[MemoryState] = None


def default_projections(cfg: PipelineConfig) -> List[ProjectionSet]:
    """One seeded orthogonal projection set per layer."""
    return [ProjectionSet.random(cfg.e, cfg.H, cfg.out_dim, seed=(cfg.seed, layer))
            for layer in range(cfg.depth)]


def default_queries(cfg: PipelineConfig) -> np.ndarray:
    """Seeded Gaussian query seeds, ``R x e``, scaled to unit row norm."""
    rng = np.random.default_rng((cfg.seed, 10_000))
    Y = rng.standard_normal((cfg.R, cfg.e))
    return Y / np.linalg.norm(Y, axis=1, keepdims=True)


def _as_layers(proj) -> List[ProjectionSet]:
    return [proj] if isinstance(proj, ProjectionSet) else list(proj)


class _Context:
    # per-run constants derived once from the config
    def __init__(self, cfg: PipelineConfig):
        self.grid: QuadratureGrid = uniform_grid(0.0, 1.0, cfg.G)
        self.psi = design_matrix(cfg.basis_family(), self.grid.points)


def process_chunk(state: MemoryState, running: Optional[np.ndarray], chunk: FrameChunk,
                  cfg: PipelineConfig, proj: Union[ProjectionSet, Sequence[ProjectionSet]],
                  queries, _ctx: Optional[_Context] = None):
    """Advance the stream by one chunk.

    Returns ``(state, running, Z, diagnostics)``: the memory after
    consolidation and histogram update, the running token average, the
    blended context of the last layer (``R x e``) and per-chunk diagnostics.
    """
    started = time.perf_counter()
    layers = _as_layers(proj)
    if len(layers) != cfg.depth:
        raise InvalidArgumentError(f"expected {cfg.depth} projection sets, got {len(layers)}")
    if chunk.dim != cfg.e:
        raise InvalidArgumentError(f"chunk dim {chunk.dim} != configured e={cfg.e}")
    ctx = _ctx or _Context(cfg)

    state = consolidate(state, pool_patches(chunk))
    tokens = chunk.tokens()
    use_ltm = not (cfg.stm_only_first_chunk and state.chunks_seen == 1)

    Y = np.asarray(queries, dtype=float)
    profiles = []
    for layer in layers:
        z_stm = stm_attention(Y, tokens, layer)
        z_ltm, profile = ltm_attention(Y, state.signal, layer, ctx.grid, ctx.psi)
        profiles.append(profile)
        Y = cfg.alpha * z_stm + (1.0 - cfg.alpha) * z_ltm if use_ltm else z_stm
    Z = Y

    if cfg.density_layers == "all" and len(profiles) > 1:
        recorded = DensityProfile(ctx.grid, np.concatenate([p.densities for p in profiles]))
    else:
        recorded = profiles[-1]
    state = record_density(state, recorded, cfg.D)

    E = Z @ layers[-1].token
    c = state.chunks_seen
    running = E.copy() if running is None or c == 1 else ((c - 1) / c) * running + (1.0 / c) * E
    diag = ChunkDiagnostics(chunk.chunk_index, chunk.frames, profiles[-1], state.histogram, E,
                            time.perf_counter() - started)
    return state, running, Z, diag


def run_stream(chunks: Iterable[FrameChunk], cfg: PipelineConfig,
               proj: Union[ProjectionSet, Sequence[ProjectionSet], None] = None,
               queries=None, keep_diagnostics: bool = True,
               on_chunk: Optional[Callable[[ChunkDiagnostics], None]] = None) -> StreamResult:
    """Fold :func:`process_chunk` over the stream in one pass.

    With ``keep_diagnostics=False`` nothing per-chunk is retained (pass
    ``on_chunk`` to stream diagnostics elsewhere), so the held state does
    not grow with the stream length.
    """
    proj = default_projections(cfg) if proj is None else proj
    queries = default_queries(cfg) if queries is None else queries
    ctx = _Context(cfg)
    state = init_memory(cfg)
    running = None
    result = StreamResult(tokens=None)
    for chunk in chunks:
        state, running, _, diag = process_chunk(state, running, chunk, cfg, proj, queries, ctx)
        if keep_diagnostics:
            result.diagnostics.append(diag)
        if on_chunk is not None:
            on_chunk(diag)
    if running is None:
        raise EmptyMemoryError("the stream contained no chunks")
    result.tokens = running
    result.chunks = state.chunks_seen
    result.state = state
    return result


def state_nbytes(state: MemoryState, running: Optional[np.ndarray] = None) -> int:
    """Bytes of per-stream state carried between chunks."""
    return state.nbytes() + (0 if running is None else running.nbytes)
