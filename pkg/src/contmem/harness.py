"""Synthetic needle-in-a-stream scenarios and brute-force references.

A needle is a fixed direction added to a span of frames in one chunk of an
otherwise Gaussian stream. After the whole stream has been consolidated, the
needle occupies a known sub-interval of the memory's unit interval (each
later chunk contracts it by ``tau``); :func:`evaluate_retrieval` measures how
much attention density lands there.
"""

import dataclasses
import json
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .attention import DensityProfile, ProjectionSet, ltm_attention
from .config import PipelineConfig
from .errors import ConfigError, InvalidArgumentError
from .memory import top_density_intervals
from .numerics import uniform_grid
from .pipeline import run_stream
from .signal import FrameChunk

__all__ = [
    "SyntheticStreamSpec",
    "GroundTruth",
    "RetrievalReport",
    "generate_stream",
    "full_attention_oracle",
    "needle_interval",
    "evaluate_retrieval",
    "aligned_queries",
    "scenario_config",
    "run_needle_scenario",
    "compare_variants",
]


@dataclass(frozen=True)
class SyntheticStreamSpec:
    chunks: int = 8
    M: int = 32
    P: int = 1
    e: int = 16
    noise: float = 1.0
    needle_chunk: int = 3
    needle_start: int = 8
    needle_stop: int = 24
    direction: Optional[Tuple[float, ...]] = None
    amplitude: float = 4.0
    seed: int = 0

    def __post_init__(self):
        for name in ("chunks", "M", "P", "e"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if not 0 <= self.needle_chunk < self.chunks:
            raise ConfigError(f"needle_chunk {self.needle_chunk} outside 0..{self.chunks - 1}")
        if not 0 <= self.needle_start < self.needle_stop <= self.M:
            raise ConfigError(f"needle frames [{self.needle_start}, {self.needle_stop}) outside 0..{self.M}")
        if self.noise < 0:
            raise ConfigError("noise scale must be nonnegative")
        if self.direction is not None:
            d = np.asarray(self.direction, dtype=float)
            if d.shape != (self.e,):
                raise ConfigError(f"direction must have {self.e} entries")
            if abs(np.linalg.norm(d) - 1.0) > 1e-9:
                raise ConfigError("direction must have unit norm")
            object.__setattr__(self, "direction", tuple(float(x) for x in d))

    def unit_direction(self) -> np.ndarray:
        if self.direction is not None:
            return np.array(self.direction)
        d = np.random.default_rng((self.seed, 1)).standard_normal(self.e)
        return d / np.linalg.norm(d)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "SyntheticStreamSpec":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown scenario keys: {', '.join(unknown)}")
        data = dict(data)
        if data.get("direction") is not None:
            data["direction"] = tuple(data["direction"])
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


@dataclass(frozen=True)
class GroundTruth:
    chunks: int
    frames_per_chunk: int
    needle_chunk: int
    needle_start: int
    needle_stop: int
    direction: np.ndarray
    amplitude: float

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["direction"] = [float(x) for x in self.direction]
        return out


@dataclass
class RetrievalReport:
    interval: Tuple[float, float]
    needle_mass: float
    needle_length: float
    needle_density: float
    background_density: float
    ratio: Optional[float]
    hit_rate: Optional[float]
    below_resolution: bool = False

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def generate_stream(spec: SyntheticStreamSpec) -> Tuple[List[FrameChunk], GroundTruth]:
    """Gaussian noise chunks with the needle direction added over its span."""
    rng = np.random.default_rng(spec.seed)
    direction = spec.unit_direction()
    chunks = []
    for c in range(spec.chunks):
        emb = spec.noise * rng.standard_normal((spec.M, spec.P, spec.e))
        if c == spec.needle_chunk:
            emb[spec.needle_start:spec.needle_stop] += spec.amplitude * direction
        chunks.append(FrameChunk(emb, chunk_index=c))
    truth = GroundTruth(spec.chunks, spec.M, spec.needle_chunk, spec.needle_start,
                        spec.needle_stop, direction, spec.amplitude)
    return chunks, truth


def full_attention_oracle(all_frames, queries, proj: ProjectionSet, return_weights: bool = False):
    """Plain softmax cross-attention over every frame at once.

    Written head by head with explicit loops, deliberately sharing no code
    with the streaming attention path.
    """
    X = np.asarray(all_frames, dtype=float)
    Y = np.asarray(queries, dtype=float)
    d = proj.head_dim
    heads_out = []
    all_weights = []
    for h in range(proj.heads):
        q = Y @ proj.query[h]
        k = X @ proj.key[h]
        v = X @ proj.value[h]
        out = np.empty((Y.shape[0], d))
        w_h = np.empty((Y.shape[0], X.shape[0]))
        for i in range(Y.shape[0]):
            logits = k @ q[i] / np.sqrt(d)
            w = np.exp(logits - logits.max())
            w /= w.sum()
            w_h[i] = w
            out[i] = w @ v
        heads_out.append(out)
        all_weights.append(w_h)
    Z = np.concatenate(heads_out, axis=1) @ proj.output
    if return_weights:
        return Z, np.stack(all_weights)
    return Z


def needle_interval(truth: GroundTruth, tau: float, chunks_processed: Optional[int] = None):
    """Exact image of the needle frames in the final memory coordinates.

    Frames of chunk ``c`` enter the memory at ``tau + (1 - tau) * [f/M, (f+1)/M]``
    (or ``[f/M, (f+1)/M]`` for the first chunk); every later chunk maps
    ``p -> tau * p``.
    """
    total = truth.chunks if chunks_processed is None else chunks_processed
    if truth.needle_chunk >= total:
        raise InvalidArgumentError("needle chunk not processed yet")
    M = truth.frames_per_chunk
    lo, hi = truth.needle_start / M, truth.needle_stop / M
    if truth.needle_chunk > 0:
        lo, hi = tau + (1 - tau) * lo, tau + (1 - tau) * hi
    shrink = tau ** (total - 1 - truth.needle_chunk)
    return lo * shrink, hi * shrink


def evaluate_retrieval(profile: DensityProfile, truth: GroundTruth, tau: float,
                       queries: Optional[Sequence[int]] = None, resolution: Optional[int] = None,
                       chunks_processed: Optional[int] = None) -> RetrievalReport:
    """Density mass on the mapped needle interval versus the rest.

    ``ratio`` compares density per unit length inside and outside the
    interval (1.0 for a uniform density). ``hit_rate`` is the fraction of the
    top-k of ``resolution`` evenly spaced positions that fall inside, with k
    the number of positions inside. An interval narrower than one position
    is reported as below resolution.
    """
    queries = list(range(profile.queries)) if queries is None else list(queries)
    sub = DensityProfile(profile.grid, profile.densities[:, queries])
    density = sub.aggregate()
    grid = profile.grid
    lo, hi = needle_interval(truth, tau, chunks_processed)
    resolution = len(grid) - 1 if resolution is None else resolution
    length = hi - lo
    below = length < 1.0 / resolution
    fine_t = np.linspace(lo, hi, 257)
    inside = float(np.trapezoid(np.interp(fine_t, grid.points, density), fine_t))
    total = float(density @ grid.weights)
    inside = min(max(inside, 0.0), total)
    needle_density = inside / length
    background = (total - inside) / (1.0 - length)
    ratio = None if below or background == 0 else needle_density / background

    hit_rate = None
    if not below:
        centers = (np.arange(resolution) + 0.5) / resolution
        in_mask = (centers >= lo) & (centers < hi)
        k = max(int(in_mask.sum()), 1)
        top = top_density_intervals(sub, k, resolution)
        hit_rate = sum(in_mask[f] for f, _ in top) / k
    return RetrievalReport((lo, hi), inside, length, needle_density, background, ratio,
                           hit_rate, below)


def aligned_queries(direction, proj: ProjectionSet, scale: float = 1.0) -> np.ndarray:
    """Query seed whose projected query equals ``scale * direction`` projected as a key.

    With orthogonal projections ``y = scale * d W_K W_Q^T`` satisfies
    ``y W_Q^h = scale * d W_K^h`` for every head.
    """
    d = np.asarray(direction, dtype=float)
    wq, wk = proj.full("query"), proj.full("key")
    return scale * np.linalg.solve(wq.T, wk.T @ d)


def scenario_config(spec: SyntheticStreamSpec, **overrides) -> PipelineConfig:
    """Pipeline settings for needle scenarios (small enough for tests)."""
    base = dict(M=spec.M, P=spec.P, e=spec.e, R=4, H=2, N=64, tau=0.75, alpha=0.9,
                D=64, G=1000, chunks=spec.chunks, seed=spec.seed)
    base.update(overrides)
    return PipelineConfig(**base)


def _scenario_queries(truth: GroundTruth, proj: ProjectionSet, cfg: PipelineConfig, scale: float):
    # row 0 aligned with the needle, the rest random unit controls
    rng = np.random.default_rng((cfg.seed, 20_000))
    controls = rng.standard_normal((cfg.R - 1, cfg.e))
    controls /= np.linalg.norm(controls, axis=1, keepdims=True)
    return np.vstack([aligned_queries(truth.direction, proj, scale)[None], controls])


def run_needle_scenario(spec: SyntheticStreamSpec, cfg: Optional[PipelineConfig] = None,
                        query_scale: float = 1.0, fine_grid: Optional[int] = None) -> dict:
    """Stream the scenario once and score the final LTM density.

    Returns a dict with the aligned-query report, the control-query report,
    the discrete full-attention reference and, if ``fine_grid`` is given,
    the same report recomputed on a finer quadrature grid.
    """
    cfg = scenario_config(spec) if cfg is None else cfg
    chunks, truth = generate_stream(spec)
    proj = ProjectionSet.random(cfg.e, cfg.H, cfg.out_dim, seed=(cfg.seed, 0))
    Y = _scenario_queries(truth, proj, cfg, query_scale)
    result = run_stream(chunks, cfg, [proj] * cfg.depth, Y, keep_diagnostics=False)
    state = result.state
    grid = uniform_grid(0.0, 1.0, cfg.G)
    _, profile = ltm_attention(Y, state.signal, proj, grid)
    out = {
        "aligned": evaluate_retrieval(profile, truth, cfg.tau, [0], resolution=cfg.N),
        "control": evaluate_retrieval(profile, truth, cfg.tau, range(1, cfg.R), resolution=cfg.N),
        "tokens": result.tokens,
    }

    # discrete reference: per-frame attention of the aligned query over all frames
    frames = np.concatenate([c.embeddings.mean(axis=1) for c in chunks])
    _, weights = full_attention_oracle(frames, Y[:1], proj, return_weights=True)
    w = weights[:, 0].mean(axis=0)
    start = truth.needle_chunk * truth.frames_per_chunk
    idx = np.arange(start + truth.needle_start, start + truth.needle_stop)
    needle_w = w[idx].sum()
    out["full_attention_ratio"] = float((needle_w / idx.size) / ((1 - needle_w) / (w.size - idx.size)))

    if fine_grid:
        fine = uniform_grid(0.0, 1.0, fine_grid)
        _, fine_profile = ltm_attention(Y, state.signal, proj, fine)
        out["aligned_fine"] = evaluate_retrieval(fine_profile, truth, cfg.tau, [0], resolution=cfg.N)
    return out


def compare_variants(spec: SyntheticStreamSpec, cfg: Optional[PipelineConfig] = None,
                     query_scale: float = 1.0, fine_grid: Optional[int] = None) -> dict:
    """Aligned-query retrieval for sticky and uniform sampling plus the STM-only view.

    Without LTM the final context sees only the last chunk, so unless the
    needle sits there its mass is zero.
    """
    cfg = scenario_config(spec) if cfg is None else cfg
    sticky = run_needle_scenario(spec, cfg.replace(sampling="sticky"), query_scale, fine_grid)
    uniform = run_needle_scenario(spec, cfg.replace(sampling="uniform"), query_scale, fine_grid)
    last_chunk_has_needle = spec.needle_chunk == spec.chunks - 1
    return {
        "sticky": sticky["aligned"].to_dict(),
        "sticky_fine": sticky["aligned_fine"].to_dict() if fine_grid else None,
        "uniform": uniform["aligned"].to_dict(),
        "uniform_fine": uniform["aligned_fine"].to_dict() if fine_grid else None,
        "control": sticky["control"].to_dict(),
        "no_ltm": {"needle_visible": last_chunk_has_needle},
        "full_attention_ratio": sticky["full_attention_ratio"],
    }


def dumps_report(report: dict) -> str:
    return json.dumps(report, indent=2, default=float)
