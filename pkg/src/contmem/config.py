"""Run configuration shared by the memory, pipeline and command-line layers."""

import dataclasses
import json
from dataclasses import dataclass
from typing import Optional

from .basis import KINDS, BasisFamily
from .errors import ConfigError

__all__ = ["PipelineConfig"]


@dataclass(frozen=True)
class PipelineConfig:
    """All knobs of a streaming run.

    Defaults follow the long-video setting: 8 chunks of 256 frames, 1024
    rectangular basis functions, contraction 0.75 and a 1000-point
    trapezoidal grid. ``T = None`` means "as many past samples as frames
    per chunk".
    """

    M: int = 256
    P: int = 32
    e: int = 768
    R: int = 32
    H: int = 12
    N: int = 1024
    ridge: float = 1e-3
    tau: float = 0.75
    alpha: float = 0.9
    T: Optional[int] = None
    D: int = 64
    G: int = 1000
    sampling: str = "sticky"
    draw: str = "stratified"
    basis: str = "rectangular"
    rbf_width: Optional[float] = None
    depth: int = 1
    density_layers: str = "last"
    stm_only_first_chunk: bool = False
    e_out: Optional[int] = None
    chunks: int = 8
    seed: int = 0

    def __post_init__(self):
        for name in ("M", "P", "e", "R", "H", "N", "D", "depth", "chunks"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        if self.G < 2:
            raise ConfigError(f"G must be >= 2, got {self.G}")
        if self.T is not None and (not isinstance(self.T, int) or self.T < 1):
            raise ConfigError(f"T must be a positive integer or null, got {self.T!r}")
        if self.e_out is not None and self.e_out < 1:
            raise ConfigError(f"e_out must be positive, got {self.e_out}")
        if self.e % self.H:
            raise ConfigError(f"e={self.e} is not divisible by H={self.H}")
        if not 0.0 < self.tau < 1.0:
            raise ConfigError(f"tau must lie in (0, 1), got {self.tau}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not self.ridge >= 0:
            raise ConfigError(f"ridge must be >= 0, got {self.ridge}")
        if self.sampling not in ("uniform", "sticky"):
            raise ConfigError(f"sampling must be 'uniform' or 'sticky', got {self.sampling!r}")
        if self.draw not in ("stratified", "random"):
            raise ConfigError(f"draw must be 'stratified' or 'random', got {self.draw!r}")
        if self.basis not in KINDS:
            raise ConfigError(f"basis must be one of {KINDS}, got {self.basis!r}")
        if self.density_layers not in ("last", "all"):
            raise ConfigError(f"density_layers must be 'last' or 'all', got {self.density_layers!r}")

    @property
    def past_samples(self) -> int:
        return self.M if self.T is None else self.T

    @property
    def out_dim(self) -> int:
        return self.e if self.e_out is None else self.e_out

    def basis_family(self) -> BasisFamily:
        return BasisFamily(self.basis, self.N, self.rbf_width)

    def replace(self, **changes) -> "PipelineConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_json(cls, text: str) -> "PipelineConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(data)
