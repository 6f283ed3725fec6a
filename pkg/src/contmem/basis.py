"""Basis families on the unit interval and their design matrices."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidArgumentError, OutOfDomainError

__all__ = ["BasisFamily", "eval_psi", "design_matrix"]

KINDS = ("rectangular", "gaussian")


@dataclass(frozen=True)
class BasisFamily:
    """``size`` functions on ``[0, 1]``.

    ``rectangular`` splits the interval into equal boxes ``[j/N, (j+1)/N)``,
    with ``t = 1`` belonging to the last box. ``gaussian`` places bumps of
    standard deviation ``width`` (default ``1/N``) at ``(j + 0.5)/N``.
    """

    kind: str = "rectangular"
    size: int = 1024
    width: Optional[float] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidArgumentError(f"basis kind must be one of {KINDS}, got {self.kind!r}")
        if int(self.size) != self.size or self.size < 1:
            raise InvalidArgumentError(f"basis size must be a positive integer, got {self.size}")
        object.__setattr__(self, "size", int(self.size))
        if self.kind == "gaussian":
            width = 1.0 / self.size if self.width is None else float(self.width)
            if not (np.isfinite(width) and width > 0):
                raise InvalidArgumentError(f"rbf width must be positive, got {width}")
            object.__setattr__(self, "width", width)

    @property
    def centers(self) -> np.ndarray:
        return (np.arange(self.size) + 0.5) / self.size


def _check_times(times):
    times = np.asarray(times, dtype=float)
    if not np.all(np.isfinite(times)):
        raise InvalidArgumentError("times must be finite")
    if np.any(times < 0) or np.any(times > 1):
        raise OutOfDomainError("times must lie in [0, 1]")
    return times


def design_matrix(basis: BasisFamily, times) -> np.ndarray:
    """Return the ``N x L`` matrix whose column ``l`` is ``psi(times[l])``."""
    times = _check_times(times)
    if times.ndim != 1:
        raise InvalidArgumentError("times must be a vector")
    n = basis.size
    if basis.kind == "rectangular":
        box = np.minimum(np.floor(times * n).astype(np.intp), n - 1)
        out = np.zeros((n, times.size))
        out[box, np.arange(times.size)] = 1.0
        return out
    diff = times[None, :] - basis.centers[:, None]
    return np.exp(-(diff * diff) / (2.0 * basis.width ** 2))


def eval_psi(basis: BasisFamily, t: float) -> np.ndarray:
    """Basis vector ``psi(t)`` of length ``N``."""
    t = _check_times(t)
    if t.ndim != 0:
        raise InvalidArgumentError("eval_psi takes a scalar time; use design_matrix")
    return design_matrix(basis, t[None])[:, 0]
