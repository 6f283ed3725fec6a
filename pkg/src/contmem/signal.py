"""Continuous signals fit to frame embeddings by ridge regression."""

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .basis import BasisFamily, design_matrix
from .errors import InvalidArgumentError, SingularMatrixError

__all__ = [
    "ContinuousSignal",
    "FrameChunk",
    "pool_patches",
    "frame_times",
    "fit",
    "evaluate",
    "evaluate_many",
    "DEFAULT_RIDGE",
]

DEFAULT_RIDGE = 1e-3


@dataclass(frozen=True)
class ContinuousSignal:
    """``x(t) = B^T psi(t)`` with coefficient matrix ``B`` of shape ``N x e``."""

    coefficients: np.ndarray
    basis: BasisFamily
    ridge: float = DEFAULT_RIDGE

    def __post_init__(self):
        coef = np.array(self.coefficients, dtype=float)
        if coef.ndim != 2 or coef.shape[0] != self.basis.size:
            raise InvalidArgumentError(
                f"coefficients must be {self.basis.size} x e, got shape {coef.shape}"
            )
        if not np.all(np.isfinite(coef)):
            raise InvalidArgumentError("coefficients must be finite")
        coef.setflags(write=False)
        object.__setattr__(self, "coefficients", coef)

    @property
    def dim(self) -> int:
        return self.coefficients.shape[1]


@dataclass(frozen=True)
class FrameChunk:
    """One chunk of the stream: ``M x P x e`` patch embeddings."""

    embeddings: np.ndarray
    chunk_index: int = 0

    def __post_init__(self):
        emb = np.asarray(self.embeddings, dtype=float)
        if emb.ndim == 2:
            emb = emb[:, None, :]
        if emb.ndim != 3 or min(emb.shape) < 1:
            raise InvalidArgumentError(f"chunk must be M x P x e with M, P, e >= 1, got {emb.shape}")
        if not np.all(np.isfinite(emb)):
            raise InvalidArgumentError("chunk embeddings must be finite")
        if self.chunk_index < 0:
            raise InvalidArgumentError("chunk_index must be nonnegative")
        object.__setattr__(self, "embeddings", emb)

    @property
    def frames(self) -> int:
        return self.embeddings.shape[0]

    @property
    def patches(self) -> int:
        return self.embeddings.shape[1]

    @property
    def dim(self) -> int:
        return self.embeddings.shape[2]

    def tokens(self) -> np.ndarray:
        """All ``M * P`` patch embeddings as rows."""
        return self.embeddings.reshape(-1, self.dim)


def pool_patches(chunk: FrameChunk) -> np.ndarray:
    """Average the P patch embeddings of each frame: ``M x e``."""
    return chunk.embeddings.mean(axis=1)


def frame_times(count: int) -> np.ndarray:
    """Midpoints ``(m + 0.5) / M`` of M equal cells of the unit interval."""
    if int(count) != count or count < 1:
        raise InvalidArgumentError(f"frame count must be >= 1, got {count}")
    return (np.arange(int(count)) + 0.5) / count


def _solve_spd(gram, rhs, ridge):
    a = gram + ridge * np.eye(gram.shape[0])
    try:
        factor = scipy.linalg.cho_factor(a, lower=True, check_finite=False)
        sol = scipy.linalg.cho_solve(factor, rhs, check_finite=False)
    except np.linalg.LinAlgError:
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
                sol = scipy.linalg.solve(a, rhs, assume_a="sym", check_finite=False)
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgWarning) as exc:
            raise SingularMatrixError(f"ridge system is singular (lambda={ridge})") from exc
    if not np.all(np.isfinite(sol)):
        raise SingularMatrixError(f"ridge solve produced non-finite values (lambda={ridge})")
    return sol


def fit(X, times, basis: BasisFamily, ridge: float = DEFAULT_RIDGE) -> ContinuousSignal:
    """Ridge-regress the rows of ``X`` (``S x e``) placed at ``times``.

    Solves ``B = (F F^T + lambda I)^{-1} F X`` with ``F`` the ``N x S``
    design matrix. When ``N > S`` the equivalent ``S x S`` system
    ``B = F (F^T F + lambda I)^{-1} X`` is solved instead.
    """
    X = np.asarray(X, dtype=float)
    times = np.asarray(times, dtype=float)
    if X.ndim != 2 or X.shape[0] < 1:
        raise InvalidArgumentError(f"X must be a nonempty S x e matrix, got shape {X.shape}")
    if times.shape != (X.shape[0],):
        raise InvalidArgumentError(f"expected {X.shape[0]} times, got shape {times.shape}")
    if not np.all(np.isfinite(X)):
        raise InvalidArgumentError("X must be finite")
    if not (np.isfinite(ridge) and ridge >= 0):
        raise InvalidArgumentError(f"ridge must be >= 0, got {ridge}")
    if np.any(np.diff(times) < 0):
        raise InvalidArgumentError("times must be nondecreasing")
    F = design_matrix(basis, times)
    n, s = F.shape
    if n > s:
        if ridge == 0:
            # F F^T has rank <= S < N
            raise SingularMatrixError("lambda = 0 with more basis functions than samples")
        B = F @ _solve_spd(F.T @ F, X, ridge)
    else:
        B = _solve_spd(F @ F.T, F @ X, ridge)
    return ContinuousSignal(B, basis, ridge)


def evaluate_many(signal: ContinuousSignal, times) -> np.ndarray:
    """Signal values at each time, one row per time (``L x e``)."""
    return design_matrix(signal.basis, times).T @ signal.coefficients


def evaluate(signal: ContinuousSignal, t: float) -> np.ndarray:
    """``x(t) = B^T psi(t)``."""
    t = np.asarray(t, dtype=float)
    if t.ndim != 0:
        raise InvalidArgumentError("evaluate takes a scalar time; use evaluate_many")
    return evaluate_many(signal, t[None])[0]
