"""Discrete (short-term) and continuous (long-term) multi-head cross-attention.

Both paths share one :class:`ProjectionSet`. Per-head projections are stored
stacked as ``H x e x d`` arrays so that head ``h`` of the query projection is
``W_Q[h]``.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .basis import design_matrix
from .errors import EmptyMemoryError, InvalidArgumentError
from .numerics import QuadratureGrid, normalized_exp
from .signal import ContinuousSignal

__all__ = [
    "ProjectionSet",
    "DensityProfile",
    "project",
    "softmax",
    "stm_attention",
    "continuous_scores",
    "gibbs_density",
    "ltm_attention",
]


def _orthogonal(rng, rows, cols):
    # QR of a Gaussian matrix with the sign fix gives a Haar-distributed factor
    big = max(rows, cols)
    q, r = np.linalg.qr(rng.standard_normal((big, big)))
    q = q * np.sign(np.diag(r))
    return q[:rows, :cols]


@dataclass(frozen=True)
class ProjectionSet:
    """Frozen attention weights.

    Attributes
    ----------
    query, key, value : ndarray, shape (H, e, d)
        Per-head projections with ``d = e / H``.
    output : ndarray, shape (e, e)
        Applied to the concatenated heads.
    token : ndarray, shape (e, e_out)
        Maps a context ``Z`` to the emitted token embeddings ``Z @ token``.
    """

    query: np.ndarray
    key: np.ndarray
    value: np.ndarray
    output: np.ndarray
    token: np.ndarray

    def __post_init__(self):
        arrays = {}
        for name in ("query", "key", "value", "output", "token"):
            arr = np.array(getattr(self, name), dtype=float)
            if not np.all(np.isfinite(arr)):
                raise InvalidArgumentError(f"{name} projection has non-finite entries")
            arr.setflags(write=False)
            arrays[name] = arr
        q = arrays["query"]
        if q.ndim != 3:
            raise InvalidArgumentError(f"query projection must be H x e x d, got {q.shape}")
        heads, e, d = q.shape
        if heads * d != e:
            raise InvalidArgumentError(f"e={e} is not heads={heads} times d={d}")
        for name in ("key", "value"):
            if arrays[name].shape != q.shape:
                raise InvalidArgumentError(f"{name} projection shape {arrays[name].shape} != {q.shape}")
        if arrays["output"].shape != (e, e):
            raise InvalidArgumentError(f"output projection must be {e} x {e}")
        if arrays["token"].ndim != 2 or arrays["token"].shape[0] != e:
            raise InvalidArgumentError(f"token projection must be {e} x e_out")
        for name, arr in arrays.items():
            object.__setattr__(self, name, arr)

    @property
    def heads(self) -> int:
        return self.query.shape[0]

    @property
    def dim(self) -> int:
        return self.query.shape[1]

    @property
    def head_dim(self) -> int:
        return self.query.shape[2]

    @property
    def out_dim(self) -> int:
        return self.token.shape[1]

    @classmethod
    def random(cls, dim: int, heads: int = 1, out_dim: Optional[int] = None, seed=0):
        """Seeded random orthogonal weights (each full ``e x e`` matrix is split into heads)."""
        if heads < 1 or dim % heads:
            raise InvalidArgumentError(f"dim={dim} must be divisible by heads={heads}")
        out_dim = dim if out_dim is None else out_dim
        rng = np.random.default_rng(seed)
        d = dim // heads

        def split(w):
            return w.reshape(dim, heads, d).transpose(1, 0, 2)

        return cls(
            query=split(_orthogonal(rng, dim, dim)),
            key=split(_orthogonal(rng, dim, dim)),
            value=split(_orthogonal(rng, dim, dim)),
            output=_orthogonal(rng, dim, dim),
            token=_orthogonal(rng, dim, out_dim),
        )

    @classmethod
    def identity(cls, dim: int):
        eye = np.eye(dim)
        return cls(eye[None], eye[None], eye[None], eye, eye)

    def full(self, which: str) -> np.ndarray:
        """The ``e x e`` matrix whose column blocks are the per-head projections."""
        w = getattr(self, which)
        return w.transpose(1, 0, 2).reshape(self.dim, -1)


@dataclass(frozen=True)
class DensityProfile:
    """Gibbs densities sampled on a grid, shape ``H x R x G``."""

    grid: QuadratureGrid
    densities: np.ndarray

    @property
    def heads(self) -> int:
        return self.densities.shape[0]

    @property
    def queries(self) -> int:
        return self.densities.shape[1]

    def aggregate(self) -> np.ndarray:
        """Mean density over heads and queries (still a density on the grid)."""
        return self.densities.mean(axis=(0, 1))


def project(X, proj: ProjectionSet, which: str, head: int) -> np.ndarray:
    """Right-multiply ``X`` by head ``head`` of the query, key or value projection."""
    if which not in ("query", "key", "value"):
        raise InvalidArgumentError(f"which must be query, key or value, got {which!r}")
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != proj.dim:
        raise InvalidArgumentError(f"expected an (n x {proj.dim}) matrix, got {X.shape}")
    return X @ getattr(proj, which)[head]


def softmax(x, axis=-1):
    z = np.exp(x - x.max(axis=axis, keepdims=True))
    return z / z.sum(axis=axis, keepdims=True)


def _check_queries(Y, proj):
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2 or Y.shape[0] < 1 or Y.shape[1] != proj.dim:
        raise InvalidArgumentError(f"queries must be R x {proj.dim} with R >= 1, got {Y.shape}")
    if not np.all(np.isfinite(Y)):
        raise InvalidArgumentError("queries must be finite")
    return Y


def _merge_heads(per_head, proj):
    # per_head: H x R x d -> R x (H d), heads side by side, then W_Z
    heads, rows, d = per_head.shape
    return per_head.transpose(1, 0, 2).reshape(rows, heads * d) @ proj.output


def stm_attention(Y, X_tokens, proj: ProjectionSet) -> np.ndarray:
    """Scaled dot-product cross-attention of the queries over ``S`` tokens: ``R x e``."""
    Y = _check_queries(Y, proj)
    X = np.asarray(X_tokens, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyMemoryError("no tokens to attend over")
    if X.shape[1] != proj.dim:
        raise InvalidArgumentError(f"tokens must have {proj.dim} columns, got {X.shape[1]}")
    q = np.einsum("re,hed->hrd", Y, proj.query)
    k = np.einsum("se,hed->hsd", X, proj.key)
    v = np.einsum("se,hed->hsd", X, proj.value)
    weights = softmax(q @ k.transpose(0, 2, 1) / np.sqrt(proj.head_dim))
    return _merge_heads(weights @ v, proj)


def continuous_scores(Y, signal: ContinuousSignal, proj: ProjectionSet, grid: QuadratureGrid,
                      psi: Optional[np.ndarray] = None) -> np.ndarray:
    """Query-key similarities ``q_i . k^h(t)`` on the grid, shape ``H x R x G``.

    ``psi`` may carry a precomputed ``N x G`` design matrix of the grid.
    """
    Y = _check_queries(Y, proj)
    if signal.dim != proj.dim:
        raise InvalidArgumentError(f"signal dim {signal.dim} != projection dim {proj.dim}")
    if psi is None:
        psi = design_matrix(signal.basis, grid.points)
    q = np.einsum("re,hed->hrd", Y, proj.query)
    key_coef = np.einsum("ne,hed->hnd", signal.coefficients, proj.key)
    return (q @ key_coef.transpose(0, 2, 1)) @ psi


def gibbs_density(scores, grid: QuadratureGrid) -> DensityProfile:
    """Normalize each ``(h, i)`` score curve into a Gibbs density."""
    scores = np.asarray(scores, dtype=float)
    if scores.ndim != 3:
        raise InvalidArgumentError(f"scores must be H x R x G, got {scores.shape}")
    return DensityProfile(grid, normalized_exp(scores, grid))


def ltm_attention(Y, signal: ContinuousSignal, proj: ProjectionSet, grid: QuadratureGrid,
                  psi: Optional[np.ndarray] = None):
    """Continuous attention over the memory signal.

    Returns ``(Z, profile)`` where ``Z`` (``R x e``) concatenates the heads'
    expected values ``(W_V^h)^T B^T integral(p_i^h psi)`` and applies the
    output projection.
    """
    if psi is None:
        psi = design_matrix(signal.basis, grid.points)
    profile = gibbs_density(continuous_scores(Y, signal, proj, grid, psi), grid)
    # trapezoid of p * psi_j for every basis component at once: H x R x N
    expected_psi = (profile.densities * grid.weights) @ psi.T
    value_coef = np.einsum("ne,hed->hnd", signal.coefficients, proj.value)
    return _merge_heads(expected_psi @ value_coef, proj), profile
