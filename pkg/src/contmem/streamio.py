"""Binary stream and weight files.

Both formats are a single JSON header line followed immediately by a
little-endian float32 body in row-major order.

Stream header: ``{"frames", "patches", "dim", "dtype": "f32", "chunk_frames"}``;
body is ``frames x patches x dim``. Weight header:
``{"kind": "projections", "heads", "dim", "out_dim", "dtype": "f32"}``; body
is query, key, value (each ``heads x dim x dim/heads``), output
(``dim x dim``) and token (``dim x out_dim``) back to back.
"""

import json
import os
from collections import Counter

import numpy as np

from .attention import ProjectionSet
from .errors import InvalidArgumentError
from .signal import FrameChunk

__all__ = [
    "write_stream",
    "read_stream",
    "read_header",
    "StreamReader",
    "write_weights",
    "read_weights",
    "write_matrix",
]

DTYPE = np.dtype("<f4")
_STREAM_KEYS = ("frames", "patches", "dim", "dtype", "chunk_frames")


def _write(path, header: dict, arrays):
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, separators=(",", ":")).encode() + b"\n")
        for arr in arrays:
            fh.write(np.ascontiguousarray(arr, dtype=DTYPE).tobytes())


def _read_header_line(fh) -> dict:
    line = fh.readline(1 << 16)
    if not line.endswith(b"\n"):
        raise InvalidArgumentError("missing newline-terminated JSON header")
    try:
        header = json.loads(line)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise InvalidArgumentError(f"header is not valid JSON: {exc}") from exc
    if not isinstance(header, dict):
        raise InvalidArgumentError("header must be a JSON object")
    if header.get("dtype") != "f32":
        raise InvalidArgumentError(f"unsupported dtype {header.get('dtype')!r}")
    return header


def write_stream(path, embeddings, chunk_frames: int):
    """Write a ``frames x patches x dim`` tensor as a stream file."""
    emb = np.asarray(embeddings)
    if emb.ndim != 3:
        raise InvalidArgumentError(f"expected frames x patches x dim, got {emb.shape}")
    frames, patches, dim = emb.shape
    header = {"frames": frames, "patches": patches, "dim": dim, "dtype": "f32",
              "chunk_frames": int(chunk_frames)}
    _write(path, header, [emb])


def _validate_stream_header(header, body_bytes):
    missing = [k for k in _STREAM_KEYS if k not in header]
    if missing:
        raise InvalidArgumentError(f"stream header lacks {', '.join(missing)}")
    for key in ("frames", "patches", "dim", "chunk_frames"):
        value = header[key]
        if isinstance(value, bool) or not isinstance(value, int) or value < 1:
            raise InvalidArgumentError(f"header field {key} must be a positive integer")
    expected = header["frames"] * header["patches"] * header["dim"] * DTYPE.itemsize
    if body_bytes != expected:
        raise InvalidArgumentError(f"body has {body_bytes} bytes, header implies {expected}")


def read_header(path) -> dict:
    with open(path, "rb") as fh:
        header = _read_header_line(fh)
        body = os.fstat(fh.fileno()).st_size - fh.tell()
    _validate_stream_header(header, body)
    return header


class StreamReader:
    """Sequential chunk reader over a stream file.

    Each chunk's bytes are read from disk exactly once, when the iterator
    reaches it; ``reads`` counts reads per chunk index.
    """

    def __init__(self, path):
        self.path = path
        self.header = read_header(path)
        self.reads = Counter()

    @property
    def chunk_frames(self) -> int:
        return self.header["chunk_frames"]

    @property
    def chunk_count(self) -> int:
        return -(-self.header["frames"] // self.chunk_frames)

    def __iter__(self):
        h = self.header
        frame_bytes = h["patches"] * h["dim"] * DTYPE.itemsize
        with open(self.path, "rb") as fh:
            _read_header_line(fh)
            for c in range(self.chunk_count):
                frames = min(self.chunk_frames, h["frames"] - c * self.chunk_frames)
                buf = fh.read(frames * frame_bytes)
                self.reads[c] += 1
                emb = np.frombuffer(buf, dtype=DTYPE).reshape(frames, h["patches"], h["dim"])
                yield FrameChunk(emb.astype(float), chunk_index=c)


def read_stream(path) -> np.ndarray:
    """The whole body as a float32 ``frames x patches x dim`` array."""
    h = read_header(path)
    with open(path, "rb") as fh:
        _read_header_line(fh)
        body = fh.read()
    return np.frombuffer(body, dtype=DTYPE).reshape(h["frames"], h["patches"], h["dim"]).copy()


def write_weights(path, proj: ProjectionSet):
    header = {"kind": "projections", "heads": proj.heads, "dim": proj.dim,
              "out_dim": proj.out_dim, "dtype": "f32"}
    _write(path, header, [proj.query, proj.key, proj.value, proj.output, proj.token])


def read_weights(path) -> ProjectionSet:
    """Load a projection set; raises :class:`InvalidArgumentError` on any inconsistency."""
    with open(path, "rb") as fh:
        header = _read_header_line(fh)
        body = fh.read()
    try:
        heads, dim, out_dim = int(header["heads"]), int(header["dim"]), int(header["out_dim"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidArgumentError(f"bad weights header: {exc}") from exc
    if header.get("kind") != "projections" or heads < 1 or dim % heads or out_dim < 1:
        raise InvalidArgumentError("bad weights header")
    d = dim // heads
    shapes = [(heads, dim, d)] * 3 + [(dim, dim), (dim, out_dim)]
    sizes = [int(np.prod(s)) for s in shapes]
    if len(body) != sum(sizes) * DTYPE.itemsize:
        raise InvalidArgumentError("weights body size does not match header")
    flat = np.frombuffer(body, dtype=DTYPE).astype(float)
    parts = np.split(flat, np.cumsum(sizes)[:-1])
    return ProjectionSet(*(p.reshape(s) for p, s in zip(parts, shapes)))


def write_matrix(path, matrix):
    """Raw float32 matrix plus a ``<path>.json`` sidecar with its shape."""
    matrix = np.asarray(matrix)
    with open(path, "wb") as fh:
        fh.write(np.ascontiguousarray(matrix, dtype=DTYPE).tobytes())
    with open(str(path) + ".json", "w") as fh:
        json.dump({"rows": matrix.shape[0], "cols": matrix.shape[1], "dtype": "f32",
                   "order": "row-major", "endian": "little"}, fh)
