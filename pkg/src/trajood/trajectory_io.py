"""UFTJ binary container for batches of noise-prediction trajectories.

Layout (little-endian)::

    offset  size  field
    0       4     magic b"UFTJ"
    4       4     version  (u32, always 1)
    8       4     count n  (u32)
    12      4     steps T  (u32, >= 1)
    16      4     dim d    (u32, >= 1)
    20      1     label mode (u8: 0 absent, 1 present)
    21      n     labels (u8 each: 0 id, 1 ood, 2 unlabeled), only if mode == 1
    ...     4nTd  float32 payload, sample-major then timestep then coordinate

Any trailing byte after the payload is a decode error.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

MAGIC = b"UFTJ"
FORMAT_VERSION = 1
LABELS = ("id", "ood", "unlabeled")

_HEADER = struct.Struct("<4sIIIIB")
HEADER_SIZE = _HEADER.size


class TrajectoryFormatError(ValueError):
    """Base class for every UFTJ decode/encode failure."""


class BadMagicError(TrajectoryFormatError):
    pass


class VersionMismatchError(TrajectoryFormatError):
    pass


class TruncatedPayloadError(TrajectoryFormatError):
    pass


class TrailingDataError(TrajectoryFormatError):
    pass


class HeaderFieldError(TrajectoryFormatError):
    """A header field holds a value outside its allowed range."""


class InvalidLabelError(TrajectoryFormatError):
    pass


class NonFiniteError(TrajectoryFormatError):
    pass


def check_trajectory(eps) -> np.ndarray:
    """Validate a single (T, d) trajectory and return it as an array."""
    arr = np.asarray(eps)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"trajectory must have shape (T>=1, d>=1), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError("trajectory contains NaN or Inf")
    return arr


@dataclass(frozen=True)
class TrajectoryBatch:
    """``n`` trajectories sharing ``(steps, dim)``.

    ``eps`` keeps whatever float dtype it was built with; serialization
    narrows to float32.
    """

    eps: np.ndarray
    labels: Optional[tuple] = None

    def __post_init__(self):
        eps = np.asarray(self.eps)
        if eps.ndim != 3 or eps.shape[1] < 1 or eps.shape[2] < 1:
            raise ValueError(f"batch must have shape (n, T>=1, d>=1), got {eps.shape}")
        if not np.issubdtype(eps.dtype, np.floating):
            eps = eps.astype(np.float64)
        if not np.all(np.isfinite(eps)):
            raise NonFiniteError("batch contains NaN or Inf")
        object.__setattr__(self, "eps", eps)
        if self.labels is not None:
            labels = tuple(self.labels)
            if len(labels) != eps.shape[0]:
                raise ValueError(f"{len(labels)} labels for {eps.shape[0]} trajectories")
            bad = sorted({lab for lab in labels if lab not in LABELS})
            if bad:
                raise InvalidLabelError(f"unknown labels {bad}; expected one of {LABELS}")
            object.__setattr__(self, "labels", labels)

    @property
    def count(self) -> int:
        return int(self.eps.shape[0])

    @property
    def steps(self) -> int:
        return int(self.eps.shape[1])

    @property
    def dim(self) -> int:
        return int(self.eps.shape[2])

    @classmethod
    def empty(cls, steps: int, dim: int, labelled: bool = False) -> "TrajectoryBatch":
        return cls(np.zeros((0, steps, dim), dtype=np.float32), () if labelled else None)

    @classmethod
    def from_trajectories(cls, trajectories: Sequence, labels=None) -> "TrajectoryBatch":
        return cls(np.stack([check_trajectory(t) for t in trajectories]), labels)


def encode_batch(batch: TrajectoryBatch) -> bytes:
    with np.errstate(over="ignore"):
        payload = batch.eps.astype("<f4")
    if not np.all(np.isfinite(payload)):
        raise NonFiniteError("values overflow float32")
    mode = 0 if batch.labels is None else 1
    parts = [_HEADER.pack(MAGIC, FORMAT_VERSION, batch.count, batch.steps, batch.dim, mode)]
    if mode:
        parts.append(bytes(LABELS.index(lab) for lab in batch.labels))
    parts.append(payload.tobytes(order="C"))
    return b"".join(parts)


def decode_batch(data: bytes) -> TrajectoryBatch:
    if len(data) < HEADER_SIZE:
        if not MAGIC.startswith(bytes(data[:4])):
            raise BadMagicError("not a UFTJ file")
        raise TruncatedPayloadError(f"header needs {HEADER_SIZE} bytes, got {len(data)}")
    magic, version, count, steps, dim, mode = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise BadMagicError(f"bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise VersionMismatchError(f"unsupported version {version}, expected {FORMAT_VERSION}")
    if steps < 1 or dim < 1:
        raise HeaderFieldError(f"steps and dim must be >= 1, got steps={steps} dim={dim}")
    if mode not in (0, 1):
        raise HeaderFieldError(f"label mode must be 0 or 1, got {mode}")

    n_labels = count if mode else 0
    expected = HEADER_SIZE + n_labels + 4 * count * steps * dim
    if len(data) < expected:
        raise TruncatedPayloadError(f"expected {expected} bytes, got {len(data)}")
    if len(data) > expected:
        raise TrailingDataError(f"{len(data) - expected} unexpected bytes after payload")

    labels = None
    if mode:
        codes = data[HEADER_SIZE:HEADER_SIZE + n_labels]
        if any(c >= len(LABELS) for c in codes):
            raise InvalidLabelError("label byte outside 0..2")
        labels = tuple(LABELS[c] for c in codes)

    payload = np.frombuffer(data, dtype="<f4", offset=HEADER_SIZE + n_labels)
    if not np.all(np.isfinite(payload)):
        raise NonFiniteError("payload contains NaN or Inf")
    eps = payload.astype(np.float32).reshape(count, steps, dim)
    return TrajectoryBatch(eps, labels)


def write_batch(path, batch: TrajectoryBatch) -> None:
    """Serialize ``batch`` to ``path``; nothing is written if encoding fails."""
    data = encode_batch(batch)
    with open(os.fspath(path), "wb") as fh:
        fh.write(data)


def read_batch(path) -> TrajectoryBatch:
    with open(os.fspath(path), "rb") as fh:
        return decode_batch(fh.read())
