"""TFV1: a minimal portable tensor container.

Layout (all little-endian):

    offset 0   magic   4 bytes  b"TFV1"
    offset 4   version u16      currently 1
    offset 6   rank    u8       >= 1
    offset 7   dims    rank x u32, each >= 1
    then       payload row-major float32, 4 * prod(dims) bytes

The payload must be finite everywhere and the file must end exactly at
the end of the payload. Every malformed-file class maps to a distinct
error carrying the byte offset where the problem sits.
"""

import os
import struct
from pathlib import Path

import numpy as np

from ..errors import (
    BadHeaderError,
    BadMagicError,
    NonFinitePayloadError,
    TrailingDataError,
    TruncatedFileError,
    UnsupportedVersionError,
    ValidationError,
)

MAGIC = b"TFV1"
VERSION = 1
_MIN_HEADER = 7  # magic + version + rank


def write_tensor(path, matrix) -> None:
    """Write ``matrix`` as a TFV1 file. Encoding is canonical: identical
    input always produces identical bytes."""
    arr = np.asarray(matrix)
    if arr.ndim < 1:
        raise ValidationError(f"{path}: rank-0 tensors are not supported")
    if arr.ndim > 255:
        raise ValidationError(f"{path}: rank {arr.ndim} exceeds the format maximum")
    if any(dim < 1 for dim in arr.shape):
        raise ValidationError(f"{path}: zero-sized dimension in shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValidationError(f"{path}: refusing to write non-finite values")
    with np.errstate(over="ignore"):
        payload = np.ascontiguousarray(arr, dtype="<f4")
    if not np.isfinite(payload).all():
        raise ValidationError(
            f"{path}: values exceed float32 range, refusing to write"
        )
    header = MAGIC + struct.pack("<HB", VERSION, arr.ndim)
    header += struct.pack(f"<{arr.ndim}I", *arr.shape)
    with open(path, "wb") as handle:
        handle.write(header)
        handle.write(payload.tobytes())


def _parse_header(blob: bytes, path) -> tuple[tuple[int, ...], int]:
    """Validate the header; returns (dims, payload offset)."""
    if blob[:4] != MAGIC:
        raise BadMagicError(
            f"bad magic {blob[:4]!r}, expected {MAGIC!r}", offset=0, path=path
        )
    if len(blob) < _MIN_HEADER:
        raise TruncatedFileError(
            "header cut short", offset=len(blob), expected=_MIN_HEADER,
            actual=len(blob), path=path,
        )
    version, rank = struct.unpack_from("<HB", blob, 4)
    if version != VERSION:
        raise UnsupportedVersionError(
            f"unsupported version {version}", offset=4, path=path
        )
    if rank < 1:
        raise BadHeaderError("rank must be >= 1", offset=6, path=path)
    dims_end = _MIN_HEADER + 4 * rank
    if len(blob) < dims_end:
        raise TruncatedFileError(
            "dimension list cut short", offset=len(blob), expected=dims_end,
            actual=len(blob), path=path,
        )
    dims = struct.unpack_from(f"<{rank}I", blob, _MIN_HEADER)
    for k, dim in enumerate(dims):
        if dim < 1:
            raise BadHeaderError(
                f"dimension {k} is zero", offset=_MIN_HEADER + 4 * k, path=path
            )
    return dims, dims_end


def read_tensor_header(path) -> tuple[int, ...]:
    """Read and validate only the header; returns the dims. Cheap way to
    check shapes without touching the payload."""
    size = os.path.getsize(path)
    with open(path, "rb") as handle:
        blob = handle.read(_MIN_HEADER + 4 * 255)
    dims, payload_at = _parse_header(blob, path)
    expected = payload_at + 4 * int(np.prod(dims, dtype=np.int64))
    if size < expected:
        raise TruncatedFileError(
            "payload cut short", offset=size, expected=expected, actual=size,
            path=path,
        )
    if size > expected:
        raise TrailingDataError(
            f"{size - expected} bytes after payload", offset=expected, path=path
        )
    return dims


def read_tensor(path) -> np.ndarray:
    """Read a TFV1 file into a float32 array of the declared shape."""
    blob = Path(path).read_bytes()
    dims, payload_at = _parse_header(blob, path)
    count = int(np.prod(dims, dtype=np.int64))
    expected = payload_at + 4 * count
    if len(blob) < expected:
        raise TruncatedFileError(
            "payload cut short", offset=len(blob), expected=expected,
            actual=len(blob), path=path,
        )
    if len(blob) > expected:
        raise TrailingDataError(
            f"{len(blob) - expected} bytes after payload", offset=expected, path=path
        )
    flat = np.frombuffer(blob, dtype="<f4", count=count, offset=payload_at)
    finite = np.isfinite(flat)
    if not finite.all():
        bad = int(np.flatnonzero(~finite)[0])
        raise NonFinitePayloadError(
            f"non-finite value at element {bad}",
            offset=payload_at + 4 * bad,
            path=path,
        )
    return flat.reshape(dims).copy()
