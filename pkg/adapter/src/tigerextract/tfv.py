"""Writer for the TFV1 tensor container consumed by tigereval.

Layout (little-endian): magic "TFV1", version u16 (=1), rank u8,
rank x u32 dims, then row-major float32 payload ending exactly at the
end of the file. Implemented here against the published format so this
package depends on tigereval only through its file interfaces.
"""

import struct

import numpy as np

MAGIC = b"TFV1"
VERSION = 1


def write_tensor(path, matrix) -> None:
    arr = np.ascontiguousarray(matrix, dtype="<f4")
    if arr.ndim < 1 or any(dim < 1 for dim in arr.shape):
        raise ValueError(f"{path}: tensors must have rank >= 1 and no empty dims")
    if not np.isfinite(arr).all():
        raise ValueError(f"{path}: refusing to write non-finite values")
    header = MAGIC + struct.pack("<HB", VERSION, arr.ndim)
    header += struct.pack(f"<{arr.ndim}I", *arr.shape)
    with open(path, "wb") as handle:
        handle.write(header)
        handle.write(arr.tobytes())


def read_header(path) -> tuple[int, ...]:
    """Dims of a TFV1 file; used to sanity-check our own exports."""
    with open(path, "rb") as handle:
        head = handle.read(7)
        if head[:4] != MAGIC or len(head) < 7:
            raise ValueError(f"{path}: not a TFV1 file")
        version, rank = struct.unpack("<HB", head[4:7])
        if version != VERSION or rank < 1:
            raise ValueError(f"{path}: unsupported header")
        dims = struct.unpack(f"<{rank}I", handle.read(4 * rank))
    return dims
