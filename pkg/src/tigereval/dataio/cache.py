"""On-disk cache of grounding vectors.

Entries are keyed by a content hash of the exact inputs: region bytes,
word bytes, the attention temperature, and the active kernel backend
(backends agree only to ~1e-15, and a cache hit must be bit-identical to
recomputation). Each entry file carries its own digest; corrupt entries
are recomputed and rewritten transparently. Writes go through a
temporary file and an atomic rename; one writer per cache directory is
the supported mode.
"""

import hashlib
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from ..backend import backend_name
from ..grounding import (
    GroundingConfig,
    GroundingVector,
    RegionMatrix,
    WordMatrix,
    grounding_vector,
)

_ENTRY_MAGIC = b"GCV1"


class GroundingCache:
    def __init__(self, directory):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.hits = 0
        self.misses = 0
        self.recomputed_corrupt = 0

    def _key(self, regions: RegionMatrix, words: WordMatrix, cfg: GroundingConfig) -> str:
        h = hashlib.sha256()
        h.update(_ENTRY_MAGIC)
        h.update(backend_name.encode())
        h.update(struct.pack("<d", cfg.lam))
        h.update(struct.pack("<qq", *regions.vectors.shape))
        h.update(regions.vectors.tobytes())
        h.update(struct.pack("<qq", *words.vectors.shape))
        h.update(words.vectors.tobytes())
        return h.hexdigest()

    def _entry_path(self, key: str) -> Path:
        return self.directory / f"{key}.gcv"

    @staticmethod
    def _encode(scores: np.ndarray) -> bytes:
        body = _ENTRY_MAGIC + struct.pack("<I", len(scores)) + scores.tobytes()
        return body + hashlib.sha256(body).digest()

    @staticmethod
    def _decode(blob: bytes) -> np.ndarray | None:
        """Returns the scores, or None for any corrupt entry."""
        if len(blob) < 8 + 32 or blob[:4] != _ENTRY_MAGIC:
            return None
        body, digest = blob[:-32], blob[-32:]
        if hashlib.sha256(body).digest() != digest:
            return None
        (n,) = struct.unpack_from("<I", body, 4)
        if len(body) != 8 + 8 * n:
            return None
        return np.frombuffer(body, dtype="<f8", count=n, offset=8).copy()

    def get_or_compute(
        self, regions: RegionMatrix, words: WordMatrix, cfg: GroundingConfig
    ) -> GroundingVector:
        path = self._entry_path(self._key(regions, words, cfg))
        if path.exists():
            scores = self._decode(path.read_bytes())
            if scores is not None:
                self.hits += 1
                return GroundingVector(
                    image_id=regions.image_id,
                    caption_id=words.caption_id,
                    scores=scores,
                )
            self.recomputed_corrupt += 1
        else:
            self.misses += 1
        result = grounding_vector(regions, words, cfg)
        self._write_atomic(path, self._encode(result.scores))
        return result

    def _write_atomic(self, path: Path, blob: bytes) -> None:
        fd, tmp = tempfile.mkstemp(dir=self.directory, suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as handle:
                handle.write(blob)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    def stats(self) -> dict:
        return {
            "hits": self.hits,
            "misses": self.misses,
            "recomputed_corrupt": self.recomputed_corrupt,
        }
