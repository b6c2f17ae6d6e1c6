"""On-disk formats: TFV1 tensors, the manifest, JSONL datasets, and the
grounding-vector cache."""

from .cache import GroundingCache
from .datasets import (
    CaptionRef,
    Manifest,
    PairRecord,
    ScoredRecord,
    load_dataset,
    load_manifest,
    write_manifest,
)
from .tensorfile import read_tensor, read_tensor_header, write_tensor

__all__ = [
    "CaptionRef",
    "GroundingCache",
    "Manifest",
    "PairRecord",
    "ScoredRecord",
    "load_dataset",
    "load_manifest",
    "read_tensor",
    "read_tensor_header",
    "write_manifest",
    "write_tensor",
]
