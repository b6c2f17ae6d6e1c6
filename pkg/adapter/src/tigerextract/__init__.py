"""Embedding extraction bridge for the tigereval scoring package.

Wraps a pretrained cross-attention grounding checkpoint (linear region
projection + bidirectional-GRU text encoder), exports TFV1 tensor
bundles with a manifest, and generates synthetic desk-scale fixture
bundles for model-free testing.
"""

from .fixtures import make_fixtures

__version__ = "0.1.0"

__all__ = ["make_fixtures"]
