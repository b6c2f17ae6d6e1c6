"""Text-image grounding: per-region scores for an (image, caption) pair.

The pipeline, per pair: cosine scores between every region vector and
every word vector; positive scores L2-normalized per word over regions;
a softmax over words (inverse temperature ``lam``) turns each region's
similarities into attention weights; the attention-weighted word average
is compared back to the region by cosine, giving one grounding score per
region. Reference captions are summarized by the elementwise mean of
their grounding vectors.

All operations are pure functions over immutable (read-only) arrays and
are safe to call concurrently.
"""

from dataclasses import dataclass

import numpy as np

from .backend import kernels
from .errors import DomainError, ValidationError


def _validated_matrix(vectors, owner: str) -> np.ndarray:
    arr = np.ascontiguousarray(np.asarray(vectors, dtype=np.float64))
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValidationError(
            f"{owner}: expected a non-empty 2-D matrix, got shape {arr.shape}"
        )
    finite_rows = np.isfinite(arr).all(axis=1)
    if not finite_rows.all():
        row = int(np.flatnonzero(~finite_rows)[0])
        raise ValidationError(f"{owner}: row {row} contains a non-finite value")
    zero_rows = np.flatnonzero((arr == 0.0).all(axis=1))
    if zero_rows.size:
        raise DomainError(f"{owner}: row {int(zero_rows[0])} is the all-zero vector")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class RegionMatrix:
    """Per-image region embeddings, one row per region (n x d)."""

    image_id: str
    vectors: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "vectors", _validated_matrix(self.vectors, f"regions[{self.image_id}]")
        )

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def d(self) -> int:
        return self.vectors.shape[1]


@dataclass(frozen=True)
class WordMatrix:
    """Per-caption contextual word embeddings, one row per token (m x d)."""

    caption_id: str
    vectors: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "vectors", _validated_matrix(self.vectors, f"words[{self.caption_id}]")
        )

    @property
    def m(self) -> int:
        return self.vectors.shape[0]

    @property
    def d(self) -> int:
        return self.vectors.shape[1]


@dataclass(frozen=True)
class GroundingConfig:
    """``lam`` is the softmax inverse temperature for word attention."""

    lam: float = 9.0

    def __post_init__(self):
        if not (np.isfinite(self.lam) and self.lam > 0):
            raise ValidationError(f"lam must be positive and finite, got {self.lam}")


@dataclass(frozen=True)
class GroundingVector:
    """Length-n vector of per-region grounding scores in [-1, 1]."""

    image_id: str
    caption_id: str
    scores: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(np.asarray(self.scores, dtype=np.float64))
        if arr.ndim != 1 or arr.shape[0] < 1:
            raise ValidationError(
                f"grounding[{self.image_id}/{self.caption_id}]: scores must be a "
                f"non-empty 1-D vector, got shape {arr.shape}"
            )
        if not np.isfinite(arr).all():
            raise ValidationError(
                f"grounding[{self.image_id}/{self.caption_id}]: non-finite score"
            )
        if (arr < -1.0).any() or (arr > 1.0).any():
            raise ValidationError(
                f"grounding[{self.image_id}/{self.caption_id}]: score outside [-1, 1]"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "scores", arr)

    @property
    def n(self) -> int:
        return self.scores.shape[0]


def _check_dims(regions: RegionMatrix, words: WordMatrix) -> None:
    if regions.d != words.d:
        raise ValidationError(
            f"dimension mismatch: regions[{regions.image_id}] has d={regions.d}, "
            f"words[{words.caption_id}] has d={words.d}"
        )


def cosine(u, v) -> float:
    """Cosine similarity of two nonzero vectors of equal length."""
    u = np.ascontiguousarray(np.asarray(u, dtype=np.float64))
    v = np.ascontiguousarray(np.asarray(v, dtype=np.float64))
    if u.ndim != 1 or v.ndim != 1 or u.shape != v.shape:
        raise ValidationError(f"cosine: incompatible shapes {u.shape} and {v.shape}")
    if not (np.isfinite(u).all() and np.isfinite(v).all()):
        raise ValidationError("cosine: non-finite input")
    for name, vec in (("u", u), ("v", v)):
        if not vec.any():
            raise DomainError(f"cosine: argument '{name}' is the all-zero vector")
    return float(kernels.cosine_matrix(u[None, :], v[None, :])[0, 0])


def normalized_sim(regions: RegionMatrix, words: WordMatrix) -> np.ndarray:
    """n x m matrix of clamped region-word scores, L2-normalized per word.

    Word columns whose raw scores are all nonpositive are defined as zero
    (the normalizing denominator vanishes there).
    """
    _check_dims(regions, words)
    return kernels.positive_colnorm_sim(
        kernels.cosine_matrix(regions.vectors, words.vectors)
    )


def attention_weights(
    regions: RegionMatrix, words: WordMatrix, cfg: GroundingConfig
) -> np.ndarray:
    """n x m attention matrix; each region's row is a distribution over words."""
    return kernels.softmax_rows(normalized_sim(regions, words), cfg.lam)


def attention_vector(
    regions: RegionMatrix, words: WordMatrix, cfg: GroundingConfig, i: int
) -> np.ndarray:
    """Attention-weighted average of word vectors for region ``i``."""
    if not 0 <= i < regions.n:
        raise ValidationError(f"region index {i} out of range [0, {regions.n})")
    alpha = attention_weights(regions, words, cfg)
    return kernels.average_rows(alpha[i : i + 1], words.vectors)[0]


def grounding_vector(
    regions: RegionMatrix, words: WordMatrix, cfg: GroundingConfig
) -> GroundingVector:
    """Grounding scores of one caption against one image's regions."""
    _check_dims(regions, words)
    scores, zero_row = kernels.grounding_scores(
        regions.vectors, words.vectors, cfg.lam
    )
    if zero_row >= 0:
        raise DomainError(
            f"grounding[{regions.image_id}/{words.caption_id}]: attended word "
            f"average for region {zero_row} has zero norm"
        )
    return GroundingVector(
        image_id=regions.image_id, caption_id=words.caption_id, scores=scores
    )


def mean_grounding(vectors: list[GroundingVector]) -> GroundingVector:
    """Elementwise mean of grounding vectors for the same image.

    The per-region addends are summed in sorted order, so the result is
    exactly invariant under reordering of the input list.
    """
    if not vectors:
        raise ValidationError("mean_grounding: empty list")
    lengths = {v.n for v in vectors}
    if len(lengths) != 1:
        raise ValidationError(f"mean_grounding: mixed lengths {sorted(lengths)}")
    stack = np.stack([v.scores for v in vectors])
    mean = np.sort(stack, axis=0).sum(axis=0) / len(vectors)
    if len(vectors) == 1:
        caption_id = vectors[0].caption_id
    else:
        caption_id = "avg(" + ",".join(v.caption_id for v in vectors) + ")"
    return GroundingVector(
        image_id=vectors[0].image_id, caption_id=caption_id, scores=mean
    )


def reference_grounding(
    regions: RegionMatrix, refs: list[WordMatrix], cfg: GroundingConfig
) -> GroundingVector:
    """Mean grounding vector over all reference captions."""
    if not refs:
        raise ValidationError("reference_grounding: empty reference list")
    return mean_grounding([grounding_vector(regions, w, cfg) for w in refs])
