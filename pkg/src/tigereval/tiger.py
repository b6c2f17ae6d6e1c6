"""Candidate-vs-reference comparison of grounding vectors.

Two views of the same pair of vectors: RRS ranks regions by the
candidate's grounding scores and measures the ranking's quality as NDCG
against reference-derived gains; WDS compares the two attention
distributions via KL divergence plus a log-ratio of vector norms, pushed
through a complementary sigmoid. The final score averages the two.
"""

import math
from dataclasses import dataclass

import numpy as np

from .backend import kernels
from .errors import DegenerateInstanceError, DomainError, ValidationError
from .grounding import GroundingVector


@dataclass(frozen=True)
class TigerConfig:
    """``tau``: sigmoid temperature for WDS. ``gain_floor``: lower clamp
    applied to reference scores before they are used as DCG gains;
    must be >= 0 so NDCG stays within [0, 1]."""

    tau: float = 1.0
    gain_floor: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.tau) and self.tau > 0):
            raise ValidationError(f"tau must be positive and finite, got {self.tau}")
        if not (np.isfinite(self.gain_floor) and self.gain_floor >= 0):
            raise ValidationError(
                f"gain_floor must be finite and >= 0, got {self.gain_floor}"
            )


@dataclass(frozen=True)
class TigerBreakdown:
    rrs: float
    wds: float
    d_kl: float
    d_rel: float
    tiger: float


def _check_pair(candidate: GroundingVector, reference: GroundingVector) -> None:
    if candidate.n != reference.n:
        raise ValidationError(
            f"grounding length mismatch: candidate has {candidate.n} regions, "
            f"reference has {reference.n}"
        )


def dcg(gains) -> float:
    """Discounted cumulative gain of ``gains`` taken in list order
    (position k, counted from 1, is discounted by log2(k + 1))."""
    arr = np.ascontiguousarray(np.asarray(gains, dtype=np.float64))
    if arr.ndim != 1 or arr.shape[0] < 1:
        raise ValidationError(f"dcg: expected a non-empty 1-D vector, got {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValidationError("dcg: non-finite gain")
    return float(kernels.dcg(arr))


def rrs(candidate: GroundingVector, reference: GroundingVector, cfg: TigerConfig) -> float:
    """NDCG of the candidate-induced region ranking.

    Gains are the reference scores clamped at ``cfg.gain_floor``; the
    ranking orders regions by descending candidate score (ties broken by
    ascending region index); the ideal ranking orders by descending gain.
    """
    _check_pair(candidate, reference)
    gains = np.maximum(cfg.gain_floor, reference.scores)
    ideal = np.ascontiguousarray(np.sort(gains)[::-1])
    idcg = float(kernels.dcg(ideal))
    if idcg == 0.0:
        raise DegenerateInstanceError(
            f"instance {candidate.image_id}/{candidate.caption_id}: all reference "
            f"gains clamp to zero, ideal DCG is 0"
        )
    order = np.argsort(-candidate.scores, kind="stable")
    ranked = np.ascontiguousarray(gains[order])
    return float(kernels.dcg(ranked)) / idcg


def kl_divergence(p_scores: GroundingVector, q_scores: GroundingVector) -> float:
    """KL(P||Q) in nats, where P and Q are unit-temperature softmax
    distributions over the raw grounding scores."""
    _check_pair(p_scores, q_scores)
    return float(kernels.kl_from_scores(p_scores.scores, q_scores.scores))


def relevance_diff(reference: GroundingVector, candidate: GroundingVector) -> float:
    """Log-ratio of grounding vector norms, reference over candidate.

    Positive when the reference grounding is stronger overall.
    """
    _check_pair(candidate, reference)
    norm_ref = float(kernels.row_norms(reference.scores[None, :])[0])
    norm_cand = float(kernels.row_norms(candidate.scores[None, :])[0])
    for name, norm in (("reference", norm_ref), ("candidate", norm_cand)):
        if norm == 0.0:
            raise DomainError(f"relevance_diff: {name} grounding vector has zero norm")
    return math.log(norm_ref / norm_cand)


def _one_minus_sigmoid(x: float) -> float:
    # 1 - exp(x)/(exp(x)+1), rearranged so exp never overflows.
    if x >= 0.0:
        z = math.exp(-x)
        return z / (1.0 + z)
    return 1.0 / (1.0 + math.exp(x))


def wds(candidate: GroundingVector, reference: GroundingVector, cfg: TigerConfig) -> float:
    """Weight-distribution similarity in (0, 1); 0.5 iff the combined
    divergence (KL plus relevance log-ratio) is zero."""
    d = kl_divergence(reference, candidate) + relevance_diff(reference, candidate)
    return _one_minus_sigmoid(cfg.tau * d)


def tiger_score(
    candidate: GroundingVector, reference: GroundingVector, cfg: TigerConfig
) -> TigerBreakdown:
    """Full breakdown for one instance; the final score is the arithmetic
    mean of RRS and WDS and lies in [0, 1] (higher is better)."""
    rank_sim = rrs(candidate, reference, cfg)
    d_kl = kl_divergence(reference, candidate)
    d_rel = relevance_diff(reference, candidate)
    dist_sim = _one_minus_sigmoid(cfg.tau * (d_kl + d_rel))
    return TigerBreakdown(
        rrs=rank_sim,
        wds=dist_sim,
        d_kl=d_kl,
        d_rel=d_rel,
        tiger=(rank_sim + dist_sim) / 2.0,
    )
