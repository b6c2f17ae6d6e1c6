"""Metric quality against human judgments.

Caption-level rank correlations (Kendall tau-b and Spearman rho, both
tie-corrected), pairwise preference accuracy over the four Pascal-50S
pair types (a tie in metric scores counts as incorrect), seeded
reference-count sweeps, and the rank-quantile mapping of continuous
metric scores onto an n-point human scale.
"""

from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import (
    DegenerateInstanceError,
    UndefinedCorrelationError,
    ValidationError,
)

PAIR_TYPES = ("HC", "HI", "HM", "MM")


@dataclass(frozen=True)
class EvalInstance:
    image_id: str
    candidate_id: str
    metric_score: float
    human_score: float


@dataclass(frozen=True)
class PairInstance:
    image_id: str
    candidate_a: str
    candidate_b: str
    human_choice: str  # "A" or "B"
    pair_type: str  # HC, HI, HM or MM

    def __post_init__(self):
        if self.candidate_a == self.candidate_b:
            raise ValidationError(
                f"pair on image {self.image_id}: candidates must be distinct"
            )
        if self.human_choice not in ("A", "B"):
            raise ValidationError(f"human_choice must be 'A' or 'B', got {self.human_choice!r}")
        if self.pair_type not in PAIR_TYPES:
            raise ValidationError(f"pair_type must be one of {PAIR_TYPES}, got {self.pair_type!r}")


@dataclass(frozen=True)
class MetricReport:
    metric: str
    kendall_tau: float
    spearman_rho: float
    instances: int
    degenerate: int


@dataclass(frozen=True)
class PairwiseAccuracy:
    correct: int
    total: int

    @property
    def accuracy(self) -> float:
        return self.correct / self.total if self.total else float("nan")


@dataclass(frozen=True)
class PairwiseReport:
    per_type: dict[str, PairwiseAccuracy]
    overall: PairwiseAccuracy


def _as_vector(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ValidationError(f"{name} must be 1-D")
    if not np.isfinite(arr).all():
        raise ValidationError(f"{name} contains a non-finite value")
    return arr


def _check_correlation_inputs(x, y) -> tuple[np.ndarray, np.ndarray]:
    xv = _as_vector(x, "x")
    yv = _as_vector(y, "y")
    if len(xv) != len(yv):
        raise ValidationError(f"length mismatch: {len(xv)} vs {len(yv)}")
    if len(xv) < 2:
        raise ValidationError("correlation requires at least 2 observations")
    for name, v in (("x", xv), ("y", yv)):
        if (v == v[0]).all():
            raise UndefinedCorrelationError(
                f"correlation undefined: all values of {name} are tied"
            )
    return xv, yv


def kendall_tau_b(x, y) -> float:
    """Kendall's tau-b (tie-corrected) between two score vectors."""
    xv, yv = _check_correlation_inputs(x, y)
    return float(stats.kendalltau(xv, yv, variant="b").statistic)


def spearman_rho(x, y) -> float:
    """Spearman's rho: Pearson correlation of average ranks."""
    xv, yv = _check_correlation_inputs(x, y)
    return float(stats.spearmanr(xv, yv).statistic)


def pairwise_accuracy(
    pairs: Sequence[PairInstance], scores: Mapping[str, float]
) -> PairwiseReport:
    """Fraction of pairs where the human-preferred candidate got the
    strictly higher metric score; equal scores count as incorrect.

    Reported per pair type and overall.
    """
    missing = sorted(
        {c for p in pairs for c in (p.candidate_a, p.candidate_b) if c not in scores}
    )
    if missing:
        raise ValidationError(f"missing metric scores for candidates: {missing}")
    correct: dict[str, int] = {t: 0 for t in PAIR_TYPES}
    total: dict[str, int] = {t: 0 for t in PAIR_TYPES}
    for p in pairs:
        preferred, other = (
            (p.candidate_a, p.candidate_b)
            if p.human_choice == "A"
            else (p.candidate_b, p.candidate_a)
        )
        total[p.pair_type] += 1
        if scores[preferred] > scores[other]:
            correct[p.pair_type] += 1
    per_type = {t: PairwiseAccuracy(correct[t], total[t]) for t in PAIR_TYPES}
    return PairwiseReport(
        per_type=per_type,
        overall=PairwiseAccuracy(sum(correct.values()), sum(total.values())),
    )


@dataclass
class SweepResult:
    accuracy_by_count: dict[int, PairwiseReport]
    degenerate_by_count: dict[int, int]
    clamped_samples: int = 0


PairScorer = Callable[[PairInstance, Sequence[str]], tuple[float, float]]


def reference_sweep(
    pairs: Sequence[PairInstance],
    refs_by_image: Mapping[str, Sequence[str]],
    scorer_factory: Callable[[Mapping[str, Sequence[str]]], PairScorer],
    ref_counts: Iterable[int],
    seed: int,
) -> SweepResult:
    """Pairwise accuracy as a function of the number of references.

    For each requested count, a reference subset is drawn per image
    without replacement from a generator seeded by (seed, count), so the
    whole sweep is reproducible and per-count work is independent.
    Requests beyond an image's available references are clamped (and
    counted). Subsets keep the original reference order, so a count equal
    to the full set reproduces the unswept scores exactly.

    ``scorer_factory`` receives the complete per-image subset map for a
    count (so corpus-level statistics like CIDEr's idf can be rebuilt)
    and returns the pair scorer used for that count.
    """
    counts = list(ref_counts)
    if any(c < 1 for c in counts):
        raise ValidationError("reference counts must be >= 1")
    result = SweepResult(accuracy_by_count={}, degenerate_by_count={})
    for count in counts:
        rng = np.random.default_rng([seed, count])
        subsets: dict[str, list[str]] = {}
        for image_id in sorted(refs_by_image):
            available = list(refs_by_image[image_id])
            take = min(count, len(available))
            if take < count:
                result.clamped_samples += 1
            chosen = sorted(rng.choice(len(available), size=take, replace=False))
            subsets[image_id] = [available[i] for i in chosen]
        score_pair = scorer_factory(subsets)
        scores: dict[str, float] = {}
        scored_pairs: list[PairInstance] = []
        degenerate = 0
        for p in pairs:
            try:
                score_a, score_b = score_pair(p, subsets[p.image_id])
            except DegenerateInstanceError:
                degenerate += 1
                continue
            scores[p.candidate_a] = score_a
            scores[p.candidate_b] = score_b
            scored_pairs.append(p)
        result.degenerate_by_count[count] = degenerate
        result.accuracy_by_count[count] = pairwise_accuracy(scored_pairs, scores)
    return result


def map_score_groups(metric_scores, human_scores, n_levels: int) -> np.ndarray:
    """Project continuous metric scores onto the human score scale.

    Instances are sorted by metric score (ties keep input order) and
    assigned the human score levels from lowest to highest so that each
    level is used exactly as often as it occurs in ``human_scores``. The
    output histogram therefore equals the human-score histogram exactly.
    """
    metric = _as_vector(metric_scores, "metric_scores")
    human = _as_vector(human_scores, "human_scores")
    if len(metric) != len(human):
        raise ValidationError(f"length mismatch: {len(metric)} vs {len(human)}")
    if n_levels < 2:
        raise ValidationError(f"n_levels must be >= 2, got {n_levels}")
    levels, counts = np.unique(human, return_counts=True)
    if len(levels) > n_levels:
        raise ValidationError(
            f"human scores take {len(levels)} distinct values, more than "
            f"n_levels={n_levels}"
        )
    sorted_levels = np.repeat(levels, counts)
    order = np.argsort(metric, kind="stable")
    out = np.empty(len(metric), dtype=np.float64)
    out[order] = sorted_levels
    if np.all(levels == np.round(levels)):
        return out.astype(np.int64)
    return out
