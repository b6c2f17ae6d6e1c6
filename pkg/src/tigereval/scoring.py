"""Dataset-level scoring orchestration shared by the CLI and tests.

Ties the pieces together: tensor providers (manifest-backed or
in-memory), per-instance TIGEr breakdowns with a per-image memo for
reference means, optional on-disk caching, deterministic thread-pool
fan-out, and text-baseline scoring. All collection happens in input
order, so reports are identical for any thread count.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import chain

import numpy as np

from . import baselines
from .dataio.cache import GroundingCache
from .dataio.datasets import CaptionRef, Manifest, PairRecord, ScoredRecord
from .dataio.tensorfile import read_tensor
from .errors import DegenerateInstanceError, DomainError, ManifestError
from .grounding import (
    GroundingConfig,
    GroundingVector,
    RegionMatrix,
    WordMatrix,
    grounding_vector,
    mean_grounding,
)
from .tiger import TigerConfig, tiger_score

BASELINE_METRICS = ("bleu1", "bleu4", "rougel", "cider")


def _parallel_map(fn, items, threads: int) -> list:
    """Apply ``fn`` to items, results in input order.

    Work is split into one contiguous chunk per worker (not one task per
    item), which keeps thread overhead negligible while the kernels'
    GIL-free sections overlap. Chunk boundaries cannot affect results:
    ``fn`` is pure per item.
    """
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    workers = min(threads, len(items))
    step = (len(items) + workers - 1) // workers
    chunks = [items[i : i + step] for i in range(0, len(items), step)]

    def run_chunk(chunk):
        return [fn(item) for item in chunk]

    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(chain.from_iterable(pool.map(run_chunk, chunks)))


class InMemoryTensors:
    """Tensor provider over prebuilt matrices (tests, adapters)."""

    def __init__(self, regions: dict[str, RegionMatrix], words: dict[str, WordMatrix]):
        self._regions = regions
        self._words = words

    def get_regions(self, image_id: str) -> RegionMatrix:
        if image_id not in self._regions:
            raise ManifestError(f"image id '{image_id}' has no region tensor")
        return self._regions[image_id]

    def get_words(self, caption_id: str) -> WordMatrix:
        if caption_id not in self._words:
            raise ManifestError(f"caption id '{caption_id}' has no word tensor")
        return self._words[caption_id]


class ManifestTensors:
    """Lazy manifest-backed provider; loaded matrices are memoized.

    Tensors are stored float32 and promoted to float64 once at load.
    """

    def __init__(self, manifest: Manifest):
        self.manifest = manifest
        self._regions: dict[str, RegionMatrix] = {}
        self._words: dict[str, WordMatrix] = {}

    def get_regions(self, image_id: str) -> RegionMatrix:
        if image_id not in self._regions:
            raw = read_tensor(self.manifest.region_path(image_id))
            self._regions[image_id] = RegionMatrix(
                image_id=image_id, vectors=raw.astype(np.float64)
            )
        return self._regions[image_id]

    def get_words(self, caption_id: str) -> WordMatrix:
        if caption_id not in self._words:
            raw = read_tensor(self.manifest.word_path(caption_id))
            self._words[caption_id] = WordMatrix(
                caption_id=caption_id, vectors=raw.astype(np.float64)
            )
        return self._words[caption_id]


@dataclass
class ScoreRun:
    rows: list[dict] = field(default_factory=list)
    skipped: list[dict] = field(default_factory=list)


class TigerScorer:
    """Scores (candidate, references) instances against one provider.

    Reference mean vectors are memoized per (image, reference-id tuple);
    the memo is safe under concurrent use because grounding is pure (a
    race at worst recomputes the identical value).
    """

    def __init__(self, tensors, gcfg: GroundingConfig, tcfg: TigerConfig, cache: GroundingCache | None = None):
        self.tensors = tensors
        self.gcfg = gcfg
        self.tcfg = tcfg
        self.cache = cache
        self._ref_means: dict[tuple[str, tuple[str, ...]], GroundingVector] = {}

    def _ground(self, image_id: str, caption_id: str) -> GroundingVector:
        regions = self.tensors.get_regions(image_id)
        words = self.tensors.get_words(caption_id)
        if self.cache is not None:
            return self.cache.get_or_compute(regions, words, self.gcfg)
        return grounding_vector(regions, words, self.gcfg)

    def candidate_grounding(self, image_id: str, caption_id: str) -> GroundingVector:
        return self._ground(image_id, caption_id)

    def reference_mean(self, image_id: str, ref_ids: tuple[str, ...]) -> GroundingVector:
        key = (image_id, ref_ids)
        if key not in self._ref_means:
            self._ref_means[key] = mean_grounding(
                [self._ground(image_id, rid) for rid in ref_ids]
            )
        return self._ref_means[key]

    def breakdown(self, image_id: str, caption_id: str, ref_ids: tuple[str, ...]):
        cand = self.candidate_grounding(image_id, caption_id)
        ref = self.reference_mean(image_id, ref_ids)
        return tiger_score(cand, ref, self.tcfg)


def score_records(
    tensors,
    records: list[ScoredRecord],
    gcfg: GroundingConfig,
    tcfg: TigerConfig,
    threads: int = 1,
    cache: GroundingCache | None = None,
) -> ScoreRun:
    """One TIGEr breakdown row per record, in input order. Instances that
    cannot be scored (degenerate gains, cancelling word vectors) land in
    ``skipped`` with a reason instead of aborting the run."""
    scorer = TigerScorer(tensors, gcfg, tcfg, cache=cache)

    def one(record: ScoredRecord):
        ref_ids = tuple(r.caption_id for r in record.references)
        try:
            b = scorer.breakdown(record.image_id, record.caption_id, ref_ids)
        except (DegenerateInstanceError, DomainError) as exc:
            return {
                "image_id": record.image_id,
                "caption_id": record.caption_id,
                "reason": str(exc),
            }, None
        row = {
            "image_id": record.image_id,
            "caption_id": record.caption_id,
            "rrs": b.rrs,
            "wds": b.wds,
            "d_kl": b.d_kl,
            "d_rel": b.d_rel,
            "tiger": b.tiger,
        }
        return None, row

    outcomes = _parallel_map(one, records, threads)

    run = ScoreRun()
    for skipped, row in outcomes:
        if row is not None:
            run.rows.append(row)
        else:
            run.skipped.append(skipped)
    return run


def grounding_rows(
    tensors,
    pairs: list[tuple[str, str]],
    gcfg: GroundingConfig,
    threads: int = 1,
    cache: GroundingCache | None = None,
) -> list[dict]:
    """Per-region grounding scores for (image_id, caption_id) pairs, one
    row per region, ordered by input pair then region index."""

    def one(pair):
        image_id, caption_id = pair
        regions = tensors.get_regions(image_id)
        words = tensors.get_words(caption_id)
        if cache is not None:
            gv = cache.get_or_compute(regions, words, gcfg)
        else:
            gv = grounding_vector(regions, words, gcfg)
        return [
            {
                "image_id": image_id,
                "caption_id": caption_id,
                "region_index": k,
                "grounding_score": float(s),
            }
            for k, s in enumerate(gv.scores)
        ]

    chunks = _parallel_map(one, pairs, threads)
    return [row for chunk in chunks for row in chunk]


def dedup_caption_pairs(records) -> list[tuple[str, str]]:
    """All (image_id, caption_id) pairs referenced by a dataset, candidates
    first then references, without duplicates, in first-seen order."""
    seen: set[tuple[str, str]] = set()
    out: list[tuple[str, str]] = []
    for record in records:
        if isinstance(record, PairRecord):
            captions = [record.candidate_a, record.candidate_b, *record.references]
        else:
            captions = [CaptionRef(record.caption_id, record.caption), *record.references]
        for ref in captions:
            key = (record.image_id, ref.caption_id)
            if key not in seen:
                seen.add(key)
                out.append(key)
    return out


def reference_sets_by_image(records) -> dict[str, list]:
    """Per-image reference captions, deduplicated by caption id in
    first-seen order (records for one image normally share their set)."""
    by_image: dict[str, dict[str, object]] = {}
    for record in records:
        bucket = by_image.setdefault(record.image_id, {})
        for ref in record.references:
            bucket.setdefault(ref.caption_id, ref)
    return {image_id: list(refs.values()) for image_id, refs in by_image.items()}


def baseline_rows(records: list[ScoredRecord]) -> tuple[list[dict], list[dict]]:
    """BLEU-1/4, ROUGE-L and CIDEr per record. CIDEr idf statistics are
    built over the dataset's per-image reference sets. Returns (rows,
    flagged) where flagged lists empty-after-tokenization candidates
    (scored 0, not dropped)."""
    ref_sets = reference_sets_by_image(records)
    tokenized_refs = {
        image_id: [baselines.tokenize(r.text) for r in refs]
        for image_id, refs in ref_sets.items()
    }
    idf = baselines.build_idf(list(tokenized_refs.values()))
    rows = []
    flagged = []
    for record in records:
        cand = baselines.tokenize(record.caption)
        refs = tokenized_refs[record.image_id]
        if not cand.tokens:
            flagged.append(
                {
                    "image_id": record.image_id,
                    "caption_id": record.caption_id,
                    "reason": "candidate tokenizes to nothing; scored 0",
                }
            )
        rows.append(
            {
                "image_id": record.image_id,
                "caption_id": record.caption_id,
                "bleu1": baselines.bleu(cand, refs, max_n=1),
                "bleu4": baselines.bleu(cand, refs, max_n=4),
                "rougel": baselines.rouge_l(cand, refs),
                "cider": baselines.cider(cand, refs, idf),
            }
        )
    return rows, flagged


def score_pairs_full(pairs, refs_by_image, scorer_factory):
    """Score every pair against its image's full reference set.

    Pairs whose scoring raises DegenerateInstanceError are excluded and
    reported, mirroring the sweep behaviour. Returns (scored_pairs,
    scores, excluded).
    """
    score_pair = scorer_factory(refs_by_image)
    scores: dict[str, float] = {}
    scored_pairs = []
    excluded = []
    for p in pairs:
        try:
            a, b = score_pair(p, list(refs_by_image[p.image_id]))
        except DegenerateInstanceError as exc:
            excluded.append(
                {"image_id": p.image_id, "pair": [p.candidate_a, p.candidate_b], "reason": str(exc)}
            )
            continue
        scores[p.candidate_a] = a
        scores[p.candidate_b] = b
        scored_pairs.append(p)
    return scored_pairs, scores, excluded


def make_tiger_pair_scorer_factory(
    tensors,
    gcfg: GroundingConfig,
    tcfg: TigerConfig,
    cache=None,
    component: str = "tiger",
):
    """Scorer factory for pairwise evaluation/sweeps with TIGEr (or one of
    its components: 'rrs', 'wds')."""
    if component not in ("tiger", "rrs", "wds"):
        raise ValueError(f"unknown breakdown component {component!r}")

    def factory(subsets):
        scorer = TigerScorer(tensors, gcfg, tcfg, cache=cache)

        def score_pair(pair, subset_ref_ids):
            ref_ids = tuple(subset_ref_ids)
            a = scorer.breakdown(pair.image_id, pair.candidate_a, ref_ids)
            b = scorer.breakdown(pair.image_id, pair.candidate_b, ref_ids)
            return getattr(a, component), getattr(b, component)

        return score_pair

    return factory


def make_baseline_pair_scorer_factory(metric: str, texts: dict[str, str]):
    """Scorer factory for pairwise evaluation/sweeps with a text metric.

    ``texts`` maps caption ids (candidates and references) to raw text.
    CIDEr rebuilds its idf statistics over each count's subset corpus.
    """
    if metric not in BASELINE_METRICS:
        raise ValueError(f"unknown baseline metric {metric!r}")
    tokenized = {cid: baselines.tokenize(text) for cid, text in texts.items()}

    def factory(subsets):
        idf = None
        if metric == "cider":
            corpus = [[tokenized[rid] for rid in ref_ids] for _, ref_ids in sorted(subsets.items())]
            idf = baselines.build_idf(corpus)

        def score_one(candidate_id, ref_ids):
            cand = tokenized[candidate_id]
            refs = [tokenized[rid] for rid in ref_ids]
            if metric == "bleu1":
                return baselines.bleu(cand, refs, max_n=1)
            if metric == "bleu4":
                return baselines.bleu(cand, refs, max_n=4)
            if metric == "rougel":
                return baselines.rouge_l(cand, refs)
            return baselines.cider(cand, refs, idf)

        def score_pair(pair, subset_ref_ids):
            return (
                score_one(pair.candidate_a, subset_ref_ids),
                score_one(pair.candidate_b, subset_ref_ids),
            )

        return score_pair

    return factory
