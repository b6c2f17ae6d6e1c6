"""Text-only caption metrics: BLEU-1/4, ROUGE-L, and CIDEr.

These are the rule-based comparison metrics. All operate on
``TokenizedCaption`` produced by :func:`tokenize` (lowercase, punctuation
stripped except within-word apostrophes, whitespace split), so scoring is
deterministic byte-for-byte for a given input string. The implementations
follow the classic definitions: clipped n-gram precision with a brevity
penalty and no smoothing for BLEU, LCS-based F-measure (beta = 1.2, max
over references) for ROUGE-L, and tf-idf n-gram cosines with a Gaussian
length penalty (sigma = 6) averaged over n = 1..4 and scaled by 10 for
CIDEr.
"""

import math
import re
from collections import Counter
from dataclasses import dataclass, field

from .errors import ValidationError

MAX_NGRAM = 4
ROUGE_BETA = 1.2
CIDER_SIGMA = 6.0

_TOKEN_RE = re.compile(r"[^\W_]+(?:'[^\W_]+)*")


@dataclass(frozen=True)
class TokenizedCaption:
    tokens: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.tokens)


def tokenize(text: str) -> TokenizedCaption:
    """Lowercase and split into word tokens; apostrophes survive only
    inside a word ("don't" stays, quoting apostrophes are stripped)."""
    return TokenizedCaption(tokens=tuple(_TOKEN_RE.findall(text.lower())))


def ngram_counts(tokens: tuple[str, ...], n: int) -> Counter:
    return Counter(tokens[i : i + n] for i in range(len(tokens) - n + 1))


def _check_refs(refs: list[TokenizedCaption]) -> None:
    if not refs:
        raise ValidationError("at least one reference caption is required")


def bleu(candidate: TokenizedCaption, refs: list[TokenizedCaption], max_n: int = 4) -> float:
    """Geometric mean of clipped n-gram precisions for n = 1..max_n times
    the brevity penalty (closest reference length; ties to the shorter).

    An empty candidate, or any order with zero precision, scores 0 (no
    smoothing).
    """
    _check_refs(refs)
    if max_n not in (1, 2, 3, 4):
        raise ValidationError(f"max_n must be in 1..4, got {max_n}")
    cand = candidate.tokens
    if not cand:
        return 0.0
    log_sum = 0.0
    for n in range(1, max_n + 1):
        counts = ngram_counts(cand, n)
        total = sum(counts.values())
        if total == 0:
            return 0.0
        clipped = 0
        for gram, count in counts.items():
            best = max(ngram_counts(r.tokens, n).get(gram, 0) for r in refs)
            clipped += min(count, best)
        if clipped == 0:
            return 0.0
        log_sum += math.log(clipped / total)
    c = len(cand)
    r = min((len(ref) for ref in refs), key=lambda rl: (abs(rl - c), rl))
    brevity = 1.0 if c >= r else math.exp(1.0 - r / c)
    return brevity * math.exp(log_sum / max_n)


def _lcs_length(a: tuple[str, ...], b: tuple[str, ...]) -> int:
    # standard dynamic program, rolling row
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l(candidate: TokenizedCaption, refs: list[TokenizedCaption]) -> float:
    """LCS-based F-measure with beta = 1.2, maximized over references."""
    _check_refs(refs)
    cand = candidate.tokens
    if not cand:
        return 0.0
    beta_sq = ROUGE_BETA * ROUGE_BETA
    best = 0.0
    for ref in refs:
        lcs = _lcs_length(cand, ref.tokens)
        if lcs == 0:
            continue
        precision = lcs / len(cand)
        recall = lcs / len(ref)
        score = (1 + beta_sq) * recall * precision / (recall + beta_sq * precision)
        best = max(best, score)
    return best


@dataclass
class CorpusIdf:
    """Document frequencies of n-grams over a corpus of reference sets.

    ``df[gram]`` counts how many images (reference sets) contain the
    n-gram at least once. Unseen n-grams get df clamped to 1, i.e. idf =
    log(corpus_size).
    """

    corpus_size: int
    df: dict[tuple[str, ...], int] = field(default_factory=dict)

    def idf(self, gram: tuple[str, ...]) -> float:
        return math.log(self.corpus_size / max(1, self.df.get(gram, 0)))


def build_idf(all_reference_sets: list[list[TokenizedCaption]]) -> CorpusIdf:
    if not all_reference_sets:
        raise ValidationError("cannot build idf statistics from an empty corpus")
    df: dict[tuple[str, ...], int] = {}
    for refs in all_reference_sets:
        seen: set[tuple[str, ...]] = set()
        for ref in refs:
            for n in range(1, MAX_NGRAM + 1):
                seen.update(ngram_counts(ref.tokens, n).keys())
        for gram in seen:
            df[gram] = df.get(gram, 0) + 1
    return CorpusIdf(corpus_size=len(all_reference_sets), df=df)


def _tfidf_vector(tokens: tuple[str, ...], n: int, idf: CorpusIdf) -> dict:
    return {
        gram: count * idf.idf(gram)
        for gram, count in ngram_counts(tokens, n).items()
    }


def _cosine_sparse(a: dict, b: dict) -> float:
    norm_a = math.sqrt(sum(v * v for v in a.values()))
    norm_b = math.sqrt(sum(v * v for v in b.values()))
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    dot = sum(v * b[g] for g, v in a.items() if g in b)
    return dot / (norm_a * norm_b)


def cider(candidate: TokenizedCaption, refs: list[TokenizedCaption], idf: CorpusIdf) -> float:
    """Average over n = 1..4 of 10x the mean, over references, of the
    length-penalized cosine between tf-idf n-gram vectors."""
    _check_refs(refs)
    if idf.corpus_size < 1:
        raise ValidationError("idf statistics are empty")
    cand = candidate.tokens
    if not cand:
        return 0.0
    total = 0.0
    for n in range(1, MAX_NGRAM + 1):
        cand_vec = _tfidf_vector(cand, n, idf)
        acc = 0.0
        for ref in refs:
            penalty = math.exp(
                -((len(cand) - len(ref)) ** 2) / (2.0 * CIDER_SIGMA**2)
            )
            acc += penalty * _cosine_sparse(cand_vec, _tfidf_vector(ref.tokens, n, idf))
        total += 10.0 * acc / len(refs)
    return total / MAX_NGRAM
