"""Grounding-based image caption evaluation.

Scores a candidate caption against an image's region embeddings and a
set of human reference captions by comparing grounding vectors: region
rank similarity (NDCG) plus weight-distribution similarity (sigmoid of
KL divergence and a relevance log-ratio), averaged into the final score.
Ships the classic text baselines (BLEU, ROUGE-L, CIDEr) and a
meta-evaluation harness (rank correlations, pairwise accuracy,
reference sweeps) for comparing metrics against human judgments.
"""

from .backend import backend_name
from .baselines import CorpusIdf, TokenizedCaption, bleu, build_idf, cider, rouge_l, tokenize
from .grounding import (
    GroundingConfig,
    GroundingVector,
    RegionMatrix,
    WordMatrix,
    attention_vector,
    attention_weights,
    cosine,
    grounding_vector,
    mean_grounding,
    normalized_sim,
    reference_grounding,
)
from .metaeval import (
    EvalInstance,
    MetricReport,
    PairInstance,
    PairwiseReport,
    kendall_tau_b,
    map_score_groups,
    pairwise_accuracy,
    reference_sweep,
    spearman_rho,
)
from .tiger import (
    TigerBreakdown,
    TigerConfig,
    dcg,
    kl_divergence,
    relevance_diff,
    rrs,
    tiger_score,
    wds,
)

__version__ = "0.1.0"

__all__ = [
    "CorpusIdf",
    "EvalInstance",
    "GroundingConfig",
    "GroundingVector",
    "MetricReport",
    "PairInstance",
    "PairwiseReport",
    "RegionMatrix",
    "TigerBreakdown",
    "TigerConfig",
    "TokenizedCaption",
    "WordMatrix",
    "attention_vector",
    "attention_weights",
    "backend_name",
    "bleu",
    "build_idf",
    "cider",
    "cosine",
    "dcg",
    "grounding_vector",
    "kendall_tau_b",
    "kl_divergence",
    "map_score_groups",
    "mean_grounding",
    "normalized_sim",
    "pairwise_accuracy",
    "reference_grounding",
    "reference_sweep",
    "relevance_diff",
    "rouge_l",
    "rrs",
    "spearman_rho",
    "tiger_score",
    "tokenize",
    "wds",
]
