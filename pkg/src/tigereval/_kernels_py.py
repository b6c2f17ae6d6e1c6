"""Pure-NumPy implementation of the hot numeric kernels.

This is the fallback backend used when the compiled extension is not
available (or is disabled via ``TIGEREVAL_PURE_PYTHON=1``). Both backends
implement the same function set with the same semantics:

- all computation in float64,
- cosines clipped to [-1, 1],
- per-word column norms accumulated over *sorted* squared scores, which
  makes the grounding pipeline exactly equivariant under region
  permutations,
- results are bit-reproducible run to run for a fixed backend.

The two backends agree to ~1e-15 relative but are not bit-identical to
each other (BLAS and the C loops order their accumulations differently).
"""

import numpy as np

name = "python"


def row_norms(x: np.ndarray) -> np.ndarray:
    return np.sqrt((x * x).sum(axis=1))


def cosine_matrix(v: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Cosine similarity of every (region row, word row) pair."""
    s = (v @ w.T) / np.outer(row_norms(v), row_norms(w))
    return np.clip(s, -1.0, 1.0, out=s)


def positive_colnorm_sim(scores: np.ndarray) -> np.ndarray:
    """Clamp scores at zero and L2-normalize each word column over regions.

    Columns whose scores are all nonpositive come out all-zero. The sum of
    squares is taken in ascending value order so that permuting the region
    rows permutes the output exactly.
    """
    p = np.maximum(scores, 0.0)
    colnorm = np.sqrt(np.sort(p * p, axis=0).sum(axis=0))
    return np.divide(p, colnorm, out=np.zeros_like(p), where=colnorm > 0.0)


def softmax_rows(x: np.ndarray, scale: float) -> np.ndarray:
    """Row-wise softmax of ``scale * x`` with max-subtraction."""
    t = scale * x
    t -= t.max(axis=1, keepdims=True)
    e = np.exp(t)
    e /= e.sum(axis=1, keepdims=True)
    return e


def average_rows(weights: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Weighted averages of the rows of ``w``: out[i] = sum_j weights[i,j]*w[j]."""
    return weights @ w


def row_cosines(v: np.ndarray, a: np.ndarray) -> tuple[np.ndarray, int]:
    """Cosine of paired rows. Returns (scores, index of first zero-norm row
    of ``a``, or -1 if none)."""
    nv = row_norms(v)
    na = row_norms(a)
    zero = np.flatnonzero(na == 0.0)
    if zero.size:
        return np.zeros(len(v)), int(zero[0])
    s = np.einsum("ij,ij->i", v, a) / (nv * na)
    return np.clip(s, -1.0, 1.0, out=s), -1


def grounding_scores(v: np.ndarray, w: np.ndarray, lam: float) -> tuple[np.ndarray, int]:
    """Full grounding pipeline for one (regions, words) pair."""
    sim = positive_colnorm_sim(cosine_matrix(v, w))
    alpha = softmax_rows(sim, lam)
    return row_cosines(v, average_rows(alpha, w))


def dcg(gains: np.ndarray) -> float:
    """Position-discounted sum of gains taken in list order."""
    k = np.arange(2, len(gains) + 2, dtype=np.float64)
    return float((gains / np.log2(k)).sum())


def softmax_vec(x: np.ndarray, scale: float = 1.0) -> np.ndarray:
    t = scale * x
    t = t - t.max()
    e = np.exp(t)
    return e / e.sum()


def kl_from_scores(p_raw: np.ndarray, q_raw: np.ndarray) -> float:
    """KL(P||Q) in nats for P, Q obtained by unit-temperature softmax.

    Computed via log-softmax; identical inputs give exactly 0. Tiny
    negative rounding residues are clamped to 0 (KL is nonnegative).
    """
    lp = _log_softmax(p_raw)
    lq = _log_softmax(q_raw)
    kl = float(np.exp(lp) @ (lp - lq))
    return kl if kl > 0.0 else 0.0


def _log_softmax(x: np.ndarray) -> np.ndarray:
    t = x - x.max()
    return t - np.log(np.exp(t).sum())
