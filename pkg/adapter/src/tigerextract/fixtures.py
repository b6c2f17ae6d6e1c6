"""Synthetic desk-scale fixture bundles.

Generates a manifest, TFV1 tensors, and scored/pairs JSONL datasets that
exercise the scoring package end to end with no model download: random
instances plus two analytically known ones: an identity instance whose
candidate tensor equals its only reference (final score exactly 0.75)
and a degenerate instance whose reference grounding is entirely
nonpositive (skipped by the scorer with a reason). Everything is a pure
function of the seed, byte for byte.
"""

import json
from pathlib import Path

import numpy as np

from . import tfv

WORD_BANK = (
    "a the young old man woman dog cat rides walks holds throws red blue "
    "small large bike ball stick park street grass water smiling running"
).split()

PAIR_TYPES = ("HC", "HI", "HM", "MM")


def _sentence(rng) -> str:
    length = int(rng.integers(3, 9))
    return " ".join(WORD_BANK[int(i)] for i in rng.integers(0, len(WORD_BANK), length))


def make_fixtures(seed: int, n: int, m: int, d: int, count: int, out_dir) -> dict:
    """Write a fixture bundle and return its summary.

    ``n``/``m`` bound regions per image and words per caption, ``d`` is
    the embedding dimension (kept small by contract), ``count`` the
    number of scored instances including the identity and degenerate
    ones.
    """
    if d > 16:
        raise ValueError(f"fixture dimension d={d} exceeds the desk-scale limit 16")
    if min(n, m, d) < 1:
        raise ValueError("n, m and d must all be >= 1")
    if count < 2:
        raise ValueError("count must be >= 2 (identity + degenerate are always included)")

    rng = np.random.default_rng(seed)
    out_dir = Path(out_dir)
    tensor_dir = out_dir / "tensors"
    tensor_dir.mkdir(parents=True, exist_ok=True)

    images: dict[str, str] = {}
    captions: dict[str, str] = {}
    scored_records = []
    pair_records = []

    def put_tensor(kind: str, item_id: str, matrix) -> None:
        rel = f"tensors/{item_id}.tfv"
        tfv.write_tensor(out_dir / rel, np.asarray(matrix, dtype=np.float32))
        (images if kind == "image" else captions)[item_id] = rel

    def word_matrix():
        return rng.standard_normal((int(rng.integers(1, m + 1)), d))

    # regular instances
    for k in range(count - 2):
        image_id = f"img{k:03d}"
        cand_id = f"cand{k:03d}"
        ref_ids = [f"ref{k:03d}_0", f"ref{k:03d}_1"]
        put_tensor("image", image_id, rng.standard_normal((n, d)))
        put_tensor("caption", cand_id, word_matrix())
        for ref_id in ref_ids:
            put_tensor("caption", ref_id, word_matrix())
        ref_texts = [_sentence(rng) for _ in ref_ids]
        scored_records.append(
            {
                "image_id": image_id,
                "caption_id": cand_id,
                "caption": _sentence(rng),
                "references": [
                    {"caption_id": rid, "text": text}
                    for rid, text in zip(ref_ids, ref_texts)
                ],
                "human_score": int(rng.integers(1, 6)),
                "scale": [1, 5],
            }
        )
        pair_records.append(
            {
                "image_id": image_id,
                "candidate_a": {"caption_id": cand_id, "text": scored_records[-1]["caption"]},
                "candidate_b": {"caption_id": ref_ids[0], "text": ref_texts[0]},
                "human_choice": "A" if k % 2 == 0 else "B",
                "pair_type": PAIR_TYPES[k % len(PAIR_TYPES)],
                "references": scored_records[-1]["references"],
            }
        )

    # identity instance: candidate tensor is byte-identical to its only
    # reference, so the breakdown is exactly (1.0, 0.5, 0.75)
    identity_words = word_matrix()
    identity_text = _sentence(rng)
    put_tensor("image", "img_identity", rng.standard_normal((n, d)))
    put_tensor("caption", "cand_identity", identity_words)
    put_tensor("caption", "ref_identity", identity_words)
    scored_records.append(
        {
            "image_id": "img_identity",
            "caption_id": "cand_identity",
            "caption": identity_text,
            "references": [{"caption_id": "ref_identity", "text": identity_text}],
            "human_score": 5,
            "scale": [1, 5],
        }
    )

    # degenerate instance: orthonormal-basis regions vs an anti-aligned
    # reference word make every reference grounding score negative, so
    # all DCG gains clamp to zero
    n_degen = min(n, d)
    put_tensor("image", "img_degen", np.eye(n_degen, d))
    put_tensor("caption", "cand_degen", word_matrix())
    put_tensor("caption", "ref_degen", -np.ones((1, d)) / np.sqrt(d))
    scored_records.append(
        {
            "image_id": "img_degen",
            "caption_id": "cand_degen",
            "caption": _sentence(rng),
            "references": [{"caption_id": "ref_degen", "text": _sentence(rng)}],
            "human_score": 1,
            "scale": [1, 5],
        }
    )

    manifest = {"d": d, "images": images, "captions": captions}
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    )
    for name, records in (("scored.jsonl", scored_records), ("pairs.jsonl", pair_records)):
        with open(out_dir / name, "w", encoding="utf-8") as handle:
            for record in records:
                handle.write(json.dumps(record, sort_keys=True) + "\n")

    return {
        "out": str(out_dir),
        "images": len(images),
        "captions": len(captions),
        "scored_instances": len(scored_records),
        "pairs": len(pair_records),
        "d": d,
    }
