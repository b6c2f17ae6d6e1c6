"""On-disk fixture bundle builders shared across test modules."""

import json
from pathlib import Path

import numpy as np

from tigereval.dataio import write_manifest, write_tensor


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record) + "\n")


def build_bundle(root: Path, d: int = 4, seed: int = 0):
    """Small on-disk manifest + scored dataset.

    im0 carries the identity instance: candidate c0 and the only
    reference r0 point at byte-identical tensors, so its breakdown is
    exactly (rrs=1, wds=0.5, tiger=0.75). im1 is a generic instance with
    two references.
    """
    rng = np.random.default_rng(seed)
    tensor_dir = root / "tensors"
    tensor_dir.mkdir(parents=True, exist_ok=True)

    regions = {
        "im0": rng.standard_normal((3, d)).astype(np.float32),
        "im1": rng.standard_normal((2, d)).astype(np.float32),
    }
    shared = rng.standard_normal((4, d)).astype(np.float32)
    captions = {
        "c0": shared,
        "r0": shared,
        "c1": rng.standard_normal((5, d)).astype(np.float32),
        "r1": rng.standard_normal((3, d)).astype(np.float32),
        "r2": rng.standard_normal((4, d)).astype(np.float32),
    }
    image_paths = {}
    caption_paths = {}
    for image_id, mat in regions.items():
        write_tensor(tensor_dir / f"{image_id}.tfv", mat)
        image_paths[image_id] = f"tensors/{image_id}.tfv"
    for caption_id, mat in captions.items():
        write_tensor(tensor_dir / f"{caption_id}.tfv", mat)
        caption_paths[caption_id] = f"tensors/{caption_id}.tfv"

    manifest_path = root / "manifest.json"
    write_manifest(manifest_path, d, image_paths, caption_paths)

    dataset_path = root / "scored.jsonl"
    write_jsonl(
        dataset_path,
        [
            {
                "image_id": "im0",
                "caption_id": "c0",
                "caption": "a man rides a bike",
                "references": [{"caption_id": "r0", "text": "a man rides a bike"}],
                "human_score": 5,
                "scale": [1, 5],
            },
            {
                "image_id": "im1",
                "caption_id": "c1",
                "caption": "two dogs play with a ball",
                "references": [
                    {"caption_id": "r1", "text": "dogs playing with a ball"},
                    {"caption_id": "r2", "text": "a pair of dogs in the yard"},
                ],
                "human_score": [3, 4, 2],
                "scale": [1, 5],
            },
        ],
    )
    return {
        "manifest": manifest_path,
        "dataset": dataset_path,
        "tensors": tensor_dir,
        "regions": regions,
        "captions": captions,
    }
