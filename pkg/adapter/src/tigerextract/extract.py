"""Extraction jobs: encoder outputs to TFV1 bundles plus a manifest.

Region inputs are precomputed bottom-up detector features, one ``.npy``
of shape (36, img_dim) per image (running the detector itself is out of
scope; see the README). Captions arrive as JSONL records
``{"caption_id": ..., "text": ...}``. Outputs land in the job's
directory as ``tensors/<id>.tfv`` plus a ``manifest.json`` in the format
the scoring package loads. Per-item failures (unreadable feature file,
empty caption) are recorded and skipped; the job continues.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import tfv
from .encoders import GroundingEncoders

REGION_COUNT = 36


@dataclass
class ExtractionJob:
    output_dir: Path
    feature_files: dict[str, Path] = field(default_factory=dict)  # image_id -> .npy
    captions: dict[str, str] = field(default_factory=dict)  # caption_id -> text

    def __post_init__(self):
        self.output_dir = Path(self.output_dir)
        if not self.captions and not self.feature_files:
            raise ValueError("extraction job has neither images nor captions")
        for caption_id, text in self.captions.items():
            if not text or not text.strip():
                raise ValueError(f"caption '{caption_id}' is empty")


@dataclass
class ExtractionResult:
    written: dict[str, str] = field(default_factory=dict)  # id -> relative path
    errors: list[dict] = field(default_factory=list)


def _load_manifest(path: Path) -> dict:
    if path.exists():
        return json.loads(path.read_text())
    return {"d": None, "images": {}, "captions": {}}


def _store_manifest(path: Path, manifest: dict) -> None:
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _prepare(job: ExtractionJob, encoders: GroundingEncoders) -> tuple[dict, Path]:
    tensor_dir = job.output_dir / "tensors"
    tensor_dir.mkdir(parents=True, exist_ok=True)
    manifest_path = job.output_dir / "manifest.json"
    manifest = _load_manifest(manifest_path)
    if manifest["d"] is None:
        manifest["d"] = encoders.d
    elif manifest["d"] != encoders.d:
        raise ValueError(
            f"{manifest_path}: manifest declares d={manifest['d']} but the "
            f"checkpoint produces d={encoders.d}"
        )
    return manifest, manifest_path


def extract_regions(job: ExtractionJob, encoders: GroundingEncoders) -> ExtractionResult:
    """Project each image's precomputed features into one (36, d) tensor."""
    manifest, manifest_path = _prepare(job, encoders)
    result = ExtractionResult()
    for image_id in sorted(job.feature_files):
        source = Path(job.feature_files[image_id])
        try:
            features = np.load(source)
            if features.ndim != 2 or features.shape[0] != REGION_COUNT:
                raise ValueError(
                    f"expected ({REGION_COUNT}, img_dim) features, got {features.shape}"
                )
            projected = encoders.encode_regions(np.asarray(features, dtype=np.float32))
        except Exception as exc:
            result.errors.append({"image_id": image_id, "reason": str(exc)})
            continue
        rel = f"tensors/{image_id}.tfv"
        tfv.write_tensor(job.output_dir / rel, projected)
        manifest["images"][image_id] = rel
        result.written[image_id] = rel
    _store_manifest(manifest_path, manifest)
    return result


def extract_words(job: ExtractionJob, encoders: GroundingEncoders) -> ExtractionResult:
    """Encode each caption into one (m, d) tensor; m counts the encoder's
    token sequence for the caption."""
    manifest, manifest_path = _prepare(job, encoders)
    result = ExtractionResult()
    for caption_id in sorted(job.captions):
        try:
            encoded = encoders.encode_caption(job.captions[caption_id])
        except Exception as exc:
            result.errors.append({"caption_id": caption_id, "reason": str(exc)})
            continue
        rel = f"tensors/{caption_id}.tfv"
        tfv.write_tensor(job.output_dir / rel, encoded)
        manifest["captions"][caption_id] = rel
        result.written[caption_id] = rel
    _store_manifest(manifest_path, manifest)
    return result


def load_caption_file(path) -> dict[str, str]:
    """JSONL of {"caption_id", "text"} records -> id -> text mapping."""
    captions: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            record = json.loads(line)
            caption_id = record.get("caption_id")
            text = record.get("text")
            if not isinstance(caption_id, str) or not isinstance(text, str):
                raise ValueError(f"{path}:{line_no}: need caption_id and text strings")
            if caption_id in captions:
                raise ValueError(f"{path}:{line_no}: duplicate caption_id '{caption_id}'")
            captions[caption_id] = text
    return captions


def discover_feature_files(directory) -> dict[str, Path]:
    """Map image ids to feature files: every ``<image_id>.npy`` under the
    given directory."""
    directory = Path(directory)
    return {path.stem: path for path in sorted(directory.glob("*.npy"))}
