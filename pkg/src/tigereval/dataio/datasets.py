"""Manifest and JSONL dataset loading.

The manifest is a single JSON document mapping ids to tensor paths
(relative paths resolve against the manifest's directory):

    {"d": 300,
     "images":   {"im1": "tensors/im1.tfv", ...},
     "captions": {"c1": "tensors/c1.tfv", ...}}

Datasets are JSONL, one record per line. Scored records:

    {"image_id": "im1", "caption_id": "c1", "caption": "a dog runs",
     "references": [{"caption_id": "r1", "text": "the dog is running"}],
     "human_score": 3, "scale": [1, 5]}

``human_score`` may be a list of grader scores; they are averaged here.
Pair records:

    {"image_id": "im1", "pair_type": "HM", "human_choice": "A",
     "candidate_a": {"caption_id": "c1", "text": "..."},
     "candidate_b": {"caption_id": "c2", "text": "..."},
     "references": [...]}          # optional, needed for rescoring

Every schema violation is reported with its 1-based line number.
"""

import json
from dataclasses import dataclass
from pathlib import Path

from ..errors import DatasetFormatError, ManifestError
from . import tensorfile

PAIR_TYPES = ("HC", "HI", "HM", "MM")


@dataclass(frozen=True)
class CaptionRef:
    caption_id: str
    text: str


@dataclass(frozen=True)
class ScoredRecord:
    image_id: str
    caption_id: str
    caption: str
    references: tuple[CaptionRef, ...]
    human_score: float
    scale: tuple[float, float]


@dataclass(frozen=True)
class PairRecord:
    image_id: str
    candidate_a: CaptionRef
    candidate_b: CaptionRef
    human_choice: str
    pair_type: str
    references: tuple[CaptionRef, ...] = ()


@dataclass(frozen=True)
class Manifest:
    root: Path
    d: int
    images: dict[str, str]
    captions: dict[str, str]

    def region_path(self, image_id: str) -> Path:
        if image_id not in self.images:
            raise ManifestError(f"image id '{image_id}' not in manifest")
        return self.root / self.images[image_id]

    def word_path(self, caption_id: str) -> Path:
        if caption_id not in self.captions:
            raise ManifestError(f"caption id '{caption_id}' not in manifest")
        return self.root / self.captions[caption_id]


def _reject_duplicate_keys(pairs):
    seen = set()
    out = {}
    for key, value in pairs:
        if key in seen:
            raise ManifestError(f"duplicate id '{key}' in manifest")
        seen.add(key)
        out[key] = value
    return out


def load_manifest(path, validate: bool = True) -> Manifest:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(), object_pairs_hook=_reject_duplicate_keys)
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: invalid JSON: {exc}") from exc
    for key in ("d", "images", "captions"):
        if key not in raw:
            raise ManifestError(f"{path}: missing key '{key}'")
    if not isinstance(raw["d"], int) or raw["d"] < 1:
        raise ManifestError(f"{path}: 'd' must be a positive integer")
    for section in ("images", "captions"):
        if not isinstance(raw[section], dict) or not all(
            isinstance(k, str) and isinstance(v, str) for k, v in raw[section].items()
        ):
            raise ManifestError(f"{path}: '{section}' must map ids to paths")
    manifest = Manifest(
        root=path.parent, d=raw["d"], images=raw["images"], captions=raw["captions"]
    )
    if validate:
        for section, resolver in (
            ("images", manifest.region_path),
            ("captions", manifest.word_path),
        ):
            for item_id in raw[section]:
                tensor_path = resolver(item_id)
                if not tensor_path.exists():
                    raise ManifestError(
                        f"{path}: {section[:-1]} '{item_id}' references missing "
                        f"file {tensor_path}"
                    )
                dims = tensorfile.read_tensor_header(tensor_path)
                if len(dims) != 2:
                    raise ManifestError(
                        f"{path}: {section[:-1]} '{item_id}' tensor has rank "
                        f"{len(dims)}, expected 2"
                    )
                if dims[1] != manifest.d:
                    raise ManifestError(
                        f"{path}: {section[:-1]} '{item_id}' has d={dims[1]}, "
                        f"manifest declares d={manifest.d}"
                    )
    return manifest


def write_manifest(path, d: int, images: dict[str, str], captions: dict[str, str]) -> None:
    payload = {"d": d, "images": dict(images), "captions": dict(captions)}
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _field(obj: dict, name: str, line: int, kind=None):
    if name not in obj:
        raise DatasetFormatError(line, "missing required field", field=name)
    value = obj[name]
    if kind is not None and not isinstance(value, kind):
        raise DatasetFormatError(
            line, f"expected {getattr(kind, '__name__', kind)}, got {type(value).__name__}",
            field=name,
        )
    return value


def _caption_ref(obj, line: int, field_name: str) -> CaptionRef:
    if not isinstance(obj, dict):
        raise DatasetFormatError(line, "expected an object", field=field_name)
    caption_id = obj.get("caption_id")
    text = obj.get("text")
    if not isinstance(caption_id, str) or not caption_id:
        raise DatasetFormatError(line, "caption_id must be a non-empty string", field=field_name)
    if not isinstance(text, str):
        raise DatasetFormatError(line, "text must be a string", field=field_name)
    return CaptionRef(caption_id=caption_id, text=text)


def _references(obj: dict, line: int, required: bool) -> tuple[CaptionRef, ...]:
    if "references" not in obj:
        if required:
            raise DatasetFormatError(line, "missing required field", field="references")
        return ()
    refs = obj["references"]
    if not isinstance(refs, list) or (required and not refs):
        raise DatasetFormatError(
            line, "references must be a non-empty list", field="references"
        )
    return tuple(_caption_ref(r, line, "references") for r in refs)


def _scored_record(obj: dict, line: int) -> ScoredRecord:
    image_id = _field(obj, "image_id", line, str)
    caption_id = _field(obj, "caption_id", line, str)
    caption = _field(obj, "caption", line, str)
    references = _references(obj, line, required=True)
    scale = _field(obj, "scale", line, list)
    if len(scale) != 2 or not all(isinstance(x, (int, float)) for x in scale):
        raise DatasetFormatError(line, "scale must be [lo, hi]", field="scale")
    lo, hi = float(scale[0]), float(scale[1])
    if not lo < hi:
        raise DatasetFormatError(line, f"empty scale [{lo}, {hi}]", field="scale")
    raw_score = _field(obj, "human_score", line)
    if isinstance(raw_score, (int, float)) and not isinstance(raw_score, bool):
        score = float(raw_score)
    elif isinstance(raw_score, list) and raw_score and all(
        isinstance(x, (int, float)) and not isinstance(x, bool) for x in raw_score
    ):
        # multi-grader records (e.g. three grades per caption) are averaged
        score = sum(float(x) for x in raw_score) / len(raw_score)
    else:
        raise DatasetFormatError(
            line, "human_score must be a number or a non-empty list of numbers",
            field="human_score",
        )
    if not lo <= score <= hi:
        raise DatasetFormatError(
            line, f"human_score {score} outside scale [{lo}, {hi}]", field="human_score"
        )
    return ScoredRecord(
        image_id=image_id,
        caption_id=caption_id,
        caption=caption,
        references=references,
        human_score=score,
        scale=(lo, hi),
    )


def _pair_record(obj: dict, line: int) -> PairRecord:
    image_id = _field(obj, "image_id", line, str)
    cand_a = _caption_ref(_field(obj, "candidate_a", line, dict), line, "candidate_a")
    cand_b = _caption_ref(_field(obj, "candidate_b", line, dict), line, "candidate_b")
    if cand_a.caption_id == cand_b.caption_id:
        raise DatasetFormatError(line, "candidates must be distinct", field="candidate_b")
    choice = _field(obj, "human_choice", line, str)
    if choice not in ("A", "B"):
        raise DatasetFormatError(line, f"human_choice must be 'A' or 'B', got {choice!r}", field="human_choice")
    pair_type = _field(obj, "pair_type", line, str)
    if pair_type not in PAIR_TYPES:
        raise DatasetFormatError(
            line, f"pair_type must be one of {PAIR_TYPES}, got {pair_type!r}",
            field="pair_type",
        )
    return PairRecord(
        image_id=image_id,
        candidate_a=cand_a,
        candidate_b=cand_b,
        human_choice=choice,
        pair_type=pair_type,
        references=_references(obj, line, required=False),
    )


def load_dataset(path, kind: str):
    """Load and validate a JSONL dataset. ``kind`` is 'scored' or 'pairs'."""
    if kind not in ("scored", "pairs"):
        raise ValueError(f"kind must be 'scored' or 'pairs', got {kind!r}")
    records = []
    seen_keys: set[tuple[str, str]] = set()
    with open(path, "r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetFormatError(line_no, f"invalid JSON: {exc.msg}") from exc
            if not isinstance(obj, dict):
                raise DatasetFormatError(line_no, "record must be a JSON object")
            if kind == "scored":
                record = _scored_record(obj, line_no)
                key = (record.image_id, record.caption_id)
                if key in seen_keys:
                    raise DatasetFormatError(
                        line_no, f"duplicate instance {key}", field="caption_id"
                    )
                seen_keys.add(key)
            else:
                record = _pair_record(obj, line_no)
            records.append(record)
    return records
