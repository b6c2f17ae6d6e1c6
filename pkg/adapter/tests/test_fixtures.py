import hashlib
import json
from pathlib import Path

import pytest

from tigerextract.fixtures import make_fixtures


def bundle_digest(root: Path) -> str:
    h = hashlib.sha256()
    for path in sorted(root.rglob("*")):
        if path.is_file():
            h.update(str(path.relative_to(root)).encode())
            h.update(path.read_bytes())
    return h.hexdigest()


def test_seed_determinism(tmp_path):
    a = make_fixtures(seed=11, n=5, m=4, d=6, count=6, out_dir=tmp_path / "a")
    b = make_fixtures(seed=11, n=5, m=4, d=6, count=6, out_dir=tmp_path / "b")
    assert a["images"] == b["images"]
    assert bundle_digest(tmp_path / "a") == bundle_digest(tmp_path / "b")
    c = make_fixtures(seed=12, n=5, m=4, d=6, count=6, out_dir=tmp_path / "c")
    assert bundle_digest(tmp_path / "a") != bundle_digest(tmp_path / "c")


def test_identity_tensors_byte_identical(tmp_path):
    make_fixtures(seed=1, n=4, m=3, d=5, count=4, out_dir=tmp_path)
    cand = (tmp_path / "tensors" / "cand_identity.tfv").read_bytes()
    ref = (tmp_path / "tensors" / "ref_identity.tfv").read_bytes()
    assert cand == ref


def test_dimension_limit_enforced(tmp_path):
    with pytest.raises(ValueError, match="16"):
        make_fixtures(seed=1, n=4, m=3, d=32, count=4, out_dir=tmp_path)


def test_minimum_count(tmp_path):
    with pytest.raises(ValueError, match="count"):
        make_fixtures(seed=1, n=4, m=3, d=5, count=1, out_dir=tmp_path)


def test_datasets_reference_manifest_ids(tmp_path):
    make_fixtures(seed=5, n=4, m=3, d=5, count=7, out_dir=tmp_path)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    caption_ids = set(manifest["captions"])
    image_ids = set(manifest["images"])
    for line in (tmp_path / "scored.jsonl").read_text().splitlines():
        record = json.loads(line)
        assert record["image_id"] in image_ids
        assert record["caption_id"] in caption_ids
        for ref in record["references"]:
            assert ref["caption_id"] in caption_ids
    for line in (tmp_path / "pairs.jsonl").read_text().splitlines():
        record = json.loads(line)
        assert record["image_id"] in image_ids
        assert record["candidate_a"]["caption_id"] in caption_ids
        assert record["candidate_b"]["caption_id"] in caption_ids
