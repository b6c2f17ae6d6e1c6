"""Acceptance suite: one test per release criterion, at the stated
tolerances. The conftest terminal hook prints one PASS/FAIL line per
criterion at the end of the run."""

import itertools
import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

import oracles
from tigereval import baselines
from tigereval.dataio import read_tensor, write_tensor
from tigereval.dataio.datasets import CaptionRef, ScoredRecord
from tigereval.errors import (
    BadHeaderError,
    BadMagicError,
    DegenerateInstanceError,
    NonFinitePayloadError,
    TrailingDataError,
    TruncatedFileError,
    UnsupportedVersionError,
)
from tigereval.grounding import (
    GroundingConfig,
    GroundingVector,
    RegionMatrix,
    WordMatrix,
    attention_weights,
    grounding_vector,
    reference_grounding,
)
from tigereval.metaeval import (
    PairInstance,
    kendall_tau_b,
    map_score_groups,
    pairwise_accuracy,
    spearman_rho,
)
from tigereval.scoring import score_records
from tigereval.tiger import TigerConfig, dcg, kl_divergence, rrs, tiger_score, wds

DATA = Path(__file__).parent / "data"

CRITERIA = {
    "test_identity_instance": "identity instance breakdown",
    "test_ndcg_optimality_oracle": "NDCG optimality (brute force, 500 draws)",
    "test_range_fuzz": "range fuzz (10^4 instances)",
    "test_pipeline_oracle": "pipeline vs high-precision oracle (20 fixtures)",
    "test_correlation_oracles": "correlations vs brute-force oracles",
    "test_pairwise_protocol": "pairwise protocol (equal scores incorrect)",
    "test_appendix_mapping": "score-group mapping histograms",
    "test_baseline_fixtures": "baseline metrics vs hand-computed fixtures",
    "test_determinism_and_performance": "determinism and performance (10^4 instances)",
    "test_format_roundtrip_and_errors": "tensor format round-trip and error classes",
}


def test_identity_instance():
    rng = np.random.default_rng(11)
    regions = RegionMatrix("im", rng.standard_normal((8, 16)))
    shared = rng.standard_normal((6, 16))
    cfg = GroundingConfig(lam=9.0)
    cand = grounding_vector(regions, WordMatrix("cand", shared), cfg)
    ref = reference_grounding(regions, [WordMatrix("ref", shared)], cfg)
    np.testing.assert_array_equal(cand.scores, ref.scores)
    b = tiger_score(cand, ref, TigerConfig(tau=1.0))
    assert b.rrs == 1.0
    assert b.d_kl <= 1e-12
    assert b.d_rel == 0.0
    assert abs(b.wds - 0.5) <= 1e-12
    assert abs(b.tiger - 0.75) <= 1e-12


def test_ndcg_optimality_oracle():
    rng = np.random.default_rng(13)
    cfg = TigerConfig()
    for _ in range(500):
        n = int(rng.integers(1, 7))
        gains = rng.uniform(0.0, 1.0, n)
        if gains.max() == 0.0:
            continue
        ideal = dcg(np.sort(gains)[::-1])
        ref = GroundingVector("im", "ref", gains)
        descending = np.linspace(0.9, -0.9, n)
        for perm in itertools.permutations(range(n)):
            permuted = np.asarray(perm)
            assert dcg(gains[permuted]) <= ideal + 1e-12
            cand_scores = np.empty(n)
            cand_scores[permuted] = descending
            value = rrs(GroundingVector("im", "cand", cand_scores), ref, cfg)
            assert 0.0 <= value <= 1.0


def test_range_fuzz():
    rng = np.random.default_rng(17)
    degenerate = 0
    for _ in range(10_000):
        n = int(rng.integers(1, 37))
        m = int(rng.integers(1, 31))
        d = int(rng.integers(1, 9))
        lam = float(rng.uniform(0.1, 20.0))
        tau = float(rng.uniform(0.1, 10.0))
        gcfg = GroundingConfig(lam=lam)
        regions = RegionMatrix("im", rng.standard_normal((n, d)))
        cand_words = WordMatrix("cand", rng.standard_normal((m, d)))
        ref_words = WordMatrix("ref", rng.standard_normal((int(rng.integers(1, 31)), d)))

        alpha = attention_weights(regions, cand_words, gcfg)
        assert np.abs(alpha.sum(axis=1) - 1.0).max() <= 1e-12

        cand = grounding_vector(regions, cand_words, gcfg)
        ref = grounding_vector(regions, ref_words, gcfg)
        for gv in (cand, ref):
            assert (gv.scores >= -1.0).all() and (gv.scores <= 1.0).all()

        assert kl_divergence(ref, cand) >= 0.0
        assert kl_divergence(cand, cand) <= 1e-12
        tcfg = TigerConfig(tau=tau)
        w = wds(cand, ref, tcfg)
        assert 0.0 < w < 1.0
        try:
            b = tiger_score(cand, ref, tcfg)
        except DegenerateInstanceError:
            degenerate += 1
            continue
        assert 0.0 <= b.tiger <= 1.0
    # degenerate draws are a defined error path, not scores; they must stay rare
    assert degenerate < 500


def test_pipeline_oracle():
    fixtures = json.loads((DATA / "pipeline_fixtures.json").read_text())
    assert len(fixtures) == 20
    for fx in fixtures:
        gcfg = GroundingConfig(lam=fx["lam"])
        tcfg = TigerConfig(tau=fx["tau"], gain_floor=fx["gain_floor"])
        regions = RegionMatrix("im", np.asarray(fx["regions"]))
        cand_words = WordMatrix("cand", np.asarray(fx["candidate"]))
        refs = [
            WordMatrix(f"ref{k}", np.asarray(mat))
            for k, mat in enumerate(fx["references"])
        ]
        cand = grounding_vector(regions, cand_words, gcfg)
        ref = reference_grounding(regions, refs, gcfg)
        got = tiger_score(cand, ref, tcfg)

        want_cand = [float(x) for x in oracles.mp_grounding(fx["regions"], fx["candidate"], fx["lam"])]
        want_ref = [
            float(x)
            for x in oracles.mp_reference_grounding(fx["regions"], fx["references"], fx["lam"])
        ]
        np.testing.assert_allclose(cand.scores, want_cand, atol=1e-9, rtol=0)
        np.testing.assert_allclose(ref.scores, want_ref, atol=1e-9, rtol=0)
        want = oracles.mp_tiger_pipeline(
            fx["regions"], fx["candidate"], fx["references"],
            fx["lam"], fx["tau"], fx["gain_floor"],
        )
        for field in ("rrs", "wds", "d_kl", "d_rel", "tiger"):
            assert abs(getattr(got, field) - float(want[field])) <= 1e-9, (
                fx["name"], field,
            )


def test_correlation_oracles():
    rng = np.random.default_rng(19)
    checked = 0
    while checked < 100:
        n = int(rng.integers(5, 201))
        x = rng.integers(0, 9, n).astype(float)
        y = (x + rng.integers(-3, 4, n)).astype(float)
        if (x == x[0]).all() or (y == y[0]).all():
            continue
        checked += 1
        assert kendall_tau_b(x, y) == pytest.approx(
            oracles.brute_kendall_tau_b(list(x), list(y)), abs=1e-12
        )
        assert spearman_rho(x, y) == pytest.approx(
            oracles.brute_spearman_rho(list(x), list(y)), abs=1e-12
        )


def test_pairwise_protocol():
    # 40 pairs, ten per type; per type: 6 correct, 2 wrong, 2 tied
    pairs = []
    scores = {}
    for t_index, pair_type in enumerate(("HC", "HI", "HM", "MM")):
        for k in range(10):
            a = f"{pair_type}{k}a"
            b = f"{pair_type}{k}b"
            choice = "A" if k % 2 == 0 else "B"
            pairs.append(PairInstance(f"im{t_index}_{k}", a, b, choice, pair_type))
            preferred, other = (a, b) if choice == "A" else (b, a)
            if k < 6:
                scores[preferred], scores[other] = 1.0, 0.0
            elif k < 8:
                scores[preferred], scores[other] = 0.0, 1.0
            else:
                scores[preferred] = scores[other] = 0.5
    report = pairwise_accuracy(pairs, scores)
    for pair_type in ("HC", "HI", "HM", "MM"):
        assert report.per_type[pair_type].total == 10
        assert report.per_type[pair_type].accuracy == 0.6
    assert report.overall.total == 40
    assert report.overall.correct == 24
    assert report.overall.accuracy == 0.6
    assert report.overall.correct == sum(r.correct for r in report.per_type.values())

    # an equal-score pair is incorrect even when it is the only pair
    tied = [PairInstance("im", "x", "y", "A", "MM")]
    assert pairwise_accuracy(tied, {"x": 0.5, "y": 0.5}).overall.accuracy == 0.0


def test_appendix_mapping():
    rng = np.random.default_rng(23)
    for _ in range(100):
        n = int(rng.integers(2, 200))
        n_levels = int(rng.integers(2, 8))
        human = rng.integers(1, n_levels + 1, n).astype(float)
        metric = rng.random(n)
        groups = map_score_groups(metric, human, n_levels)
        got_hist = dict(zip(*np.unique(groups, return_counts=True)))
        want_hist = dict(zip(*np.unique(human, return_counts=True)))
        assert {float(k): int(v) for k, v in got_hist.items()} == {
            float(k): int(v) for k, v in want_hist.items()
        }
    # perfectly rank-aligned metric reproduces the human labels exactly
    human = np.repeat([1.0, 2.0, 3.0, 4.0], 25)
    metric = np.sort(rng.random(100))
    np.testing.assert_array_equal(map_score_groups(metric, human, 4), human)


def test_baseline_fixtures():
    tok = baselines.tokenize
    idf2 = baselines.build_idf([[tok("a cat sat")], [tok("a dog ran fast")]])
    idf_unique = baselines.build_idf(
        [[tok("purple elephants juggle quietly")], [tok("other words entirely here")]]
    )
    cases = [
        ("bleu1-identity", baselines.bleu(tok("a large brown dog"), [tok("a large brown dog")], 1), 1.0),
        ("bleu4-identity", baselines.bleu(tok("a large brown dog runs"), [tok("a large brown dog runs")], 4), 1.0),
        ("bleu1-half", baselines.bleu(tok("a b"), [tok("a c")], 1), 0.5),
        ("bleu1-disjoint", baselines.bleu(tok("x y"), [tok("a b")], 1), 0.0),
        ("bleu1-clip", baselines.bleu(tok("the the the"), [tok("the cat")], 1), 1.0 / 3.0),
        ("bleu1-brevity", baselines.bleu(tok("the cat"), [tok("the cat sat")], 1), math.exp(-0.5)),
        ("bleu4-mixed", baselines.bleu(tok("the cat sat on the mat"), [tok("the cat sat on a mat")], 4), (5 / 6 * 3 / 5 * 2 / 4 * 1 / 3) ** 0.25),
        ("rouge-identity", baselines.rouge_l(tok("two dogs play in the park"), [tok("two dogs play in the park")]), 1.0),
        ("rouge-two-thirds", baselines.rouge_l(tok("a b c"), [tok("a x c")]), 2.0 / 3.0),
        ("rouge-beta", baselines.rouge_l(tok("a b c d"), [tok("a c")]), 2.44 * 0.5 / (1.0 + 1.44 * 0.5)),
        ("rouge-disjoint", baselines.rouge_l(tok("a b"), [tok("x y")]), 0.0),
        ("cider-identity", baselines.cider(tok("purple elephants juggle quietly"), [tok("purple elephants juggle quietly")], idf_unique), 10.0),
        ("cider-short-identity", baselines.cider(tok("a cat sat"), [tok("a cat sat")], idf2), 7.5),
        ("cider-partial", baselines.cider(tok("a dog sat"), [tok("a cat sat")], idf2), 1.25),
        ("cider-length-penalty", baselines.cider(tok("a cat"), [tok("a cat sat")], idf2), 2 * 10.0 * math.exp(-1.0 / 72.0) / math.sqrt(2.0) / 4.0),
    ]
    assert len(cases) >= 10
    for name, got, want in cases:
        assert abs(got - want) <= 1e-9, (name, got, want)


class _SeededTensors:
    """Deterministic on-demand provider for the performance scenario.

    Regions and reference captions are memoized; candidate captions are
    generated per lookup (each is used once per run), all from seeds
    derived from the ids, so repeated runs see identical data without
    holding 10^4 word matrices in memory.
    """

    N_IMAGES = 500
    D = 300

    def __init__(self):
        self._regions: dict[str, RegionMatrix] = {}
        self._refs: dict[str, WordMatrix] = {}

    @staticmethod
    def _rng(kind: str, index: int):
        return np.random.default_rng([97, kind == "img", kind == "ref", index])

    def get_regions(self, image_id: str) -> RegionMatrix:
        if image_id not in self._regions:
            index = int(image_id[3:])
            vectors = self._rng("img", index).standard_normal((36, self.D))
            self._regions[image_id] = RegionMatrix(image_id, vectors)
        return self._regions[image_id]

    def get_words(self, caption_id: str) -> WordMatrix:
        kind, index = caption_id.split("_")
        index = int(index)
        if kind == "ref":
            if caption_id not in self._refs:
                rng = self._rng("ref", index)
                m = int(rng.integers(5, 31))
                self._refs[caption_id] = WordMatrix(caption_id, rng.standard_normal((m, self.D)))
            return self._refs[caption_id]
        rng = self._rng("cand", index)
        m = int(rng.integers(5, 31))
        return WordMatrix(caption_id, rng.standard_normal((m, self.D)))


def _performance_records(count=10_000):
    records = []
    for i in range(count):
        image = i % _SeededTensors.N_IMAGES
        refs = (
            CaptionRef(f"ref_{2 * image}", ""),
            CaptionRef(f"ref_{2 * image + 1}", ""),
        )
        records.append(
            ScoredRecord(
                image_id=f"img{image}",
                caption_id=f"cand_{i}",
                caption="",
                references=refs,
                human_score=3.0,
                scale=(1.0, 5.0),
            )
        )
    return records


def test_determinism_and_performance():
    records = _performance_records()
    gcfg = GroundingConfig(lam=9.0)
    tcfg = TigerConfig(tau=1.0)

    start = time.perf_counter()
    run_a = score_records(_SeededTensors(), records, gcfg, tcfg, threads=1)
    elapsed = time.perf_counter() - start

    run_b = score_records(_SeededTensors(), records, gcfg, tcfg, threads=1)
    run_c = score_records(_SeededTensors(), records, gcfg, tcfg, threads=8)

    assert len(run_a.rows) == 10_000 and not run_a.skipped
    blob_a = json.dumps(run_a.rows, sort_keys=True).encode()
    blob_b = json.dumps(run_b.rows, sort_keys=True).encode()
    blob_c = json.dumps(run_c.rows, sort_keys=True).encode()
    assert blob_a == blob_b, "repeated runs must be byte-identical"
    assert blob_a == blob_c, "1-thread and 8-thread runs must be byte-identical"
    assert elapsed < 10.0, f"single-threaded scoring took {elapsed:.2f}s (budget 10s)"


def test_format_roundtrip_and_errors(tmp_path):
    rng = np.random.default_rng(29)
    for i in range(1000):
        rank = int(rng.integers(1, 4))
        shape = tuple(int(s) for s in rng.integers(1, 7, rank))
        mat = rng.standard_normal(shape).astype(np.float32)
        path = tmp_path / f"t{i % 8}.tfv"
        write_tensor(path, mat)
        got = read_tensor(path)
        assert got.shape == mat.shape
        np.testing.assert_array_equal(got, mat)

    import struct

    good = (
        b"TFV1" + struct.pack("<HB", 1, 2) + struct.pack("<II", 2, 2)
        + struct.pack("<4f", 1, 2, 3, 4)
    )
    bad_files = [
        (b"XXXX" + good[4:], BadMagicError),
        (good[:4] + struct.pack("<H", 7) + good[6:], UnsupportedVersionError),
        (b"TFV1" + struct.pack("<HB", 1, 0), BadHeaderError),
        (b"TFV1" + struct.pack("<HB", 1, 2) + struct.pack("<II", 2, 0), BadHeaderError),
        (good[:10], TruncatedFileError),
        (good[:-4], TruncatedFileError),
        (good + b"\x00", TrailingDataError),
        (
            good[:15] + struct.pack("<4f", 1, float("nan"), 3, 4),
            NonFinitePayloadError,
        ),
    ]
    for k, (blob, error_class) in enumerate(bad_files):
        path = tmp_path / f"bad{k}.tfv"
        path.write_bytes(blob)
        with pytest.raises(error_class):
            read_tensor(path)
