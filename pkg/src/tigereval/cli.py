"""Command-line interface.

Subcommands: ``ground``, ``score``, ``baselines``, ``evaluate``,
``map-groups``, ``export-weights``. Reports are JSON by default (CSV via
``--format csv``); stdout carries only the machine-readable report (or a
small summary when ``--out`` is given), progress and warnings go to
stderr. Exit codes: 0 success, 1 validation error, 2 I/O or file-format
error, 3 nothing could be scored (degenerate data only).

Set ``TIGEREVAL_CACHE_DIR`` to enable the on-disk grounding cache.
"""

import argparse
import csv
import io
import json
import os
import sys

import numpy as np

from . import metaeval, scoring
from .dataio import GroundingCache, load_dataset, load_manifest
from .errors import (
    TensorFormatError,
    TigerEvalError,
    UndefinedCorrelationError,
    ValidationError,
)
from .grounding import GroundingConfig
from .metaeval import EvalInstance, MetricReport, PairInstance
from .tiger import TigerConfig

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2
EXIT_DEGENERATE = 3

METRIC_COLUMNS = ("tiger", "rrs", "wds", "bleu1", "bleu4", "rougel", "cider")
CACHE_ENV = "TIGEREVAL_CACHE_DIR"


class DegenerateDataOnly(TigerEvalError):
    """Raised when a run produced no scorable instances at all."""


def _progress(message: str) -> None:
    print(message, file=sys.stderr)


def _cache_from_env() -> GroundingCache | None:
    directory = os.environ.get(CACHE_ENV, "").strip()
    return GroundingCache(directory) if directory else None


def _parse_ref_counts(text: str) -> list[int]:
    try:
        counts = [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ValidationError(f"--refs expects N[,N...], got {text!r}") from exc
    if not counts:
        raise ValidationError("--refs expects at least one count")
    return counts


def _csv_text(rows: list[dict], columns: list[str]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([row.get(col, "") for col in columns])
    return buffer.getvalue()


def _emit(report: dict, args, csv_rows: tuple[list[dict], list[str]]) -> None:
    if args.format == "csv":
        rows, columns = csv_rows
        text = _csv_text(rows, columns)
    else:
        text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        summary = {"ok": True, "out": args.out}
        print(json.dumps(summary, sort_keys=True))
    else:
        sys.stdout.write(text)


def _tiger_configs(args) -> tuple[GroundingConfig, TigerConfig]:
    return GroundingConfig(lam=args.lam), TigerConfig(tau=args.tau, gain_floor=args.gain_floor)


def _load_tensors(args) -> scoring.ManifestTensors:
    manifest = load_manifest(args.manifest)
    return scoring.ManifestTensors(manifest)


def _dataset_records(args):
    if getattr(args, "pairs", None):
        return load_dataset(args.pairs, kind="pairs"), "pairs"
    if getattr(args, "dataset", None):
        return load_dataset(args.dataset, kind="scored"), "scored"
    raise ValidationError("provide --dataset (scored JSONL) or --pairs (pairs JSONL)")


def cmd_ground(args) -> int:
    gcfg, _ = _tiger_configs(args)
    tensors = _load_tensors(args)
    records, _ = _dataset_records(args)
    pairs = scoring.dedup_caption_pairs(records)
    cache = _cache_from_env()
    rows = scoring.grounding_rows(tensors, pairs, gcfg, threads=args.threads, cache=cache)
    report = {
        "pairs_grounded": len(pairs),
        "images": len({p[0] for p in pairs}),
        "captions": len({p[1] for p in pairs}),
        "lambda": args.lam,
        "cache": cache.stats() if cache else None,
    }
    _progress(f"grounded {len(pairs)} (image, caption) pairs")
    _emit(report, args, ([report], list(report.keys())))
    return EXIT_OK


def cmd_score(args) -> int:
    gcfg, tcfg = _tiger_configs(args)
    tensors = _load_tensors(args)
    records = load_dataset(args.dataset, kind="scored")
    cache = _cache_from_env()
    run = scoring.score_records(
        tensors, records, gcfg, tcfg, threads=args.threads, cache=cache
    )
    _progress(f"scored {len(run.rows)} instances ({len(run.skipped)} skipped)")
    report = {
        "config": {"lambda": args.lam, "tau": args.tau, "gain_floor": args.gain_floor},
        "instances": run.rows,
        "skipped": run.skipped,
    }
    columns = ["image_id", "caption_id", "rrs", "wds", "d_kl", "d_rel", "tiger"]
    _emit(report, args, (run.rows, columns))
    if run.skipped and args.format == "csv":
        _progress(f"note: {len(run.skipped)} skipped instances omitted from CSV")
    if not run.rows and run.skipped:
        raise DegenerateDataOnly(f"all {len(run.skipped)} instances were degenerate")
    return EXIT_OK


def cmd_baselines(args) -> int:
    records = load_dataset(args.dataset, kind="scored")
    if not records:
        raise ValidationError("dataset is empty; cannot build idf statistics")
    rows, flagged = scoring.baseline_rows(records)
    _progress(f"scored {len(rows)} instances with {len(scoring.BASELINE_METRICS)} metrics")
    report = {"instances": rows, "flagged": flagged}
    columns = ["image_id", "caption_id", "bleu1", "bleu4", "rougel", "cider"]
    _emit(report, args, (rows, columns))
    return EXIT_OK


def _load_score_columns(paths) -> dict[str, dict[tuple[str, str], float]]:
    """Metric -> (image_id, caption_id) -> value, from score report files."""
    columns: dict[str, dict[tuple[str, str], float]] = {}
    for path in paths:
        try:
            with open(path, "r", encoding="utf-8") as handle:
                payload = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: not a JSON score report: {exc}") from exc
        instances = payload.get("instances")
        if not isinstance(instances, list):
            raise ValidationError(f"{path}: missing 'instances' list")
        for row in instances:
            key = (row.get("image_id"), row.get("caption_id"))
            if None in key:
                raise ValidationError(f"{path}: instance row without ids: {row}")
            for metric in METRIC_COLUMNS:
                if metric in row:
                    try:
                        value = float(row[metric])
                    except (TypeError, ValueError) as exc:
                        raise ValidationError(
                            f"{path}: instance {key}: '{metric}' is not a number: "
                            f"{row[metric]!r}"
                        ) from exc
                    columns.setdefault(metric, {})[key] = value
    if not columns:
        raise ValidationError("score reports contain no recognized metric columns")
    return columns


def _correlation_reports(args) -> dict:
    records = load_dataset(args.dataset, kind="scored")
    human = {(r.image_id, r.caption_id): r.human_score for r in records}
    columns = _load_score_columns(args.scores)
    reports = []
    for metric in sorted(columns):
        scored = columns[metric]
        extra = sorted(set(scored) - set(human))
        if extra:
            raise ValidationError(
                f"metric '{metric}' has scores for instances absent from the "
                f"dataset: {extra[:5]}"
            )
        instances = [
            EvalInstance(
                image_id=key[0],
                candidate_id=key[1],
                metric_score=scored[key],
                human_score=human[key],
            )
            for key in human
            if key in scored
        ]
        degenerate = len(human) - len(instances)
        metric_vec = [inst.metric_score for inst in instances]
        human_vec = [inst.human_score for inst in instances]
        entry = {
            "metric": metric,
            "instances": len(instances),
            "degenerate": degenerate,
            "undefined": False,
            "kendall_tau": None,
            "spearman_rho": None,
        }
        try:
            report = MetricReport(
                metric=metric,
                kendall_tau=metaeval.kendall_tau_b(metric_vec, human_vec),
                spearman_rho=metaeval.spearman_rho(metric_vec, human_vec),
                instances=len(instances),
                degenerate=degenerate,
            )
            entry["kendall_tau"] = report.kendall_tau
            entry["spearman_rho"] = report.spearman_rho
        except UndefinedCorrelationError as exc:
            entry["undefined"] = True
            entry["reason"] = str(exc)
        reports.append(entry)
    return {"reports": reports}


def _pair_instances(records) -> list[PairInstance]:
    return [
        PairInstance(
            image_id=r.image_id,
            candidate_a=r.candidate_a.caption_id,
            candidate_b=r.candidate_b.caption_id,
            human_choice=r.human_choice,
            pair_type=r.pair_type,
        )
        for r in records
    ]


def _pairwise_report_dict(report: metaeval.PairwiseReport) -> dict:
    def acc(a: metaeval.PairwiseAccuracy) -> dict:
        return {
            "correct": a.correct,
            "total": a.total,
            "accuracy": a.accuracy if a.total else None,
        }

    out = {t: acc(report.per_type[t]) for t in metaeval.PAIR_TYPES}
    out["All"] = acc(report.overall)
    return out


def _make_scorer_factory(args, records):
    metric = args.metric
    if metric in ("tiger", "rrs", "wds"):
        if not args.manifest:
            raise ValidationError(f"--metric {metric} requires --manifest")
        gcfg, tcfg = _tiger_configs(args)
        tensors = _load_tensors(args)
        return scoring.make_tiger_pair_scorer_factory(
            tensors, gcfg, tcfg, cache=_cache_from_env(), component=metric
        )
    texts: dict[str, str] = {}
    for r in records:
        texts[r.candidate_a.caption_id] = r.candidate_a.text
        texts[r.candidate_b.caption_id] = r.candidate_b.text
        for ref in r.references:
            texts[ref.caption_id] = ref.text
    return scoring.make_baseline_pair_scorer_factory(metric, texts)


def _pairwise_evaluation(args) -> tuple[dict, bool]:
    records = load_dataset(args.pairs, kind="pairs")
    if not records:
        raise ValidationError("pairs dataset is empty")
    pairs = _pair_instances(records)
    report: dict = {}
    if args.scores:
        columns = _load_score_columns(args.scores)
        metric = args.metric or ("tiger" if "tiger" in columns else sorted(columns)[0])
        if metric not in columns:
            raise ValidationError(
                f"metric '{metric}' not found in score reports; available: "
                f"{sorted(columns)}"
            )
        by_caption: dict[str, float] = {}
        for (_, caption_id), value in columns[metric].items():
            if caption_id in by_caption and by_caption[caption_id] != value:
                raise ValidationError(
                    f"caption id '{caption_id}' is scored differently under "
                    f"multiple images; pairwise lookup would be ambiguous"
                )
            by_caption[caption_id] = value
        result = metaeval.pairwise_accuracy(pairs, by_caption)
        report["pairwise"] = {
            "metric": metric,
            "table": _pairwise_report_dict(result),
        }
        return report, result.overall.total == 0
    if not args.metric:
        raise ValidationError("pairwise evaluation needs --scores or --metric")
    refs_by_image = {}
    for r in records:
        if not r.references:
            raise ValidationError(
                f"pair record on image {r.image_id} has no references; "
                f"--metric rescoring needs them"
            )
        refs_by_image.setdefault(r.image_id, [ref.caption_id for ref in r.references])
    factory = _make_scorer_factory(args, records)
    scored_pairs, scores, excluded = scoring.score_pairs_full(pairs, refs_by_image, factory)
    all_degenerate = not scored_pairs
    if scored_pairs:
        result = metaeval.pairwise_accuracy(scored_pairs, scores)
        report["pairwise"] = {
            "metric": args.metric,
            "table": _pairwise_report_dict(result),
        }
    report["excluded"] = excluded
    if args.refs:
        sweep = metaeval.reference_sweep(
            pairs, refs_by_image, factory, args.refs, seed=args.seed
        )
        report["sweep"] = {
            "metric": args.metric,
            "seed": args.seed,
            "clamped_samples": sweep.clamped_samples,
            "counts": {
                str(count): {
                    "degenerate_pairs": sweep.degenerate_by_count[count],
                    "table": _pairwise_report_dict(result),
                }
                for count, result in sweep.accuracy_by_count.items()
            },
        }
    return report, all_degenerate


def cmd_evaluate(args) -> int:
    if args.pairs:
        report, all_degenerate = _pairwise_evaluation(args)
        rows = []
        if "sweep" in report:
            for count, entry in report["sweep"]["counts"].items():
                for pair_type, acc in entry["table"].items():
                    rows.append({"ref_count": count, "pair_type": pair_type, **acc})
            columns = ["ref_count", "pair_type", "correct", "total", "accuracy"]
        elif "pairwise" in report:
            rows = [
                {"pair_type": t, **acc} for t, acc in report["pairwise"]["table"].items()
            ]
            columns = ["pair_type", "correct", "total", "accuracy"]
        else:
            columns = ["pair_type", "correct", "total", "accuracy"]
        _emit(report, args, (rows, columns))
        if all_degenerate:
            raise DegenerateDataOnly("every pair was degenerate under the metric")
        return EXIT_OK
    if not args.dataset or not args.scores:
        raise ValidationError(
            "correlation evaluation needs --dataset and --scores; pairwise needs --pairs"
        )
    report = _correlation_reports(args)
    columns = ["metric", "kendall_tau", "spearman_rho", "instances", "degenerate", "undefined"]
    _emit(report, args, (report["reports"], columns))
    return EXIT_OK


def cmd_map_groups(args) -> int:
    records = load_dataset(args.dataset, kind="scored")
    human = {(r.image_id, r.caption_id): r.human_score for r in records}
    columns = _load_score_columns(args.scores)
    metric = args.metric or ("tiger" if "tiger" in columns else sorted(columns)[0])
    if metric not in columns:
        raise ValidationError(
            f"metric '{metric}' not found in score reports; available: {sorted(columns)}"
        )
    scored = columns[metric]
    keys = [k for k in human if k in scored]
    if not keys:
        raise DegenerateDataOnly("no scored instances overlap the dataset")
    metric_vec = np.array([scored[k] for k in keys])
    human_vec = np.array([human[k] for k in keys])
    n_levels = args.n_levels or len(np.unique(human_vec))
    groups = metaeval.map_score_groups(metric_vec, human_vec, n_levels)
    rows = [
        {
            "image_id": key[0],
            "caption_id": key[1],
            "metric_score": float(scored[key]),
            "human_score": float(human[key]),
            "group": int(group) if float(group).is_integer() else float(group),
        }
        for key, group in zip(keys, groups)
    ]
    values, counts = np.unique(groups, return_counts=True)
    report = {
        "metric": metric,
        "n_levels": int(n_levels),
        "instances": rows,
        "histogram": {str(v): int(c) for v, c in zip(values.tolist(), counts.tolist())},
    }
    _emit(report, args, (rows, ["image_id", "caption_id", "metric_score", "human_score", "group"]))
    return EXIT_OK


def cmd_export_weights(args) -> int:
    gcfg, _ = _tiger_configs(args)
    tensors = _load_tensors(args)
    records, _ = _dataset_records(args)
    pairs = scoring.dedup_caption_pairs(records)
    cache = _cache_from_env()
    rows = scoring.grounding_rows(tensors, pairs, gcfg, threads=args.threads, cache=cache)
    _progress(f"exported weights for {len(pairs)} (image, caption) pairs")
    report = {"lambda": args.lam, "rows": rows}
    columns = ["image_id", "caption_id", "region_index", "grounding_score"]
    _emit(report, args, (rows, columns))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tigereval",
        description="Grounding-based caption scoring and metric meta-evaluation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, manifest=False, dataset=False, pairs=False, scores=False, tiger=False):
        if manifest:
            p.add_argument("--manifest", help="manifest JSON mapping ids to TFV1 tensors")
        if dataset:
            p.add_argument("--dataset", help="scored dataset (JSONL)")
        if pairs:
            p.add_argument("--pairs", help="pairs dataset (JSONL)")
        if scores:
            p.add_argument("--scores", nargs="+", help="score report JSON file(s)")
        if tiger:
            p.add_argument("--lambda", dest="lam", type=float, default=9.0,
                           help="attention inverse temperature (default 9.0)")
            p.add_argument("--tau", type=float, default=1.0,
                           help="WDS sigmoid temperature (default 1.0)")
            p.add_argument("--gain-floor", dest="gain_floor", type=float, default=0.0,
                           help="lower clamp for DCG gains (default 0.0)")
        p.add_argument("--out", help="write the report here instead of stdout")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--threads", type=int, default=1,
                       help="instance-level worker threads (default 1)")

    p = sub.add_parser("ground", help="compute/warm grounding vectors for a dataset")
    add_common(p, manifest=True, dataset=True, pairs=True, tiger=True)
    p.set_defaults(func=cmd_ground)

    p = sub.add_parser("score", help="TIGEr breakdown per dataset instance")
    add_common(p, manifest=True, dataset=True, tiger=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("baselines", help="BLEU-1/4, ROUGE-L and CIDEr per instance")
    add_common(p, dataset=True)
    p.set_defaults(func=cmd_baselines)

    p = sub.add_parser("evaluate", help="correlations, pairwise accuracy, sweeps")
    add_common(p, manifest=True, dataset=True, pairs=True, scores=True, tiger=True)
    p.add_argument("--metric", choices=METRIC_COLUMNS,
                   help="metric column (scores mode) or metric to compute (pairs mode)")
    p.add_argument("--refs", type=_parse_ref_counts,
                   help="reference-count sweep, e.g. 1,3,5")
    p.add_argument("--seed", type=int, default=0, help="sweep sampling seed")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("map-groups", help="map metric scores onto the human scale")
    add_common(p, dataset=True, scores=True)
    p.add_argument("--metric", choices=METRIC_COLUMNS)
    p.add_argument("--n-levels", dest="n_levels", type=int, default=None)
    p.set_defaults(func=cmd_map_groups)

    p = sub.add_parser("export-weights", help="dump per-region grounding scores")
    add_common(p, manifest=True, dataset=True, pairs=True, tiger=True)
    p.set_defaults(func=cmd_export_weights)

    return parser


def _error_exit(exc: Exception, code: int) -> int:
    payload = {"error": {"type": type(exc).__name__, "message": str(exc), "exit_code": code}}
    print(json.dumps(payload, sort_keys=True))
    print(f"error: {exc}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        return _error_exit(ValidationError("--threads must be >= 1"), EXIT_VALIDATION)
    try:
        return args.func(args)
    except DegenerateDataOnly as exc:
        print(f"degenerate data: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (TensorFormatError, OSError) as exc:
        return _error_exit(exc, EXIT_IO)
    except (ValidationError, ValueError) as exc:
        return _error_exit(exc, EXIT_VALIDATION)
    except TigerEvalError as exc:
        return _error_exit(exc, EXIT_VALIDATION)


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
