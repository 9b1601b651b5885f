"""Command-line entry point.

Exit codes: 0 success, 2 usage (argparse), 3 missing input file,
4 config or dataset validation failure, 5 dataset parse failure,
1 anything unexpected.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .baselines import IrBaseline, baseline_cpe, baseline_exact_match
from .config import ConfigError, EngineConfig, build_config, load_config_file
from .corpus import (
    DatasetParseError,
    DatasetValidationError,
    chronological_split,
    load_dataset,
    parse_year_ranges,
    save_dataset,
    unseen_census,
)
from .enhance import Enhancer
from .evaluation import aggregate, evaluate_stream, precision_recall_at_k, prewarm_cache, timing_profile
from .pipeline import extend_universe, fit_pipeline, load_pipeline, save_pipeline
from .service import TriageSession
from .synth import generate_synthetic_dataset
from .temporal import LruCache

log = logging.getLogger(__name__)

EXIT_MISSING_FILE = 3
EXIT_VALIDATION = 4
EXIT_PARSE = 5


def _engine_config(args: argparse.Namespace) -> EngineConfig:
    file_overrides = load_config_file(args.config) if getattr(args, "config", None) else {}
    flag_overrides: dict = {}
    if getattr(args, "seed", None) is not None:
        flag_overrides["seed"] = args.seed
    if getattr(args, "k", None) is not None:
        flag_overrides["top_k"] = args.k
    if getattr(args, "no_enhance", False):
        flag_overrides["enhance"] = False
    if getattr(args, "no_adjust", False):
        flag_overrides["adjust"] = False
    if getattr(args, "no_prewarm", False):
        flag_overrides["prewarm"] = False
    return build_config(file_overrides, flag_overrides)


def _load(args: argparse.Namespace, mode: str = "labeled"):
    return load_dataset(args.dataset, mode=mode, labels_path=getattr(args, "labels", None))


def _split_for(args: argparse.Namespace, dataset):
    if getattr(args, "years", None):
        return chronological_split(dataset, years=parse_year_ranges(args.years))
    ratio = tuple(int(x) for x in getattr(args, "ratio", "3:1:2").split(":"))
    if len(ratio) != 3:
        raise DatasetValidationError(f"ratio must have three parts, got {args.ratio!r}")
    return chronological_split(dataset, ratio=ratio)


def _write_metrics(metrics, args: argparse.Namespace) -> None:
    table = metrics.to_table()
    print(table, end="")
    if getattr(args, "table_out", None):
        Path(args.table_out).write_text(table, encoding="utf-8")
    if getattr(args, "metrics_out", None):
        Path(args.metrics_out).write_text(
            json.dumps(metrics.to_json_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )


# -- commands ---------------------------------------------------------------


def cmd_ingest(args) -> int:
    dataset = _load(args, mode=args.mode)
    first, last = dataset.date_range() or (None, None)
    print(f"reports: {len(dataset.reports)}")
    print(f"labels:  {len(dataset.labels)}")
    print(f"dates:   {first} .. {last}")
    return 0


def cmd_split(args) -> int:
    dataset = _load(args)
    split = _split_for(args, dataset)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, part in split.parts():
        save_dataset(part, out_dir / f"{name}.jsonl")
        print(f"{name}: {len(part.reports)} reports")
    (out_dir / "universe.txt").write_text(
        "\n".join(dataset.sorted_label_ids()) + "\n", encoding="utf-8"
    )
    return 0


def cmd_census(args) -> int:
    dataset = _load(args)
    split = _split_for(args, dataset)
    census = unseen_census(split, granularity="per-year" if args.by_year else "per-split")
    table = census.to_table()
    print(table, end="")
    if args.out:
        Path(args.out).write_text(table, encoding="utf-8")
    if args.json:
        Path(args.json).write_text(
            json.dumps(census.to_json_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
    return 0


def cmd_enhance(args) -> int:
    config = _engine_config(args)
    dataset = _load(args)
    universe_names = [dataset.labels[lid].name for lid in dataset.sorted_label_ids()]
    enhancer = Enhancer.fit(
        dataset.reports, universe_names, config.enhance_config(),
        use_references=config.enhance, split_labels=config.enhance,
    )
    with Path(args.out).open("w", encoding="utf-8") as handle:
        for report in dataset.reports:
            handle.write(json.dumps({"id": report.id, "text": enhancer.enhance_report(report)}) + "\n")
    if args.labels_out:
        with Path(args.labels_out).open("w", encoding="utf-8") as handle:
            for lid in dataset.sorted_label_ids():
                handle.write(
                    json.dumps({"id": lid, "feature_text": enhancer.label_feature_text(dataset.labels[lid])})
                    + "\n"
                )
    print(f"enhanced {len(dataset.reports)} reports")
    return 0


def cmd_train(args) -> int:
    config = _engine_config(args)
    dataset = _load(args)
    pipeline = fit_pipeline(dataset, config)
    save_pipeline(pipeline, args.model_out)
    print(f"model written to {args.model_out} (seed={pipeline.seed}, "
          f"weights nnz={pipeline.weights.nnz}, labels={len(pipeline.label_ids)})")
    return 0


def cmd_predict(args) -> int:
    pipeline = load_pipeline(args.model)
    if args.k is not None:
        pipeline.config.top_k = args.k
    dataset = load_dataset(args.dataset, mode="unlabeled", labels_path=args.labels)
    extend_universe(pipeline, sorted(dataset.labels))
    cache = (
        LruCache.from_dict(json.loads(Path(args.cache_state).read_text(encoding="utf-8")))
        if args.cache_state
        else pipeline.new_cache()
    )
    store = pipeline.version_store()
    adjust_on = not args.no_adjust
    rows = []
    for report in dataset.reports:
        if adjust_on:
            ranked, _ = pipeline.adjusted_predictions(report, store, cache, pipeline.config.top_k)
        else:
            ranked = pipeline.raw_predictions(report, pipeline.config.top_k)
        rows.append(
            {
                "id": report.id,
                "predictions": [{"label": s.label, "score": s.score} for s in ranked],
            }
        )
    out = "\n".join(json.dumps(row, sort_keys=True) for row in rows) + "\n"
    if args.out:
        Path(args.out).write_text(out, encoding="utf-8")
    else:
        print(out, end="")
    return 0


def cmd_evaluate(args) -> int:
    config = _engine_config(args)
    dataset = _load(args)
    split = _split_for(args, dataset)
    pipeline = fit_pipeline(split.train, config)
    extend_universe(pipeline, sorted(dataset.labels))
    cache = pipeline.new_cache()
    store = pipeline.version_store()
    if config.prewarm:
        prewarm_cache(cache, [split.train, split.validation])
    result = evaluate_stream(
        split.test.reports,
        lambda report, k: pipeline.raw_predictions(report, k),
        store,
        cache,
        config.adjustment_params(),
        adjustment=config.adjust,
    )
    _write_metrics(result.metrics, args)
    if args.predictions_out:
        with Path(args.predictions_out).open("w", encoding="utf-8") as handle:
            for report_id, ranked in result.predictions:
                handle.write(
                    json.dumps(
                        {
                            "id": report_id,
                            "predictions": [{"label": s.label, "score": s.score} for s in ranked],
                        },
                        sort_keys=True,
                    )
                    + "\n"
                )
    return 0


def cmd_baseline(args) -> int:
    config = _engine_config(args)
    dataset = _load(args)
    split = _split_for(args, dataset)
    labels = dataset.labels
    enhancer = Enhancer.fit(
        split.train.reports,
        [labels[lid].name for lid in sorted(labels)],
        config.enhance_config(),
        use_references=not args.description_only,
        split_labels=True,
    )

    ks = (1,) if args.which == "cpe" else (1, 2, 3)
    ranker = None
    if args.which == "ir":
        label_texts = {lid: enhancer.label_feature_text(labels[lid]) for lid in sorted(labels)}
        train_texts = [enhancer.enhance_report(r) for r in split.train.reports]
        ranker = IrBaseline.fit(train_texts, label_texts, ngram_max=config.ir_ngram_max)

    per_report = {k: [] for k in ks}
    for report in split.test.reports:
        if not report.labels:
            continue
        if args.which == "exact":
            ranked = baseline_exact_match(enhancer.enhance_report(report), labels, k=max(ks))
        elif args.which == "cpe":
            ranked = baseline_cpe(report, k=max(ks))
        else:
            ranked = ranker.rank(enhancer.enhance_report(report), k=max(ks))
        predicted = [label for label, _ in ranked]
        for k in ks:
            per_report[k].append(precision_recall_at_k(predicted, report.labels, k))
    _write_metrics(aggregate(per_report), args)
    return 0


def cmd_timing(args) -> int:
    config = _engine_config(args)
    dataset = _load(args)
    split = _split_for(args, dataset)
    fractions = [float(f) for f in args.fractions.split(",")]
    train_reports = split.train.reports
    test_reports = split.test.reports

    def train_fn(n_train: int):
        subset = type(split.train)(reports=train_reports[:n_train], labels=split.train.labels)
        return fit_pipeline(subset, config)

    def inference_fn(pipeline, n_test: int):
        cache = pipeline.new_cache()
        store = pipeline.version_store()
        for report in test_reports[:n_test]:
            pipeline.adjusted_predictions(report, store, cache, config.top_k)

    profile = timing_profile(
        fractions, train_fn, inference_fn, len(train_reports), len(test_reports),
        repeats=args.repeats,
    )
    csv = profile.to_csv()
    print(csv, end="")
    if args.out:
        Path(args.out).write_text(csv, encoding="utf-8")
    return 0


def cmd_serve(args) -> int:
    pipeline = load_pipeline(args.model)
    if args.k is not None:
        pipeline.config.top_k = args.k
    queue = load_dataset(args.dataset, mode="unlabeled", labels_path=args.labels)
    cache = (
        LruCache.from_dict(json.loads(Path(args.cache_state).read_text(encoding="utf-8")))
        if args.cache_state
        else None
    )
    session = TriageSession(
        pipeline, queue, k=pipeline.config.top_k, session_path=args.session_file, cache=cache
    )
    if args.resume:
        session.restore()
    from .service import serve as run_service

    print(f"serving triage session on http://{args.host}:{args.port}")
    run_service(session, host=args.host, port=args.port)
    return 0


def cmd_synth(args) -> int:
    dataset = generate_synthetic_dataset(n_reports=args.n_reports, seed=args.seed)
    save_dataset(dataset, args.out)
    if args.labels_out:
        Path(args.labels_out).write_text(
            "\n".join(dataset.sorted_label_ids()) + "\n", encoding="utf-8"
        )
    print(f"wrote {len(dataset.reports)} synthetic reports to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vulnlibs",
        description="Predict the libraries affected by vulnerability reports.",
    )
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def common_data(p, labeled_default="labeled"):
        p.add_argument("--dataset", required=True, help="JSON-Lines report file")
        p.add_argument("--labels", help="optional label-universe file, one id per line")

    def common_split(p):
        p.add_argument("--ratio", default="3:1:2", help="train:validation:test report-count ratio")
        p.add_argument("--years", help="explicit year ranges, e.g. 2014-2016,2017,2018-2019")

    def common_config(p):
        p.add_argument("--config", help="key = value engine config file")
        p.add_argument("--seed", type=int, help="training seed (overrides config)")

    p = sub.add_parser("ingest", help="validate a dataset and print a summary")
    common_data(p)
    p.add_argument("--mode", choices=["labeled", "unlabeled"], default="labeled")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("split", help="write chronological train/validation/test files")
    common_data(p)
    common_split(p)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("census", help="seen/unseen label statistics per period")
    common_data(p)
    common_split(p)
    p.add_argument("--by-year", action="store_true")
    p.add_argument("--json", help="write the census as JSON")
    p.add_argument("--out", help="write the census table to a file")
    p.set_defaults(func=cmd_census)

    p = sub.add_parser("enhance", help="materialize enhanced descriptions")
    common_data(p)
    common_config(p)
    p.add_argument("--no-enhance", action="store_true", help="description-only preprocessing")
    p.add_argument("--out", required=True, help="output JSONL of {id, text}")
    p.add_argument("--labels-out", help="output JSONL of {id, feature_text}")
    p.set_defaults(func=cmd_enhance)

    p = sub.add_parser("train", help="fit the model on a training split")
    common_data(p)
    common_config(p)
    p.add_argument("--no-enhance", action="store_true")
    p.add_argument("--model-out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="rank labels for each report")
    p.add_argument("--model", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--labels", help="extra label-universe file (zero-shot additions)")
    p.add_argument("--k", type=int)
    p.add_argument("--no-adjust", action="store_true")
    p.add_argument("--cache-state", help="LRU cache snapshot JSON")
    p.add_argument("--out", help="predictions JSONL (stdout when omitted)")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="chronological streaming evaluation")
    common_data(p)
    common_split(p)
    common_config(p)
    p.add_argument("--no-enhance", action="store_true", help="drop the data-enhancement step")
    p.add_argument("--no-adjust", action="store_true", help="drop the time-aware adjustment")
    p.add_argument("--no-prewarm", action="store_true", help="start the cache empty")
    p.add_argument("--k", type=int, help="top-k for the predictions output")
    p.add_argument("--metrics-out", help="metrics JSON path")
    p.add_argument("--table-out", help="metrics table path")
    p.add_argument("--predictions-out", help="per-report predictions JSONL")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("baseline", help="evaluate a reference baseline")
    common_data(p)
    common_split(p)
    common_config(p)
    p.add_argument("--which", choices=["exact", "cpe", "ir"], required=True)
    p.add_argument("--description-only", action="store_true",
                   help="match against descriptions without reference text")
    p.add_argument("--metrics-out")
    p.add_argument("--table-out")
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("timing", help="training/inference wall-clock profile")
    common_data(p)
    common_split(p)
    common_config(p)
    p.add_argument("--fractions", default="0.25,0.5,0.75,1.0")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--out", help="CSV output path")
    p.set_defaults(func=cmd_timing)

    p = sub.add_parser("serve", help="run the triage HTTP service")
    p.add_argument("--model", required=True)
    p.add_argument("--dataset", required=True, help="queue of reports to triage")
    p.add_argument("--labels")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8764)
    p.add_argument("--k", type=int)
    p.add_argument("--session-file", default="triage-session.json",
                   help="session state written here on every confirmation")
    p.add_argument("--cache-state", help="LRU cache snapshot JSON to start from")
    p.add_argument("--resume", action="store_true", help="restore state from --session-file")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("synth", help="generate the seeded synthetic benchmark corpus")
    p.add_argument("--n-reports", type=int, default=300)
    p.add_argument("--seed", type=int, default=20200101)
    p.add_argument("--out", required=True)
    p.add_argument("--labels-out")
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: missing file: {exc}", file=sys.stderr)
        return EXIT_MISSING_FILE
    except DatasetParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (DatasetValidationError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
