#!/usr/bin/env python3
"""Ablation experiment on any labeled corpus: full pipeline vs the model
without the time-aware adjustment vs the model without data enhancement.
Prints one metrics block per configuration."""

import argparse

from vulnlibs.config import EngineConfig, build_config, load_config_file
from vulnlibs.corpus import chronological_split, load_dataset, parse_year_ranges
from vulnlibs.evaluation import evaluate_stream, prewarm_cache
from vulnlibs.pipeline import fit_pipeline


def run(split, config: EngineConfig, adjustment: bool):
    pipeline = fit_pipeline(split.train, config)
    cache = pipeline.new_cache()
    store = pipeline.version_store()
    if config.prewarm:
        prewarm_cache(cache, [split.train, split.validation])
    return evaluate_stream(
        split.test.reports,
        lambda report, k: pipeline.raw_predictions(report, k),
        store, cache, config.adjustment_params(), adjustment=adjustment,
    ).metrics


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--dataset", required=True)
    parser.add_argument("--labels")
    parser.add_argument("--config")
    parser.add_argument("--years", help="explicit split years, e.g. 2014-2016,2017,2018-2019")
    args = parser.parse_args()

    config = build_config(load_config_file(args.config) if args.config else {})
    dataset = load_dataset(args.dataset, labels_path=args.labels)
    years = parse_year_ranges(args.years) if args.years else None
    split = chronological_split(dataset, years=years) if years else chronological_split(dataset)

    runs = [
        ("full pipeline", config, True),
        ("without time-aware adjustment", config, False),
        ("without data enhancement", EngineConfig(**{**config.__dict__, "enhance": False}), True),
    ]
    for name, cfg, adjustment in runs:
        metrics = run(split, cfg, adjustment)
        print(f"== {name} ==")
        print(metrics.to_table())


if __name__ == "__main__":
    main()
