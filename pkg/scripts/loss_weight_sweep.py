#!/usr/bin/env python3
"""Sensitivity sweep over the logistic-loss weight: the trade-off between
the L2 term and the pairwise loss is corpus-dependent, so report it rather
than assume a value."""

import argparse

from vulnlibs.config import EngineConfig
from vulnlibs.corpus import chronological_split, load_dataset
from vulnlibs.evaluation import evaluate_stream, prewarm_cache
from vulnlibs.pipeline import fit_pipeline


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--dataset", required=True)
    parser.add_argument("--labels")
    parser.add_argument("--weights", default="0.25,0.5,1.0,2.0,4.0,8.0")
    parser.add_argument("--seed", type=int, default=11)
    args = parser.parse_args()

    dataset = load_dataset(args.dataset, labels_path=args.labels)
    split = chronological_split(dataset)
    print(f"{'loss_weight':>12} {'avg_f1':>8} {'p@1':>8}")
    for weight in (float(w) for w in args.weights.split(",")):
        config = EngineConfig(loss_weight=weight, seed=args.seed)
        pipeline = fit_pipeline(split.train, config)
        cache = pipeline.new_cache()
        store = pipeline.version_store()
        prewarm_cache(cache, [split.train, split.validation])
        metrics = evaluate_stream(
            split.test.reports,
            lambda report, k: pipeline.raw_predictions(report, k),
            store, cache, config.adjustment_params(),
        ).metrics
        print(f"{weight:>12.2f} {metrics.avg_f1:>8.4f} {metrics.per_k[1][0]:>8.4f}")


if __name__ == "__main__":
    main()
