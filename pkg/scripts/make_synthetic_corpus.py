#!/usr/bin/env python3
"""Write the seeded synthetic benchmark corpus used by the acceptance
suite (300 chronological reports, bursty truths, version eras)."""

import argparse
from pathlib import Path

from vulnlibs.corpus import save_dataset
from vulnlibs.synth import generate_synthetic_dataset


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n-reports", type=int, default=300)
    parser.add_argument("--seed", type=int, default=20200101)
    parser.add_argument("--out-dir", type=Path, default=Path("data/synthetic"))
    args = parser.parse_args()

    args.out_dir.mkdir(parents=True, exist_ok=True)
    dataset = generate_synthetic_dataset(n_reports=args.n_reports, seed=args.seed)
    save_dataset(dataset, args.out_dir / "reports.jsonl")
    (args.out_dir / "universe.txt").write_text(
        "\n".join(dataset.sorted_label_ids()) + "\n", encoding="utf-8"
    )
    print(f"{len(dataset.reports)} reports -> {args.out_dir / 'reports.jsonl'}")
    print(f"{len(dataset.labels)} labels  -> {args.out_dir / 'universe.txt'}")


if __name__ == "__main__":
    main()
