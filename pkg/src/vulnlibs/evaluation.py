"""Ranking metrics and the chronological streaming evaluation in which each
report's confirmed ground truth feeds the recency cache before the next
prediction."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .corpus import Dataset, VulnerabilityReport
from .temporal import (
    AdjustmentParams,
    LruCache,
    ScoredLabel,
    VersionStore,
    adjust,
    insert_ground_truth,
)

log = logging.getLogger(__name__)

DEFAULT_KS = (1, 2, 3)


def precision_recall_at_k(
    predicted: Sequence[str], truth: set[str], k: int
) -> tuple[float, float]:
    """P@k = hits/k, R@k = hits/|truth| over the first k predictions."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not truth:
        raise ValueError("truth set is empty; report must be excluded upstream")
    hits = len(set(predicted[:k]) & truth)
    return hits / k, hits / len(truth)


@dataclass
class MetricsReport:
    n: int
    per_k: dict[int, tuple[float, float, float]]  # k -> (precision, recall, f1)

    @property
    def avg_f1(self) -> float:
        if not self.per_k:
            return 0.0
        return sum(f1 for _, _, f1 in self.per_k.values()) / len(self.per_k)

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "k": {
                str(k): {"precision": p, "recall": r, "f1": f1}
                for k, (p, r, f1) in sorted(self.per_k.items())
            },
            "avg_f1": self.avg_f1,
        }

    def to_table(self) -> str:
        lines = [f"{'k':>3} {'P@k':>8} {'R@k':>8} {'F1@k':>8}"]
        for k, (p, r, f1) in sorted(self.per_k.items()):
            lines.append(f"{k:>3} {p:>8.4f} {r:>8.4f} {f1:>8.4f}")
        lines.append(f"avg F1 over k: {self.avg_f1:.4f}   (n={self.n})")
        return "\n".join(lines) + "\n"


def aggregate(per_report: dict[int, list[tuple[float, float]]]) -> MetricsReport:
    """Macro-average precision and recall per k over reports, then take the
    harmonic mean of the aggregates for F1."""
    per_k: dict[int, tuple[float, float, float]] = {}
    n = 0
    for k, values in per_report.items():
        if not values:
            continue
        n = len(values)
        p = sum(v[0] for v in values) / len(values)
        r = sum(v[1] for v in values) / len(values)
        f1 = 0.0 if p + r == 0.0 else 2.0 * p * r / (p + r)
        per_k[k] = (p, r, f1)
    return MetricsReport(n=n, per_k=per_k)


@dataclass
class StreamResult:
    metrics: MetricsReport
    predictions: list[tuple[str, list[ScoredLabel]]] = field(default_factory=list)


def evaluate_stream(
    reports: list[VulnerabilityReport],
    score_fn: Callable[[VulnerabilityReport, int], list[ScoredLabel]],
    store: VersionStore,
    cache: LruCache,
    adjustment_params: AdjustmentParams,
    ks: Sequence[int] = DEFAULT_KS,
    adjustment: bool = True,
) -> StreamResult:
    """Walk the reports in (published, id) order: predict, optionally apply
    the time-aware adjustment, record metrics, then feed the report's true
    labels into the cache. Unlabeled reports are skipped with a warning."""
    k_max = max(ks)
    per_report: dict[int, list[tuple[float, float]]] = {k: [] for k in ks}
    predictions = []
    ordered = sorted(reports, key=lambda r: (r.published, r.id))
    for report in ordered:
        if not report.labels:
            log.warning("report %s has no ground truth; excluded from the stream", report.id)
            continue
        window = max(adjustment_params.top_window, k_max)
        raw = score_fn(report, window)
        if adjustment:
            ranked = adjust(raw[: adjustment_params.top_window], store, cache, adjustment_params).ranked
            if len(ranked) < k_max:
                seen = {item.label for item in ranked}
                ranked += [item for item in raw if item.label not in seen]
        else:
            ranked = list(raw)
        top = ranked[:k_max]
        predicted_ids = [item.label for item in top]
        for k in ks:
            per_report[k].append(precision_recall_at_k(predicted_ids, report.labels, k))
        predictions.append((report.id, top))
        insert_ground_truth(cache, report.labels)
    return StreamResult(metrics=aggregate(per_report), predictions=predictions)


def prewarm_cache(cache: LruCache, datasets: list[Dataset]) -> None:
    """Feed historical ground truth (train, then validation) into the cache
    in chronological order, as if a researcher had confirmed each report."""
    reports = [r for ds in datasets for r in ds.reports]
    for report in sorted(reports, key=lambda r: (r.published, r.id)):
        if report.labels:
            insert_ground_truth(cache, report.labels)


@dataclass
class TimingRow:
    fraction: float
    n_train: int
    n_test: int
    train_ms: float
    inference_ms: float

    @property
    def train_ms_per_report(self) -> float:
        return self.train_ms / self.n_train if self.n_train else 0.0

    @property
    def inference_ms_per_report(self) -> float:
        return self.inference_ms / self.n_test if self.n_test else 0.0


@dataclass
class TimingProfile:
    rows: list[TimingRow]
    repeats: int

    def r_squared(self) -> tuple[float, float]:
        """R^2 of least-squares linear fits of total time vs fraction, for
        the training and inference series."""

        def fit(ys: list[float]) -> float:
            xs = np.array([row.fraction for row in self.rows])
            arr = np.array(ys)
            if len(xs) < 2 or np.allclose(arr, arr[0]):
                return 1.0
            coeffs = np.polyfit(xs, arr, 1)
            residuals = arr - np.polyval(coeffs, xs)
            total = np.sum((arr - arr.mean()) ** 2)
            return float(1.0 - np.sum(residuals**2) / total) if total > 0 else 1.0

        return fit([r.train_ms for r in self.rows]), fit([r.inference_ms for r in self.rows])

    def to_csv(self) -> str:
        lines = ["fraction,n_train,n_test,train_ms,inference_ms,train_ms_per_report,inference_ms_per_report"]
        for row in self.rows:
            lines.append(
                f"{row.fraction},{row.n_train},{row.n_test},{row.train_ms:.3f},"
                f"{row.inference_ms:.3f},{row.train_ms_per_report:.4f},{row.inference_ms_per_report:.4f}"
            )
        r2_train, r2_infer = self.r_squared()
        lines.append(f"# repeats={self.repeats} r2_train={r2_train:.4f} r2_inference={r2_infer:.4f}")
        return "\n".join(lines) + "\n"


def timing_profile(
    fractions: Sequence[float],
    train_fn: Callable[[int], object],
    inference_fn: Callable[[object, int], None],
    n_train_total: int,
    n_test_total: int,
    repeats: int = 3,
) -> TimingProfile:
    """Wall-clock totals for training and inference at each dataset
    fraction, averaged over `repeats` runs."""
    rows = []
    for fraction in fractions:
        if fraction <= 0.0 or fraction > 1.0:
            raise ValueError("fractions must lie in (0, 1]")
        n_train = max(1, int(round(fraction * n_train_total)))
        n_test = max(1, int(round(fraction * n_test_total)))
        train_times, infer_times = [], []
        for _ in range(repeats):
            start = time.perf_counter()
            fitted = train_fn(n_train)
            train_times.append((time.perf_counter() - start) * 1000.0)
            start = time.perf_counter()
            inference_fn(fitted, n_test)
            infer_times.append((time.perf_counter() - start) * 1000.0)
        rows.append(
            TimingRow(
                fraction=fraction,
                n_train=n_train,
                n_test=n_test,
                train_ms=sum(train_times) / repeats,
                inference_ms=sum(infer_times) / repeats,
            )
        )
    return TimingProfile(rows=rows, repeats=repeats)
