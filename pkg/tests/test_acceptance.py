"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line. Tolerances are pinned here and nowhere else."""

import json
import os
import time
from pathlib import Path

import numpy as np
import pytest
from scipy import sparse

from vulnlibs.cli import main
from vulnlibs.config import EngineConfig
from vulnlibs.corpus import chronological_split, load_dataset, unseen_census
from vulnlibs.evaluation import evaluate_stream, precision_recall_at_k, prewarm_cache
from vulnlibs.features import SparseVector, sparse_dot
from vulnlibs.learner import (
    LearnerParams,
    TrainingPair,
    WeightMatrix,
    coordinate_gradient,
    objective,
    relevance,
    train,
)
from vulnlibs.pipeline import fit_pipeline
from vulnlibs.synth import generate_synthetic_dataset
from vulnlibs.temporal import (
    AdjustmentParams,
    LruCache,
    ScoredLabel,
    VersionStore,
    adjust,
    favor_new_version,
    recency_boost,
)

from conftest import make_dataset, make_report

ABLATION_CFG = dict(
    reference_word_cut_percent=20.0,
    loss_weight=4.0,
    negatives_per_doc=5,
    cache_size=40,
    recency_magnitude=2.0,
    adjust_window=3,
    seed=11,
)

PUBLIC_DATASET = os.environ.get("VULNLIBS_PUBLIC_DATASET", "data/public_dataset.jsonl")


def ok(name: str) -> None:
    print(f"ACCEPTANCE PASS: {name}")


def test_metric_oracle_equivalence():
    """P@k/R@k/F1@k equal a brute-force set oracle exactly on 1,000
    randomized instances, in under five seconds."""
    rng = np.random.default_rng(2024)
    labels = [f"lib{i}" for i in range(8)]
    start = time.perf_counter()
    for _ in range(1000):
        n_pred = int(rng.integers(0, 9))
        predicted = list(rng.choice(labels, size=n_pred, replace=False))
        truth = set(rng.choice(labels, size=int(rng.integers(1, 5)), replace=False))
        k = int(rng.integers(1, 9))
        p, r = precision_recall_at_k(predicted, truth, k)
        hits = len({x for x in predicted[:k]} & truth)
        assert p == hits / k
        assert r == hits / len(truth)
        f1 = 0.0 if p + r == 0 else 2 * p * r / (p + r)
        expected_f1 = 0.0 if hits == 0 else 2 * (hits / k) * (hits / len(truth)) / (
            hits / k + hits / len(truth)
        )
        assert f1 == expected_f1
    elapsed = time.perf_counter() - start
    assert elapsed < 5.0, f"metric oracle run took {elapsed:.2f}s"
    ok("metric oracle equivalence (1000 instances, exact)")


def test_sparse_linear_algebra_oracle():
    """relevance() within 1e-9 of the dense triple product on 500 random
    instances; sparse_dot within 1e-12 of the dense dot."""
    rng = np.random.default_rng(7)
    for _ in range(500):
        d_dim = int(rng.integers(2, 51))
        l_dim = int(rng.integers(2, 51))
        density = float(rng.uniform(0.05, 0.5))
        d_dense = rng.normal(size=d_dim) * (rng.random(d_dim) < density)
        l_dense = rng.normal(size=l_dim) * (rng.random(l_dim) < density)
        w_dense = rng.normal(size=(d_dim, l_dim)) * (rng.random((d_dim, l_dim)) < density)
        w = WeightMatrix(d_dim, l_dim)
        for i in range(d_dim):
            cols = np.nonzero(w_dense[i])[0]
            if cols.size:
                w.set_row(i, cols, w_dense[i, cols])
        d = SparseVector.from_entries(
            [(i, float(x)) for i, x in enumerate(d_dense) if x != 0.0], d_dim
        )
        l = SparseVector.from_entries(
            [(i, float(x)) for i, x in enumerate(l_dense) if x != 0.0], l_dim
        )
        assert abs(relevance(d, l, w) - float(d_dense @ w_dense @ l_dense)) <= 1e-9
        if d_dim == l_dim:
            assert abs(sparse_dot(d, l) - float(d_dense @ l_dense)) <= 1e-12
    # dedicated sparse_dot sweep at equal dims
    for _ in range(200):
        dim = int(rng.integers(2, 51))
        u_dense = rng.normal(size=dim) * (rng.random(dim) < 0.5)
        v_dense = rng.normal(size=dim) * (rng.random(dim) < 0.5)
        u = SparseVector.from_entries([(i, float(x)) for i, x in enumerate(u_dense) if x], dim)
        v = SparseVector.from_entries([(i, float(x)) for i, x in enumerate(v_dense) if x], dim)
        assert abs(sparse_dot(u, v) - float(u_dense @ v_dense)) <= 1e-12
    ok("sparse linear algebra oracle (relevance 1e-9, dot 1e-12)")


def test_solver_properties():
    """Across 50 random training sets: row sparsity holds, the objective
    never rises above its value at zero, and analytic coordinate gradients
    match central finite differences to 1e-4 relative error."""
    rng = np.random.default_rng(99)
    for trial in range(50):
        n_docs = int(rng.integers(2, 31))
        n_labels = int(rng.integers(2, 16))
        d_dim = int(rng.integers(3, 15))
        l_dim = int(rng.integers(3, 15))
        docs = sparse.random(n_docs, d_dim, density=0.4, random_state=rng, format="csr")
        labels = sparse.random(n_labels, l_dim, density=0.4, random_state=rng, format="csr")
        pairs = []
        for d in range(n_docs):
            pos = int(rng.integers(0, n_labels))
            for j in range(n_labels):
                pairs.append(TrainingPair(doc=d, label=j, y=+1 if j == pos else -1))
        budget = int(rng.integers(1, 6))
        params = LearnerParams(row_budget=budget, refine_passes=2,
                               loss_weight=float(rng.uniform(0.5, 4.0)))
        w = train(pairs, docs, labels, params)
        assert w.max_row_nnz() <= budget
        zero = WeightMatrix(d_dim, l_dim)
        assert objective(pairs, docs, labels, w, params.loss_weight) <= objective(
            pairs, docs, labels, zero, params.loss_weight
        ) + 1e-12

        if trial % 10 == 0:  # gradient check on a sample of trials
            eps = 1e-5
            for i, cols, vals in list(w.iter_rows())[:3]:
                for pos_idx, col in enumerate(cols[:2]):
                    analytic = coordinate_gradient(
                        pairs, docs, labels, w, params.loss_weight, i, int(col)
                    )
                    base = vals[pos_idx]
                    bumped = vals.copy()
                    bumped[pos_idx] = base + eps
                    w.set_row(i, cols, bumped)
                    hi = objective(pairs, docs, labels, w, params.loss_weight)
                    bumped[pos_idx] = base - eps
                    w.set_row(i, cols, bumped)
                    lo = objective(pairs, docs, labels, w, params.loss_weight)
                    w.set_row(i, cols, vals)
                    numeric = (hi - lo) / (2 * eps)
                    scale = max(abs(analytic), abs(numeric), 1e-8)
                    assert abs(analytic - numeric) / scale < 1e-4
    ok("solver properties (sparsity, descent, gradient check)")


def test_zero_shot_capability():
    """A label absent from training but sharing sub-word features with
    trained labels ranks in the top 3 for its report."""
    train_reports = [
        make_report("T1", "2019-01-01", "Overflow bug found in the alpha engine daemon",
                    labels={"alpha_engine"}),
        make_report("T2", "2019-01-02", "Corruption issue inside the beta parser module",
                    labels={"beta_parser"}),
        make_report("T3", "2019-01-03", "The alpha engine daemon mishandles tokens",
                    labels={"alpha_engine"}),
        make_report("T4", "2019-01-04", "Crash when the beta parser module reads headers",
                    labels={"beta_parser"}),
        make_report("T5", "2019-01-05", "Traversal weakness in the gamma cache layer",
                    labels={"gamma_cache"}),
        make_report("T6", "2019-01-06", "Injection detected in the delta store backend",
                    labels={"delta_store"}),
    ]
    universe = ["alpha_engine", "beta_parser", "gamma_cache", "delta_store", "alpha_parser"]
    train_ds = make_dataset(train_reports, extra_labels=universe)
    cfg = EngineConfig(loss_weight=4.0, negatives_per_doc=3, seed=1)
    pipeline = fit_pipeline(train_ds, cfg)
    report = make_report("X1", "2019-06-01", "Exhaustion flaw in the alpha parser daemon",
                         labels={"alpha_parser"})
    top3 = [item.label for item in pipeline.raw_predictions(report, 3)]
    assert "alpha_parser" in top3, f"unseen label missing from top-3: {top3}"
    ok("zero-shot capability (unseen label in top-3)")


def test_temporal_semantics():
    """LRU equals a reference oracle over 10,000 random operations; the
    version transfer conserves maxima and zeroes old versions; the boost
    leaves non-resident scores bit-identical; the composite adjustment
    matches a hand-executed trace."""
    rng = np.random.default_rng(31)
    labels = [f"l{i}" for i in range(20)]
    cache = LruCache(7)
    oracle: list[str] = []
    for _ in range(10_000):
        label = labels[int(rng.integers(0, len(labels)))]
        cache.insert(label)
        if label in oracle:
            oracle.remove(label)
        oracle.insert(0, label)
        if len(oracle) > 7:
            oracle.pop()
        assert list(cache.labels) == oracle

    store = VersionStore.build(["lib@1.0", "lib@2.0"])
    resident = LruCache(4)
    resident.insert("lib@2.0")
    for old_score, new_score in [(0.9, 0.2), (0.1, 0.8), (-0.4, 0.0), (0.5, 0.5)]:
        top = [ScoredLabel("lib@1.0", old_score), ScoredLabel("lib@2.0", new_score)]
        updated, _ = favor_new_version(top, store, resident)
        scores = dict(updated)
        assert scores["lib@2.0"] == max(old_score, new_score)
        assert scores["lib@1.0"] == 0.0

    booster = LruCache(4)
    booster.insert("resident")
    top = [ScoredLabel("resident", 0.25), ScoredLabel("outsider", 0.7300000000000001)]
    boosted = dict(recency_boost(top, booster, AdjustmentParams(magnitude=8.0, top_window=2)))
    assert boosted["outsider"] == 0.7300000000000001  # bit-identical pass-through
    assert boosted["resident"] > 0.25

    # composite trace, worked by hand: transfer 0.9 onto the cached 2.0,
    # zero the 1.0, boost base (0.9 + 0.6 + 0) / 3 = 0.5, boosts 8*0.5 and 4*0.5
    store = VersionStore.build(["liba@1.0", "liba@2.0", "libb"])
    cache2 = LruCache(10)
    cache2.insert("libb")
    cache2.insert("liba@2.0")
    result = adjust(
        [ScoredLabel("liba@1.0", 0.9), ScoredLabel("libb", 0.6), ScoredLabel("liba@2.0", 0.3)],
        store, cache2, AdjustmentParams(magnitude=8.0, top_window=3),
    )
    assert result.ranked == [
        ScoredLabel("liba@2.0", 4.9),
        ScoredLabel("libb", 2.6),
        ScoredLabel("liba@1.0", 0.0),
    ]
    ok("temporal semantics (LRU oracle, transfer, boost, composite trace)")


def _ablation_metrics(split, enhance: bool, adjustment: bool):
    cfg = EngineConfig(**{**ABLATION_CFG, "enhance": enhance})
    pipeline = fit_pipeline(split.train, cfg)
    cache = pipeline.new_cache()
    store = pipeline.version_store()
    prewarm_cache(cache, [split.train, split.validation])
    return evaluate_stream(
        split.test.reports,
        lambda report, k: pipeline.raw_predictions(report, k),
        store, cache, cfg.adjustment_params(), adjustment=adjustment,
    ).metrics


def test_directional_ablation():
    """On the shipped seeded 300-report corpus, the full pipeline beats
    both the no-adjustment and the no-enhancement configurations by a
    strictly positive margin, within 60 seconds."""
    start = time.perf_counter()
    dataset = generate_synthetic_dataset(n_reports=300, seed=20200101)
    split = chronological_split(dataset)
    full = _ablation_metrics(split, enhance=True, adjustment=True).avg_f1
    without_adjust = _ablation_metrics(split, enhance=True, adjustment=False).avg_f1
    without_enhance = _ablation_metrics(split, enhance=False, adjustment=True).avg_f1
    elapsed = time.perf_counter() - start
    assert full > without_adjust, f"adjustment margin not positive: {full} vs {without_adjust}"
    assert full > without_enhance, f"enhancement margin not positive: {full} vs {without_enhance}"
    assert elapsed < 60.0, f"ablation run took {elapsed:.1f}s"
    ok(
        "directional ablation "
        f"(full {full:.3f} > no-adjust {without_adjust:.3f}, "
        f"full > no-enhance {without_enhance:.3f}, {elapsed:.1f}s)"
    )


def test_throughput():
    """Training on 3,000 synthetic reports stays under 60 s and per-report
    inference including adjustment stays under 5 ms."""
    dataset = generate_synthetic_dataset(n_reports=3000, seed=20200101)
    cfg = EngineConfig(**ABLATION_CFG)
    start = time.perf_counter()
    pipeline = fit_pipeline(dataset, cfg)
    train_seconds = time.perf_counter() - start
    assert train_seconds < 60.0, f"training took {train_seconds:.1f}s"

    cache = pipeline.new_cache()
    store = pipeline.version_store()
    sample = dataset.reports[-500:]
    start = time.perf_counter()
    for report in sample:
        pipeline.adjusted_predictions(report, store, cache, 3)
    per_report_ms = (time.perf_counter() - start) * 1000.0 / len(sample)
    assert per_report_ms < 5.0, f"inference took {per_report_ms:.2f} ms/report"
    ok(f"throughput (train {train_seconds:.1f}s/3000 reports, infer {per_report_ms:.2f} ms/report)")


def test_determinism_end_to_end(tmp_path):
    """Two train+evaluate runs with one config and seed produce
    byte-identical metrics files."""
    data = tmp_path / "data.jsonl"
    assert main(["synth", "--n-reports", "90", "--out", str(data)]) == 0
    cfg = tmp_path / "cfg.txt"
    cfg.write_text("".join(f"{k} = {v}\n" for k, v in ABLATION_CFG.items()))
    outputs = []
    for name in ("m1.json", "m2.json"):
        path = tmp_path / name
        assert main(["evaluate", "--dataset", str(data), "--config", str(cfg),
                     "--metrics-out", str(path)]) == 0
        outputs.append(path.read_bytes())
    assert outputs[0] == outputs[1]
    ok("determinism (byte-identical metrics across runs)")


@pytest.mark.skipif(
    not Path(PUBLIC_DATASET).exists(),
    reason=f"public dataset not present at {PUBLIC_DATASET} "
    "(set VULNLIBS_PUBLIC_DATASET to enable)",
)
def test_public_dataset_reproduction():
    """Conditional: split counts, the 2017 unseen share, and the
    effectiveness ordering on the published corpus."""
    dataset = load_dataset(PUBLIC_DATASET)
    assert len(dataset.reports) == 7665
    split = chronological_split(dataset, years=[(2014, 2016), (2017, 2017), (2018, 2019)])
    counts = (len(split.train.reports), len(split.validation.reports), len(split.test.reports))
    assert counts == (3111, 1814, 2740), counts

    census = unseen_census(split, granularity="per-year")
    row_2017 = next(row for row in census.rows if row.period == "2017")
    assert row_2017.total_labels == 1094
    assert round(100.0 * row_2017.unseen_labels / row_2017.total_labels, 1) == 70.0

    full = _public_run(split, enhance=True, adjustment=True)
    plain = _public_run(split, enhance=False, adjustment=False)
    assert full >= 0.65, f"avg F1 {full:.3f} below 0.65"
    assert full - plain >= 0.08, f"margin over the plain model {full - plain:.3f} below 0.08"
    ok(f"public dataset reproduction (avg F1 {full:.3f}, plain {plain:.3f})")


def _public_run(split, enhance: bool, adjustment: bool) -> float:
    cfg = EngineConfig(enhance=enhance, seed=11)
    pipeline = fit_pipeline(split.train, cfg)
    cache = pipeline.new_cache()
    store = pipeline.version_store()
    prewarm_cache(cache, [split.train, split.validation])
    return evaluate_stream(
        split.test.reports,
        lambda report, k: pipeline.raw_predictions(report, k),
        store, cache, cfg.adjustment_params(), adjustment=adjustment,
    ).metrics.avg_f1
