"""End-to-end wiring: enhance the corpus, featurize documents and labels,
fit the bilinear model and serve predictions with optional time-aware
adjustment. Every command-line and service entry point goes through this
module so there is a single prediction code path."""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass
from pathlib import Path

from scipy import sparse

from .config import EngineConfig
from .corpus import Dataset, Label, VulnerabilityReport
from .enhance import Enhancer
from .features import (
    SparseVector,
    Vocabulary,
    fit_vocabulary,
    load_vocabulary,
    save_vocabulary,
    stack_vectors,
    tfidf_transform,
    vocabulary_checksum,
)
from .learner import (
    SavedModel,
    WeightMatrix,
    build_training_pairs,
    load_model,
    predict_topk,
    save_model,
    train,
)
from .temporal import AdjustResult, LruCache, ScoredLabel, VersionStore, adjust

log = logging.getLogger(__name__)


@dataclass
class TrainedPipeline:
    config: EngineConfig
    enhancer: Enhancer
    doc_vocab: Vocabulary
    label_vocab: Vocabulary
    weights: WeightMatrix
    label_ids: list[str]                  # lexicographically sorted universe
    label_matrix: sparse.csr_matrix       # label-space features, bias column
    labels: dict[str, Label]
    train_label_ids: list[str]
    seed: int

    def featurize_report(self, report: VulnerabilityReport) -> SparseVector:
        text = self.enhancer.enhance_report(report)
        return tfidf_transform(text, self.doc_vocab, self.doc_vocab.n_docs, add_bias=True)

    def enhanced_text(self, report: VulnerabilityReport) -> str:
        return self.enhancer.enhance_report(report)

    def raw_predictions(self, report: VulnerabilityReport, k: int) -> list[ScoredLabel]:
        vec = self.featurize_report(report)
        ranked = predict_topk(vec, self.label_ids, self.label_matrix, self.weights, k)
        return [ScoredLabel(label, score) for label, score in ranked]

    def adjusted_predictions(
        self,
        report: VulnerabilityReport,
        store: VersionStore,
        cache: LruCache,
        k: int,
    ) -> tuple[list[ScoredLabel], AdjustResult]:
        """Top-k after the time-aware adjustment of the top window. The
        adjusted working set is padded with untouched raw predictions when
        the window is smaller than k."""
        params = self.config.adjustment_params()
        window = max(params.top_window, k)
        raw = self.raw_predictions(report, window)
        result = adjust(raw[: params.top_window], store, cache, params)
        ranked = list(result.ranked)
        if len(ranked) < k:
            seen = {item.label for item in ranked}
            ranked += [item for item in raw if item.label not in seen]
        return ranked[:k], result

    def version_store(self) -> VersionStore:
        return VersionStore.build(self.label_ids)

    def new_cache(self) -> LruCache:
        return LruCache(self.config.cache_size)


def extend_universe(pipeline: TrainedPipeline, extra_label_ids: list[str]) -> None:
    """Add labels unseen at train time (zero-shot targets) to the serving
    universe, featurizing them with the frozen enhancer and vocabularies."""
    new_ids = sorted(set(extra_label_ids) - set(pipeline.label_ids))
    if not new_ids:
        return
    merged = sorted(set(pipeline.label_ids) | set(new_ids))
    labels = dict(pipeline.labels)
    for label_id in new_ids:
        labels[label_id] = Label.from_id(label_id)
    vectors = []
    for label_id in merged:
        text = pipeline.enhancer.label_feature_text(labels[label_id])
        vectors.append(
            tfidf_transform(text, pipeline.label_vocab, pipeline.label_vocab.n_docs, add_bias=True)
        )
    pipeline.label_ids = merged
    pipeline.labels = labels
    pipeline.label_matrix = stack_vectors(vectors)


def fit_pipeline(train_ds: Dataset, config: EngineConfig, seed: int | None = None) -> TrainedPipeline:
    """Fit enhancement state and vocabularies on the training split, then
    train the sparse bilinear model on sampled (document, label) pairs.
    The label universe may include labels that never occur in training."""
    config.validate()
    seed = config.seed if seed is None else seed
    if not train_ds.reports:
        raise ValueError("training split is empty")

    labels = {lid: Label.from_id(lid) for lid in train_ds.labels}
    universe_names = [labels[lid].name for lid in sorted(labels)]
    enhancer = Enhancer.fit(
        train_ds.reports,
        universe_names,
        config.enhance_config(),
        use_references=config.enhance,
        split_labels=config.enhance,
    )
    for label in labels.values():
        label.feature_text = enhancer.label_feature_text(label)

    train_texts = [enhancer.enhance_report(r) for r in train_ds.reports]
    doc_vocab = fit_vocabulary(train_texts, ngram_max=config.ngram_max, min_df=config.min_df)

    label_ids = sorted(labels)
    label_texts = [labels[lid].feature_text for lid in label_ids]
    label_vocab = fit_vocabulary(label_texts, ngram_max=1, min_df=1)
    label_matrix = stack_vectors(
        [tfidf_transform(t, label_vocab, label_vocab.n_docs, add_bias=True) for t in label_texts]
    )

    doc_vectors = [
        tfidf_transform(t, doc_vocab, doc_vocab.n_docs, add_bias=True) for t in train_texts
    ]
    doc_matrix = stack_vectors(doc_vectors)

    # negatives are mined among labels actually seen in training
    train_label_ids = sorted({lid for r in train_ds.reports for lid in r.labels})
    universe_position = {lid: i for i, lid in enumerate(label_ids)}
    seen_index = {lid: i for i, lid in enumerate(train_label_ids)}

    # cosine mining happens in the document vocabulary, without bias
    docs_nobias = stack_vectors(
        [tfidf_transform(t, doc_vocab, doc_vocab.n_docs, add_bias=False) for t in train_texts]
    )
    labels_doc_space = stack_vectors(
        [
            tfidf_transform(labels[lid].feature_text, doc_vocab, doc_vocab.n_docs, add_bias=False)
            for lid in train_label_ids
        ]
    )
    positives = [
        {seen_index[lid] for lid in report.labels if lid in seen_index}
        for report in train_ds.reports
    ]
    pairs = build_training_pairs(
        docs_nobias,
        labels_doc_space,
        positives,
        train_label_ids,
        config.learner_params(),
        seed,
    )
    # rows of the seen-label matrix share the universe's label feature
    # columns, so the trained W scores unseen labels directly
    seen_matrix = label_matrix[[universe_position[lid] for lid in train_label_ids]]
    weights = train(pairs, doc_matrix, seen_matrix, config.learner_params())

    return TrainedPipeline(
        config=config,
        enhancer=enhancer,
        doc_vocab=doc_vocab,
        label_vocab=label_vocab,
        weights=weights,
        label_ids=label_ids,
        label_matrix=label_matrix,
        labels=labels,
        train_label_ids=train_label_ids,
        seed=seed,
    )


def _sidecar_paths(model_path: Path) -> dict[str, Path]:
    stem = model_path.with_suffix("")
    return {
        "doc_vocab": stem.with_suffix(".docvocab.json"),
        "label_vocab": stem.with_suffix(".labelvocab.json"),
        "enhancer": stem.with_suffix(".enhancer.json"),
        "universe": stem.with_suffix(".universe.json"),
    }


def save_pipeline(pipeline: TrainedPipeline, model_path: str | Path) -> None:
    model_path = Path(model_path)
    side = _sidecar_paths(model_path)
    save_vocabulary(pipeline.doc_vocab, side["doc_vocab"])
    save_vocabulary(pipeline.label_vocab, side["label_vocab"])
    side["enhancer"].write_text(
        json.dumps(pipeline.enhancer.to_dict(), sort_keys=True) + "\n", encoding="utf-8"
    )
    side["universe"].write_text(
        json.dumps(
            {
                "label_ids": pipeline.label_ids,
                "config": asdict(pipeline.config),
            },
            sort_keys=True,
        )
        + "\n",
        encoding="utf-8",
    )
    save_model(
        model_path,
        pipeline.weights,
        pipeline.config.learner_params(),
        vocabulary_checksum(pipeline.doc_vocab),
        vocabulary_checksum(pipeline.label_vocab),
        pipeline.train_label_ids,
        pipeline.seed,
    )


def load_pipeline(model_path: str | Path) -> TrainedPipeline:
    model_path = Path(model_path)
    side = _sidecar_paths(model_path)
    doc_vocab = load_vocabulary(side["doc_vocab"])
    label_vocab = load_vocabulary(side["label_vocab"])
    saved: SavedModel = load_model(
        model_path,
        expected_doc_checksum=vocabulary_checksum(doc_vocab),
        expected_label_checksum=vocabulary_checksum(label_vocab),
    )
    enhancer = Enhancer.from_dict(json.loads(side["enhancer"].read_text(encoding="utf-8")))
    universe = json.loads(side["universe"].read_text(encoding="utf-8"))
    config = EngineConfig(**{
        key: tuple(value) if isinstance(value, list) else value
        for key, value in universe["config"].items()
    })
    labels = {lid: Label.from_id(lid) for lid in universe["label_ids"]}
    for label in labels.values():
        label.feature_text = enhancer.label_feature_text(label)
    label_ids = sorted(labels)
    label_matrix = stack_vectors(
        [
            tfidf_transform(labels[lid].feature_text, label_vocab, label_vocab.n_docs, add_bias=True)
            for lid in label_ids
        ]
    )
    return TrainedPipeline(
        config=config,
        enhancer=enhancer,
        doc_vocab=doc_vocab,
        label_vocab=label_vocab,
        weights=saved.weights,
        label_ids=label_ids,
        label_matrix=label_matrix,
        labels=labels,
        train_label_ids=saved.train_label_ids,
        seed=saved.seed,
    )
