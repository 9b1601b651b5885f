"""Reference baselines: exact name matching, CPE configuration parsing and
a plain TF-IDF cosine ranker."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .corpus import Label, VulnerabilityReport, canonical_label_id
from .features import Vocabulary, fit_vocabulary, stack_vectors, tfidf_transform

log = logging.getLogger(__name__)


def baseline_exact_match(
    text: str, labels: dict[str, Label], k: int
) -> list[tuple[str, float]]:
    """Rank labels by how often the library name occurs (case-insensitive)
    in the report text; zero-count labels are excluded, ties lexicographic.
    Canonical underscores count as spaces when searching."""
    haystack = text.lower()
    counts = []
    for label_id in sorted(labels):
        needle = labels[label_id].name.replace("_", " ")
        if not needle:
            continue
        hits = haystack.count(needle)
        if hits > 0:
            counts.append((label_id, float(hits)))
    counts.sort(key=lambda item: (-item[1], item[0]))
    return counts[:k]


def parse_cpe(cpe: str) -> tuple[str, str | None] | None:
    """Extract (product, version) from a cpe:2.3 string; None when the
    string is not parseable."""
    parts = cpe.split(":")
    if len(parts) < 5 or parts[0] != "cpe" or parts[1] != "2.3":
        return None
    product = parts[4].strip()
    if not product:
        return None
    version = parts[5].strip() if len(parts) > 5 else ""
    if version in ("*", "-", ""):
        return product, None
    return product, version


def baseline_cpe(report: VulnerabilityReport, k: int) -> list[tuple[str, float]]:
    """Labels read straight from the report's CPE configuration: the
    product, and product@version when a concrete version is present.
    First occurrence wins; malformed strings are skipped with a warning."""
    ranked: list[tuple[str, float]] = []
    emitted: set[str] = set()

    def emit(label_id: str) -> None:
        if label_id not in emitted:
            emitted.add(label_id)
            ranked.append((label_id, 1.0))

    for cpe in report.cpe_entries:
        parsed = parse_cpe(cpe)
        if parsed is None:
            log.warning("report %s: skipping malformed CPE string %r", report.id, cpe)
            continue
        product, version = parsed
        name = product.replace("_", " ")
        try:
            emit(canonical_label_id(name))
            if version is not None:
                emit(canonical_label_id(name, version))
        except Exception:
            log.warning("report %s: CPE product %r has no usable name", report.id, product)
    return ranked[:k]


@dataclass
class IrBaseline:
    """TF-IDF bag-of-ngrams (n <= 2) cosine ranker over a vocabulary shared
    by report texts and label feature texts."""

    vocab: Vocabulary
    label_ids: list[str]
    label_matrix: sparse.csr_matrix

    @classmethod
    def fit(cls, report_texts: list[str], label_texts: dict[str, str], ngram_max: int = 2) -> "IrBaseline":
        label_ids = sorted(label_texts)
        vocab = fit_vocabulary(report_texts + [label_texts[l] for l in label_ids], ngram_max=ngram_max)
        vectors = [
            tfidf_transform(label_texts[l], vocab, vocab.n_docs, add_bias=False) for l in label_ids
        ]
        return cls(vocab=vocab, label_ids=label_ids, label_matrix=stack_vectors(vectors))

    def rank(self, text: str, k: int) -> list[tuple[str, float]]:
        vec = tfidf_transform(text, self.vocab, self.vocab.n_docs, add_bias=False)
        dense = np.zeros(vec.dim)
        dense[vec.cols] = vec.vals
        scores = self.label_matrix @ dense
        order = np.argsort(-scores, kind="stable")[: min(k, len(self.label_ids))]
        return [(self.label_ids[int(i)], float(scores[int(i)])) for i in order]
