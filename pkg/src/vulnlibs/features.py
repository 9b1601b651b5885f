"""Vocabularies and sparse TF-IDF feature vectors, with the trailing
constant feature used to absorb bias terms."""

from __future__ import annotations

import hashlib
import json
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import sparse


@dataclass
class SparseVector:
    cols: np.ndarray
    vals: np.ndarray
    dim: int

    @classmethod
    def from_entries(cls, entries: list[tuple[int, float]], dim: int) -> "SparseVector":
        entries = sorted(entries)
        cols = np.array([c for c, _ in entries], dtype=np.int64)
        vals = np.array([v for _, v in entries], dtype=np.float64)
        return cls(cols=cols, vals=vals, dim=dim)

    def entries(self) -> list[tuple[int, float]]:
        return [(int(c), float(v)) for c, v in zip(self.cols, self.vals)]

    @property
    def nnz(self) -> int:
        return int(self.cols.size)

    def to_dense(self) -> np.ndarray:
        dense = np.zeros(self.dim)
        dense[self.cols] = self.vals
        return dense


@dataclass
class Vocabulary:
    terms: list[str]
    index: dict[str, int]
    doc_freq: dict[str, int]
    n_docs: int
    ngram_max: int = 1
    min_df: int = 1

    def __len__(self) -> int:
        return len(self.terms)


def _text_terms(text: str, ngram_max: int) -> list[str]:
    tokens = text.split()
    terms = list(tokens)
    if ngram_max >= 2:
        terms.extend(f"{a}_{b}" for a, b in zip(tokens, tokens[1:]))
    return terms


def fit_vocabulary(texts: list[str], ngram_max: int = 1, min_df: int = 1) -> Vocabulary:
    if not texts:
        raise ValueError("cannot fit a vocabulary on an empty corpus")
    if ngram_max not in (1, 2):
        raise ValueError("ngram_max must be 1 or 2")
    df: Counter = Counter()
    for text in texts:
        df.update(set(_text_terms(text, ngram_max)))
    terms = sorted(term for term, count in df.items() if count >= min_df)
    return Vocabulary(
        terms=terms,
        index={term: i for i, term in enumerate(terms)},
        doc_freq={term: df[term] for term in terms},
        n_docs=len(texts),
        ngram_max=ngram_max,
        min_df=min_df,
    )


def idf_value(n_docs: int, doc_freq: int) -> float:
    return math.log((1.0 + n_docs) / (1.0 + doc_freq)) + 1.0


def tfidf_transform(
    text: str, vocab: Vocabulary, n_docs: int, add_bias: bool = False
) -> SparseVector:
    """Raw term counts times smoothed log idf, L2-normalized; the bias entry
    (value 1.0 in the reserved last column) is appended after normalization
    so the non-bias part keeps unit norm."""
    counts: Counter = Counter()
    for term in _text_terms(text, vocab.ngram_max):
        col = vocab.index.get(term)
        if col is not None:
            counts[col] += 1
    cols = np.array(sorted(counts), dtype=np.int64)
    vals = np.array(
        [counts[int(c)] * idf_value(n_docs, vocab.doc_freq[vocab.terms[int(c)]]) for c in cols],
        dtype=np.float64,
    )
    norm = float(np.linalg.norm(vals))
    if norm > 0.0:
        vals = vals / norm
    dim = len(vocab)
    if add_bias:
        dim += 1
        cols = np.append(cols, dim - 1)
        vals = np.append(vals, 1.0)
    return SparseVector(cols=cols, vals=vals, dim=dim)


def sparse_dot(u: SparseVector, v: SparseVector) -> float:
    """Exact merge-join dot product over the shared sorted columns."""
    if u.dim != v.dim:
        raise ValueError(f"dimension mismatch: {u.dim} != {v.dim}")
    _, iu, iv = np.intersect1d(u.cols, v.cols, assume_unique=True, return_indices=True)
    if iu.size == 0:
        return 0.0
    return float(np.dot(u.vals[iu], v.vals[iv]))


def stack_vectors(vectors: list[SparseVector]) -> sparse.csr_matrix:
    """Row-stack SparseVectors into a scipy CSR matrix."""
    if not vectors:
        raise ValueError("no vectors to stack")
    dim = vectors[0].dim
    if any(vec.dim != dim for vec in vectors):
        raise ValueError("vectors disagree on dimension")
    indptr = np.zeros(len(vectors) + 1, dtype=np.int64)
    for i, vec in enumerate(vectors):
        indptr[i + 1] = indptr[i] + vec.nnz
    indices = np.concatenate([vec.cols for vec in vectors]) if vectors else np.array([])
    data = np.concatenate([vec.vals for vec in vectors]) if vectors else np.array([])
    mat = sparse.csr_matrix((data, indices, indptr), shape=(len(vectors), dim))
    mat.sort_indices()
    return mat


def vocabulary_to_dict(vocab: Vocabulary) -> dict:
    return {
        "format": "vulnlibs-vocab-v1",
        "terms": vocab.terms,
        "doc_freq": [vocab.doc_freq[t] for t in vocab.terms],
        "n_docs": vocab.n_docs,
        "ngram_max": vocab.ngram_max,
        "min_df": vocab.min_df,
    }


def vocabulary_from_dict(payload: dict) -> Vocabulary:
    if payload.get("format") != "vulnlibs-vocab-v1":
        raise ValueError(f"unsupported vocabulary format {payload.get('format')!r}")
    terms = list(payload["terms"])
    return Vocabulary(
        terms=terms,
        index={term: i for i, term in enumerate(terms)},
        doc_freq=dict(zip(terms, payload["doc_freq"])),
        n_docs=payload["n_docs"],
        ngram_max=payload["ngram_max"],
        min_df=payload["min_df"],
    )


def vocabulary_checksum(vocab: Vocabulary) -> str:
    blob = json.dumps(vocabulary_to_dict(vocab), sort_keys=True).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def save_vocabulary(vocab: Vocabulary, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(vocabulary_to_dict(vocab), sort_keys=True) + "\n", encoding="utf-8"
    )


def load_vocabulary(path: str | Path) -> Vocabulary:
    return vocabulary_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
