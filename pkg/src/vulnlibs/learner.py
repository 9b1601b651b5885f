"""Sparse bilinear relevance model.

Scores a (document, label) pair as d^T W l over their TF-IDF features and
learns W under a per-row sparsity budget with a two-phase solver: a
closed-form quadratic approximation around W = 0 selects the support, then
coordinate-wise Newton refinement fits the surviving entries against the
exact regularized logistic objective.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import sparse
from scipy.special import expit

from .features import SparseVector

log = logging.getLogger(__name__)


@dataclass
class LearnerParams:
    row_budget: int = 64            # max non-zeros per row of W
    loss_weight: float = 1.0        # weight of the logistic loss vs the L2 term
    negatives_per_doc: int = 20
    refine_passes: int = 3
    candidate_cap: int = 50_000     # per-row cap on Phase-A candidates

    def validate(self) -> None:
        for name in ("row_budget", "loss_weight", "refine_passes", "candidate_cap"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.negatives_per_doc < 0:
            raise ValueError("negatives_per_doc must be >= 0")


@dataclass
class TrainingPair:
    doc: int
    label: int
    y: int


class WeightMatrix:
    """Row-sparse weight matrix; each row holds sorted (column, weight)."""

    def __init__(self, n_rows: int, n_cols: int,
                 rows: dict[int, tuple[np.ndarray, np.ndarray]] | None = None):
        self.n_rows = n_rows
        self.n_cols = n_cols
        self._rows = rows or {}

    _EMPTY = (np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64))

    def row(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        return self._rows.get(i, self._EMPTY)

    def set_row(self, i: int, cols: np.ndarray, vals: np.ndarray) -> None:
        order = np.argsort(cols, kind="stable")
        self._rows[i] = (cols[order].astype(np.int64), vals[order].astype(np.float64))

    def iter_rows(self):
        for i in sorted(self._rows):
            cols, vals = self._rows[i]
            yield i, cols, vals

    @property
    def nnz(self) -> int:
        return sum(cols.size for cols, _ in self._rows.values())

    def max_row_nnz(self) -> int:
        return max((cols.size for cols, _ in self._rows.values()), default=0)

    def to_dense(self) -> np.ndarray:
        dense = np.zeros((self.n_rows, self.n_cols))
        for i, cols, vals in self.iter_rows():
            dense[i, cols] = vals
        return dense

    def to_csr(self) -> sparse.csr_matrix:
        rows, cols, vals = [], [], []
        for i, rcols, rvals in self.iter_rows():
            rows.extend([i] * rcols.size)
            cols.extend(rcols.tolist())
            vals.extend(rvals.tolist())
        return sparse.csr_matrix((vals, (rows, cols)), shape=(self.n_rows, self.n_cols))


def relevance(d: SparseVector, l: SparseVector, w: WeightMatrix) -> float:
    """d^T W l, iterating d's non-zeros over W's rows and merge-joining each
    row with l's non-zeros."""
    if d.dim != w.n_rows:
        raise ValueError(f"document dim {d.dim} != weight rows {w.n_rows}")
    if l.dim != w.n_cols:
        raise ValueError(f"label dim {l.dim} != weight cols {w.n_cols}")
    total = 0.0
    for a, d_val in zip(d.cols, d.vals):
        row_cols, row_vals = w.row(int(a))
        if row_cols.size == 0:
            continue
        _, iw, il = np.intersect1d(row_cols, l.cols, assume_unique=True, return_indices=True)
        if iw.size:
            total += float(d_val) * float(np.dot(row_vals[iw], l.vals[il]))
    return total


def build_training_pairs(
    docs: sparse.csr_matrix,
    labels: sparse.csr_matrix,
    positives: list[set[int]],
    label_ids: list[str],
    params: LearnerParams,
    seed: int,
) -> list[TrainingPair]:
    """One +1 pair per (document, true label); negatives are the most
    cosine-similar non-positive labels (docs and labels in the same
    vocabulary, rows L2-normalized), padded with seeded uniform draws.
    Documents without positives are skipped with a warning."""
    if docs.shape[0] != len(positives):
        raise ValueError("positives must align with document rows")
    rng = np.random.default_rng(seed)
    n_labels = labels.shape[0]
    sim = docs @ labels.T
    pairs: list[TrainingPair] = []
    for doc_idx in range(docs.shape[0]):
        pos = positives[doc_idx]
        if not pos:
            log.warning("document %d has no positive labels; skipped", doc_idx)
            continue
        for label_idx in sorted(pos):
            pairs.append(TrainingPair(doc=doc_idx, label=label_idx, y=+1))
        if params.negatives_per_doc == 0:
            continue
        row = np.asarray(sim[doc_idx].todense()).ravel()
        candidates = [
            j for j in range(n_labels) if j not in pos and row[j] > 0.0
        ]
        candidates.sort(key=lambda j: (-row[j], label_ids[j]))
        chosen = candidates[: params.negatives_per_doc]
        short = params.negatives_per_doc - len(chosen)
        if short > 0:
            remaining = sorted(set(range(n_labels)) - pos - set(chosen))
            if remaining:
                picks = rng.choice(len(remaining), size=min(short, len(remaining)), replace=False)
                chosen.extend(remaining[int(p)] for p in sorted(picks))
        for label_idx in chosen:
            pairs.append(TrainingPair(doc=doc_idx, label=label_idx, y=-1))
    return pairs


def _pair_matrices(
    pairs: list[TrainingPair], docs: sparse.csr_matrix, labels: sparse.csr_matrix
) -> tuple[sparse.csr_matrix, sparse.csr_matrix, np.ndarray]:
    doc_idx = np.array([p.doc for p in pairs], dtype=np.int64)
    label_idx = np.array([p.label for p in pairs], dtype=np.int64)
    y = np.array([p.y for p in pairs], dtype=np.float64)
    return docs[doc_idx], labels[label_idx], y


def objective(
    pairs: list[TrainingPair],
    docs: sparse.csr_matrix,
    labels: sparse.csr_matrix,
    w: WeightMatrix,
    loss_weight: float,
) -> float:
    """0.5*||W||^2 plus the weighted logistic loss over the sampled pairs."""
    dp, lp, y = _pair_matrices(pairs, docs, labels)
    margins = _pair_scores(dp, lp, w)
    loss = float(np.sum(np.logaddexp(0.0, -y * margins)))
    reg = 0.5 * sum(float(np.dot(vals, vals)) for _, _, vals in w.iter_rows())
    return reg + loss_weight * loss


def _pair_scores(dp: sparse.csr_matrix, lp: sparse.csr_matrix, w: WeightMatrix) -> np.ndarray:
    return np.asarray((dp @ w.to_csr()).multiply(lp).sum(axis=1)).ravel()


def coordinate_gradient(
    pairs: list[TrainingPair],
    docs: sparse.csr_matrix,
    labels: sparse.csr_matrix,
    w: WeightMatrix,
    loss_weight: float,
    row: int,
    col: int,
) -> float:
    """Analytic d objective / d W[row, col] at the current W."""
    dp, lp, y = _pair_matrices(pairs, docs, labels)
    margins = _pair_scores(dp, lp, w)
    d_col = np.asarray(dp[:, row].todense()).ravel()
    l_col = np.asarray(lp[:, col].todense()).ravel()
    prods = d_col * l_col
    row_cols, row_vals = w.row(row)
    pos = np.searchsorted(row_cols, col)
    current = float(row_vals[pos]) if pos < row_cols.size and row_cols[pos] == col else 0.0
    sig = expit(-y * margins)
    return current + loss_weight * float(np.sum(-y * sig * prods))


def _phase_a_support(
    dp: sparse.csr_matrix,
    lp: sparse.csr_matrix,
    y: np.ndarray,
    params: LearnerParams,
) -> dict[int, tuple[np.ndarray, np.ndarray]]:
    """Quadratic approximation at W = 0. Candidate entries are the feature
    pairs co-occurring in at least one training pair; per row the top
    entries by modelled objective decrease g^2/(2h) are kept and set to
    their Newton value -g/h."""
    lam = params.loss_weight
    y_diag = sparse.diags(y)
    grad = (dp.T @ (y_diag @ lp)).tocsr() * (-lam / 2.0)
    curv = ((dp.multiply(dp)).T @ (lp.multiply(lp))).tocsr() * (lam / 4.0)
    grad.sort_indices()
    curv.sort_indices()

    rows: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    for i in range(grad.shape[0]):
        g_cols = grad.indices[grad.indptr[i]: grad.indptr[i + 1]]
        g_vals = grad.data[grad.indptr[i]: grad.indptr[i + 1]]
        keep = g_vals != 0.0
        g_cols, g_vals = g_cols[keep], g_vals[keep]
        if g_cols.size == 0:
            continue
        if g_cols.size > params.candidate_cap:
            order = np.argsort(-np.abs(g_vals), kind="stable")[: params.candidate_cap]
            order.sort()
            g_cols, g_vals = g_cols[order], g_vals[order]
        h_cols = curv.indices[curv.indptr[i]: curv.indptr[i + 1]]
        h_vals = curv.data[curv.indptr[i]: curv.indptr[i + 1]]
        # curvature support always covers the gradient support
        where = np.searchsorted(h_cols, g_cols)
        h = h_vals[where] + 1.0
        score = g_vals * g_vals / (2.0 * h)
        top = np.argsort(-score, kind="stable")[: params.row_budget]
        top.sort()
        cols = g_cols[top].astype(np.int64)
        vals = (-g_vals[top] / h[top]).astype(np.float64)
        if not np.all(np.isfinite(vals)):
            bad = cols[~np.isfinite(vals)][0]
            raise ValueError(f"non-finite initial weight at entry ({i}, {int(bad)})")
        rows[i] = (cols, vals)
    return rows


def _entry_pair_index(
    dp_csc: sparse.csc_matrix, lp_csc: sparse.csc_matrix, row: int, col: int
) -> tuple[np.ndarray, np.ndarray]:
    """Pairs where both the document feature `row` and the label feature
    `col` are active, with the per-pair products d_a * l_b."""
    d_pairs = dp_csc.indices[dp_csc.indptr[row]: dp_csc.indptr[row + 1]]
    d_vals = dp_csc.data[dp_csc.indptr[row]: dp_csc.indptr[row + 1]]
    l_pairs = lp_csc.indices[lp_csc.indptr[col]: lp_csc.indptr[col + 1]]
    l_vals = lp_csc.data[lp_csc.indptr[col]: lp_csc.indptr[col + 1]]
    common, i_d, i_l = np.intersect1d(d_pairs, l_pairs, assume_unique=True, return_indices=True)
    return common, d_vals[i_d] * l_vals[i_l]


def train(
    pairs: list[TrainingPair],
    docs: sparse.csr_matrix,
    labels: sparse.csr_matrix,
    params: LearnerParams,
) -> WeightMatrix:
    """Two-phase fit: support selection via the W = 0 approximation, then
    `refine_passes` rounds of coordinate Newton on the fixed support. Each
    coordinate step is clipped to |delta| <= 1 and halved until it does not
    increase the exact objective, so the descent contract holds."""
    if not pairs:
        raise ValueError("no training pairs")
    params.validate()
    lam = params.loss_weight
    dp, lp, y = _pair_matrices(pairs, docs, labels)
    rows = _phase_a_support(dp, lp, y, params)

    dp_csc = dp.tocsc()
    lp_csc = lp.tocsc()
    dp_csc.sort_indices()
    lp_csc.sort_indices()

    entries = []  # (row, col_position) with cached pair index
    margins = np.zeros(len(pairs))
    weights: dict[tuple[int, int], float] = {}
    for i in sorted(rows):
        cols, vals = rows[i]
        for pos, col in enumerate(cols):
            pidx, prods = _entry_pair_index(dp_csc, lp_csc, i, int(col))
            entries.append((i, int(col), pidx, prods))
            weights[(i, int(col))] = float(vals[pos])
            if pidx.size:
                margins[pidx] += vals[pos] * prods

    for _ in range(params.refine_passes):
        for i, col, pidx, prods in entries:
            w_cur = weights[(i, col)]
            if pidx.size:
                y_p = y[pidx]
                z = y_p * margins[pidx]
                sig = expit(-z)
                grad = w_cur + lam * float(np.sum(-y_p * sig * prods))
                hess = 1.0 + lam * float(np.sum(sig * (1.0 - sig) * prods * prods))
            else:
                grad, hess = w_cur, 1.0
            if not (np.isfinite(grad) and np.isfinite(hess)):
                raise ValueError(f"non-finite Newton data at entry ({i}, {col})")
            delta = float(np.clip(-grad / hess, -1.0, 1.0))
            if delta == 0.0:
                continue
            # guarantee descent: halve the step while it would raise the
            # exact objective restricted to this coordinate
            for _attempt in range(40):
                reg_delta = 0.5 * ((w_cur + delta) ** 2 - w_cur * w_cur)
                if pidx.size:
                    before = np.logaddexp(0.0, -y_p * margins[pidx])
                    after = np.logaddexp(0.0, -y_p * (margins[pidx] + delta * prods))
                    loss_delta = lam * float(np.sum(after - before))
                else:
                    loss_delta = 0.0
                if reg_delta + loss_delta <= 0.0:
                    break
                delta *= 0.5
            else:
                delta = 0.0
            if delta != 0.0:
                weights[(i, col)] = w_cur + delta
                if pidx.size:
                    margins[pidx] += delta * prods

    out: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    for i in sorted(rows):
        cols = rows[i][0]
        vals = np.array([weights[(i, int(c))] for c in cols], dtype=np.float64)
        if not np.all(np.isfinite(vals)):
            bad = cols[~np.isfinite(vals)][0]
            raise ValueError(f"non-finite trained weight at entry ({i}, {int(bad)})")
        out[i] = (cols, vals)
    return WeightMatrix(docs.shape[1], labels.shape[1], out)


def predict_topk(
    d: SparseVector,
    label_ids: list[str],
    label_matrix: sparse.csr_matrix,
    w: WeightMatrix,
    k: int,
) -> list[tuple[str, float]]:
    """Exhaustively score every label in the universe and return the top
    min(k, n) as (label id, score), score ties broken lexicographically.
    `label_ids` must be lexicographically sorted and aligned with the
    matrix rows."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not label_ids:
        raise ValueError("empty label universe")
    if label_matrix.shape[0] != len(label_ids):
        raise ValueError("label matrix rows must align with label ids")
    if d.dim != w.n_rows or label_matrix.shape[1] != w.n_cols:
        raise ValueError("dimension mismatch between features and weights")
    projected = np.zeros(w.n_cols)
    for a, d_val in zip(d.cols, d.vals):
        row_cols, row_vals = w.row(int(a))
        if row_cols.size:
            projected[row_cols] += float(d_val) * row_vals
    scores = label_matrix @ projected
    order = np.argsort(-scores, kind="stable")[: min(k, len(label_ids))]
    return [(label_ids[int(i)], float(scores[int(i)])) for i in order]


def save_model(
    path: str | Path,
    w: WeightMatrix,
    params: LearnerParams,
    doc_vocab_checksum: str,
    label_vocab_checksum: str,
    train_label_ids: list[str],
    seed: int,
) -> None:
    payload = {
        "format": "vulnlibs-model-v1",
        "rows": w.n_rows,
        "cols": w.n_cols,
        "row_budget": params.row_budget,
        "loss_weight": params.loss_weight,
        "negatives_per_doc": params.negatives_per_doc,
        "refine_passes": params.refine_passes,
        "candidate_cap": params.candidate_cap,
        "seed": seed,
        "doc_vocab_checksum": doc_vocab_checksum,
        "label_vocab_checksum": label_vocab_checksum,
        "train_label_ids": sorted(train_label_ids),
        "entries": {
            str(i): [[int(c), float(v)] for c, v in zip(cols, vals)]
            for i, cols, vals in w.iter_rows()
        },
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True) + "\n", encoding="utf-8")


@dataclass
class SavedModel:
    weights: WeightMatrix
    params: LearnerParams
    doc_vocab_checksum: str
    label_vocab_checksum: str
    train_label_ids: list[str]
    seed: int


def load_model(
    path: str | Path,
    expected_doc_checksum: str | None = None,
    expected_label_checksum: str | None = None,
) -> SavedModel:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("format") != "vulnlibs-model-v1":
        raise ValueError(f"unsupported model format {payload.get('format')!r}")
    for expected, key in (
        (expected_doc_checksum, "doc_vocab_checksum"),
        (expected_label_checksum, "label_vocab_checksum"),
    ):
        if expected is not None and payload[key] != expected:
            raise ValueError(f"model/vocabulary mismatch on {key}")
    rows = {}
    for key, entry_list in payload["entries"].items():
        cols = np.array([c for c, _ in entry_list], dtype=np.int64)
        vals = np.array([v for _, v in entry_list], dtype=np.float64)
        rows[int(key)] = (cols, vals)
    w = WeightMatrix(payload["rows"], payload["cols"], rows)
    params = LearnerParams(
        row_budget=payload["row_budget"],
        loss_weight=payload["loss_weight"],
        negatives_per_doc=payload["negatives_per_doc"],
        refine_passes=payload["refine_passes"],
        candidate_cap=payload["candidate_cap"],
    )
    return SavedModel(
        weights=w,
        params=params,
        doc_vocab_checksum=payload["doc_vocab_checksum"],
        label_vocab_checksum=payload["label_vocab_checksum"],
        train_label_ids=list(payload["train_label_ids"]),
        seed=payload["seed"],
    )
