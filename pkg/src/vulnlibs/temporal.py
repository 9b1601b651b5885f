"""Time-aware score adjustment: a version store that transfers relevance
from old library versions to newer cache-resident ones, and a recency boost
for labels confirmed on recent reports."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cmp_to_key
from typing import NamedTuple

from .corpus import parse_label_id


class ScoredLabel(NamedTuple):
    label: str
    score: float


@dataclass
class AdjustmentParams:
    magnitude: float = 8.0   # scales the recency boost
    top_window: int = 10     # how many top-ranked labels are adjusted

    def validate(self) -> None:
        if self.magnitude <= 0:
            raise ValueError("magnitude must be positive")
        if self.top_window < 1:
            raise ValueError("top_window must be >= 1")


def _compare_components(a: str, b: str) -> int:
    if a == b:
        return 0
    if a.isdigit() and b.isdigit():
        return -1 if int(a) < int(b) else (1 if int(a) > int(b) else 0)
    return -1 if a < b else 1


def compare_versions(a: str, b: str) -> int:
    """Order two label ids sharing a base name: -1 when a is older, 0 when
    equal, +1 when newer. Version components split on '.', compared
    numerically when both numeric, the shorter tuple zero-padded; a label
    without a version is older than any versioned sibling."""
    name_a, ver_a = parse_label_id(a)
    name_b, ver_b = parse_label_id(b)
    if name_a != name_b:
        raise ValueError(f"labels {a!r} and {b!r} do not share a base name")
    if ver_a is None and ver_b is None:
        return 0
    if ver_a is None:
        return -1
    if ver_b is None:
        return 1
    parts_a = ver_a.split(".")
    parts_b = ver_b.split(".")
    width = max(len(parts_a), len(parts_b))
    parts_a += ["0"] * (width - len(parts_a))
    parts_b += ["0"] * (width - len(parts_b))
    for pa, pb in zip(parts_a, parts_b):
        cmp = _compare_components(pa, pb)
        if cmp != 0:
            return cmp
    return 0


class VersionStore:
    """Maps each label to the newer versions of the same library, newest
    first. Built once from the label universe."""

    def __init__(self, newer: dict[str, list[str]] | None = None):
        self._newer = newer or {}

    @classmethod
    def build(cls, label_ids: list[str]) -> "VersionStore":
        families: dict[str, list[str]] = {}
        for label_id in label_ids:
            name, _ = parse_label_id(label_id)
            families.setdefault(name, []).append(label_id)
        newer: dict[str, list[str]] = {}
        for name, members in families.items():
            if len(members) < 2:
                continue
            # newest first; equal versions (e.g. 2.0 vs 2.0.0) fall back to id order
            members.sort(key=cmp_to_key(lambda x, y: compare_versions(x, y) or (x > y) - (x < y)),
                         reverse=True)
            for idx, label_id in enumerate(members):
                strictly_newer = [
                    m for m in members[:idx] if compare_versions(m, label_id) > 0
                ]
                if strictly_newer:
                    newer[label_id] = strictly_newer
        return cls(newer)

    def newer_versions(self, label_id: str) -> list[str]:
        return self._newer.get(label_id, [])

    def to_dict(self) -> dict[str, list[str]]:
        return {k: list(v) for k, v in sorted(self._newer.items())}


class LruCache:
    """Recency list of labels, front = most recently confirmed. Inserting a
    resident label moves it to the front; overflow evicts the back."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._order: list[str] = []

    def insert(self, label: str) -> str | None:
        """Returns the evicted label, if any."""
        if label in self._order:
            self._order.remove(label)
        self._order.insert(0, label)
        if len(self._order) > self.capacity:
            return self._order.pop()
        return None

    def recency_index(self, label: str) -> int | None:
        try:
            return self._order.index(label)
        except ValueError:
            return None

    def __contains__(self, label: str) -> bool:
        return label in self._order

    def __len__(self) -> int:
        return len(self._order)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(self._order)

    def to_dict(self) -> dict:
        return {"capacity": self.capacity, "labels": list(self._order)}

    @classmethod
    def from_dict(cls, payload: dict) -> "LruCache":
        cache = cls(payload["capacity"])
        cache._order = list(payload["labels"])[: cache.capacity]
        return cache


def ground_truth_insert_order(labels: set[str] | list[str]) -> list[str]:
    """Deterministic cache-insertion order for one report's confirmed
    labels: version-qualified labels first, lexicographic within."""
    return sorted(labels, key=lambda lid: (0 if "@" in lid else 1, lid))


def insert_ground_truth(cache: LruCache, labels: set[str] | list[str]) -> None:
    for label in ground_truth_insert_order(labels):
        cache.insert(label)


def favor_new_version(
    top: list[ScoredLabel], store: VersionStore, cache: LruCache
) -> tuple[list[ScoredLabel], set[str]]:
    """For each label in the input list, move its score to the first newer
    version found resident in the cache (newest first), zeroing the old
    label; at most one transfer per label. A newer version missing from the
    working set joins it with a base score of 0. Returns the working set in
    insertion order plus the labels that received a transfer."""
    scores: dict[str, float] = {}
    for item in top:
        scores[item.label] = item.score
    received: set[str] = set()
    for item in top:
        for newer in store.newer_versions(item.label):
            if newer in cache:
                current = scores[item.label]
                scores[newer] = max(scores.get(newer, 0.0), current)
                scores[item.label] = 0.0
                received.add(newer)
                break
    return [ScoredLabel(label, score) for label, score in scores.items()], received


def top_window_mean(scored: list[ScoredLabel], window: int) -> float:
    """Mean of the `window` highest scores (fewer when the list is short),
    taken before any boost is applied."""
    if not scored:
        return 0.0
    ordered = sorted((item.score for item in scored), reverse=True)[:window]
    return sum(ordered) / len(ordered)


def _boost(
    scored: list[ScoredLabel], cache: LruCache, params: AdjustmentParams, mean_score: float
) -> list[ScoredLabel]:
    out = []
    for item in scored:
        recency = cache.recency_index(item.label)
        if recency is None:
            out.append(item)
        else:
            alpha = params.magnitude / (recency + 1)
            out.append(ScoredLabel(item.label, item.score + alpha * mean_score))
    return out


def recency_boost(
    top: list[ScoredLabel], cache: LruCache, params: AdjustmentParams
) -> list[ScoredLabel]:
    """Add magnitude/(recency+1) times the pre-boost top-window mean to
    every cache-resident label; non-resident scores pass through
    untouched."""
    return _boost(top, cache, params, top_window_mean(top, params.top_window))


@dataclass
class AdjustResult:
    ranked: list[ScoredLabel]
    transferred: frozenset[str]
    boost_base: float  # the top-window mean the boosts were computed from


def adjust(
    top: list[ScoredLabel],
    store: VersionStore,
    cache: LruCache,
    params: AdjustmentParams,
) -> AdjustResult:
    """Version-favoring transfer followed by the recency boost, then a
    re-sort by adjusted score (descending, ties lexicographic)."""
    params.validate()
    working, transferred = favor_new_version(top, store, cache)
    mean_score = top_window_mean(working, params.top_window)
    boosted = _boost(working, cache, params, mean_score)
    ranked = sorted(boosted, key=lambda item: (-item.score, item.label))
    return AdjustResult(ranked=ranked, transferred=frozenset(transferred), boost_base=mean_score)
