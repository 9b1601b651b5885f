"""Report corpus: data model, JSONL ingestion, chronological splitting and
the seen/unseen label census."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from urllib.parse import urlsplit

log = logging.getLogger(__name__)


class DatasetError(Exception):
    """Base class for dataset failures."""


class DatasetParseError(DatasetError):
    """A line in the dataset file is not a valid record."""


class DatasetValidationError(DatasetError):
    """Records parse but violate a dataset invariant."""


def canonical_label_id(name: str, version: str | None = None) -> str:
    """Canonical label id: lowercased name with runs of whitespace (and any
    stray '@') collapsed to single underscores, then '@' + version when a
    version qualifier is present."""
    cleaned = "_".join(name.strip().lower().replace("@", " ").split())
    if not cleaned:
        raise DatasetValidationError(f"label name {name!r} is empty after normalization")
    if version is not None and version.strip():
        return f"{cleaned}@{version.strip()}"
    return cleaned


def parse_label_id(label_id: str) -> tuple[str, str | None]:
    """Split a canonical label id into (name, version). Names never contain
    '@', so the last '@' is the separator."""
    if "@" in label_id:
        name, version = label_id.rsplit("@", 1)
        return name, version or None
    return label_id, None


@dataclass
class Label:
    id: str
    name: str
    version: str | None = None
    feature_text: str = ""

    @classmethod
    def from_id(cls, label_id: str) -> "Label":
        name, version = parse_label_id(label_id)
        canonical = canonical_label_id(name, version)
        name, version = parse_label_id(canonical)
        return cls(id=canonical, name=name, version=version)


def host_of(url: str) -> str:
    """Lowercased host of a URL, '' when the URL has no parseable host."""
    try:
        host = urlsplit(url).hostname
    except ValueError:
        return ""
    return host.lower() if host else ""


@dataclass
class ReferenceDoc:
    url: str
    domain: str = ""
    title: str | None = None
    text: str | None = None

    def __post_init__(self) -> None:
        if not self.domain:
            self.domain = host_of(self.url)


@dataclass
class VulnerabilityReport:
    id: str
    published: date
    description: str = ""
    references: list[ReferenceDoc] = field(default_factory=list)
    cpe_entries: list[str] = field(default_factory=list)
    labels: set[str] = field(default_factory=set)


@dataclass
class Dataset:
    reports: list[VulnerabilityReport]
    labels: dict[str, Label]

    def __len__(self) -> int:
        return len(self.reports)

    def sorted_label_ids(self) -> list[str]:
        return sorted(self.labels)

    def date_range(self) -> tuple[date, date] | None:
        if not self.reports:
            return None
        return self.reports[0].published, self.reports[-1].published


@dataclass
class ChronologicalSplit:
    train: Dataset
    validation: Dataset
    test: Dataset

    def parts(self) -> list[tuple[str, Dataset]]:
        return [("train", self.train), ("validation", self.validation), ("test", self.test)]


def _parse_published(raw: object) -> date:
    if not isinstance(raw, str) or not raw:
        raise ValueError("missing")
    try:
        return date.fromisoformat(raw)
    except ValueError:
        # tolerate full ISO timestamps by taking the date component
        return date.fromisoformat(raw[:10])


def _parse_report(record: dict, mode: str) -> VulnerabilityReport:
    report_id = record.get("id")
    if not isinstance(report_id, str) or not report_id.strip():
        raise DatasetValidationError("record has no usable 'id'")
    report_id = report_id.strip()

    try:
        published = _parse_published(record.get("published"))
    except ValueError:
        raise DatasetValidationError(
            f"report {report_id}: 'published' must be an ISO-8601 date"
        ) from None

    references = []
    for ref in record.get("references", []) or []:
        if isinstance(ref, str):
            ref = {"url": ref}
        references.append(
            ReferenceDoc(url=ref.get("url", ""), title=ref.get("title"), text=ref.get("text"))
        )

    labels = set()
    for raw in record.get("labels", []) or []:
        name, version = parse_label_id(str(raw))
        labels.add(canonical_label_id(name, version))
    if mode == "labeled" and not labels:
        raise DatasetValidationError(f"report {report_id}: no labels in labeled mode")

    return VulnerabilityReport(
        id=report_id,
        published=published,
        description=str(record.get("description", "") or ""),
        references=references,
        cpe_entries=[str(c) for c in record.get("cpe", []) or []],
        labels=labels,
    )


def load_label_universe(path: str | Path) -> list[str]:
    """Companion universe file: one canonical label id per line."""
    ids = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        name, version = parse_label_id(line)
        ids.append(canonical_label_id(name, version))
    return ids


def load_dataset(
    path: str | Path,
    mode: str = "labeled",
    labels_path: str | Path | None = None,
) -> Dataset:
    """Load a JSON-Lines dataset. The label universe is the union of the
    declared universe file (when given) and every label referenced by a
    report. Reports come back sorted by (published, id)."""
    if mode not in ("labeled", "unlabeled"):
        raise ValueError(f"unknown mode {mode!r}")
    path = Path(path)
    reports: list[VulnerabilityReport] = []
    seen_ids: set[str] = set()
    with path.open("r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetParseError(f"{path.name} line {lineno}: {exc.msg}") from None
            if not isinstance(record, dict):
                raise DatasetParseError(f"{path.name} line {lineno}: record is not an object")
            try:
                report = _parse_report(record, mode)
            except DatasetValidationError as exc:
                raise DatasetValidationError(f"{path.name} line {lineno}: {exc}") from None
            if report.id in seen_ids:
                raise DatasetValidationError(
                    f"{path.name} line {lineno}: duplicate report id {report.id}"
                )
            seen_ids.add(report.id)
            reports.append(report)

    universe: dict[str, Label] = {}
    if labels_path is not None:
        for label_id in load_label_universe(labels_path):
            universe[label_id] = Label.from_id(label_id)
    for report in reports:
        for label_id in report.labels:
            if label_id not in universe:
                universe[label_id] = Label.from_id(label_id)

    reports.sort(key=lambda r: (r.published, r.id))
    return Dataset(reports=reports, labels=universe)


def save_dataset(dataset: Dataset, path: str | Path) -> None:
    """Write reports back out as JSON-Lines in (published, id) order."""
    with Path(path).open("w", encoding="utf-8") as handle:
        for report in sorted(dataset.reports, key=lambda r: (r.published, r.id)):
            record = {
                "id": report.id,
                "published": report.published.isoformat(),
                "description": report.description,
                "references": [
                    {
                        "url": ref.url,
                        **({"title": ref.title} if ref.title is not None else {}),
                        **({"text": ref.text} if ref.text is not None else {}),
                    }
                    for ref in report.references
                ],
                "cpe": report.cpe_entries,
                "labels": sorted(report.labels),
            }
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")


def parse_year_ranges(raw: str) -> list[tuple[int, int]]:
    """Parse '2014-2016,2017,2018-2019' into inclusive year ranges."""
    ranges = []
    for chunk in raw.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        if "-" in chunk:
            lo, hi = chunk.split("-", 1)
            ranges.append((int(lo), int(hi)))
        else:
            ranges.append((int(chunk), int(chunk)))
    if not ranges:
        raise DatasetValidationError("empty year-range expression")
    for (a_lo, a_hi), (b_lo, b_hi) in zip(ranges, ranges[1:]):
        if a_hi >= b_lo:
            raise DatasetValidationError("year ranges must be ascending and disjoint")
    return ranges


def _extend_past_date_run(reports: list[VulnerabilityReport], cut: int) -> int:
    # a ratio cut inside a same-date run is extended to the run's end so the
    # earlier split never loses reports to a later one on the same day
    while 0 < cut < len(reports) and reports[cut].published == reports[cut - 1].published:
        cut += 1
    return cut


def chronological_split(
    dataset: Dataset,
    ratio: tuple[int, int, int] = (3, 1, 2),
    years: list[tuple[int, int]] | None = None,
) -> ChronologicalSplit:
    """Split reports into train/validation/test by date order, either by a
    report-count ratio (ties on the boundary date extend the earlier split)
    or by explicit inclusive year ranges."""
    if not dataset.reports:
        raise DatasetValidationError("cannot split an empty dataset")
    reports = sorted(dataset.reports, key=lambda r: (r.published, r.id))

    if years is not None:
        if len(years) != 3:
            raise DatasetValidationError("year mode needs exactly three ranges")
        buckets: list[list[VulnerabilityReport]] = [[], [], []]
        for report in reports:
            year = report.published.year
            for idx, (lo, hi) in enumerate(years):
                if lo <= year <= hi:
                    buckets[idx].append(report)
                    break
            else:
                raise DatasetValidationError(
                    f"report {report.id} published {report.published} falls outside the year ranges"
                )
        train_r, val_r, test_r = buckets
    else:
        if any(part < 0 for part in ratio) or sum(ratio) <= 0:
            raise DatasetValidationError(f"bad split ratio {ratio}")
        total = len(reports)
        cut1 = _extend_past_date_run(reports, total * ratio[0] // sum(ratio))
        cut2 = _extend_past_date_run(reports, max(cut1, total * (ratio[0] + ratio[1]) // sum(ratio)))
        train_r, val_r, test_r = reports[:cut1], reports[cut1:cut2], reports[cut2:]

    if not val_r or not test_r:
        log.warning(
            "chronological split produced empty parts (train=%d validation=%d test=%d)",
            len(train_r), len(val_r), len(test_r),
        )
    make = lambda part: Dataset(reports=part, labels=dict(dataset.labels))
    return ChronologicalSplit(train=make(train_r), validation=make(val_r), test=make(test_r))


@dataclass
class CensusRow:
    period: str
    total_labels: int
    seen_labels: int
    unseen_labels: int
    total_reports: int
    only_seen_reports: int
    full_unseen_reports: int
    any_unseen_reports: int


@dataclass
class CensusReport:
    granularity: str
    rows: list[CensusRow]

    def to_json_dict(self) -> dict:
        return {
            "granularity": self.granularity,
            "rows": [
                {
                    "period": row.period,
                    "labels": {
                        "total": row.total_labels,
                        "seen": row.seen_labels,
                        "unseen": row.unseen_labels,
                    },
                    "reports": {
                        "total": row.total_reports,
                        "only_seen": row.only_seen_reports,
                        "full_unseen": row.full_unseen_reports,
                        "any_unseen": row.any_unseen_reports,
                    },
                }
                for row in self.rows
            ],
        }

    def to_table(self) -> str:
        header = (
            f"{'period':<12} {'labels':>7} {'seen':>12} {'unseen':>14} "
            f"{'reports':>8} {'only-seen':>14} {'full-unseen':>16} {'any-unseen':>15}"
        )
        lines = [header, "-" * len(header)]
        for row in self.rows:
            pct = lambda part, whole: f"{part} ({100.0 * part / whole:.1f}%)" if whole else f"{part}"
            lines.append(
                f"{row.period:<12} {row.total_labels:>7} {pct(row.seen_labels, row.total_labels):>12} "
                f"{pct(row.unseen_labels, row.total_labels):>14} {row.total_reports:>8} "
                f"{pct(row.only_seen_reports, row.total_reports):>14} "
                f"{pct(row.full_unseen_reports, row.total_reports):>16} "
                f"{pct(row.any_unseen_reports, row.total_reports):>15}"
            )
        return "\n".join(lines) + "\n"


def unseen_census(split: ChronologicalSplit, granularity: str = "per-split") -> CensusReport:
    """Count, per period, how many distinct labels were already seen in any
    strictly earlier period, and how many reports carry unseen labels.
    Periods are the three splits, or calendar years across all reports."""
    if granularity not in ("per-split", "per-year"):
        raise ValueError(f"unknown granularity {granularity!r}")

    if granularity == "per-split":
        periods = [(name, part.reports) for name, part in split.parts()]
    else:
        all_reports = sorted(
            split.train.reports + split.validation.reports + split.test.reports,
            key=lambda r: (r.published, r.id),
        )
        by_year: dict[int, list[VulnerabilityReport]] = {}
        for report in all_reports:
            by_year.setdefault(report.published.year, []).append(report)
        periods = [(str(year), by_year[year]) for year in sorted(by_year)]

    rows = []
    history: set[str] = set()
    for name, reports in periods:
        labels_here: set[str] = set()
        labeled = [r for r in reports if r.labels]
        for report in labeled:
            labels_here |= report.labels
        seen = labels_here & history
        unseen = labels_here - history
        only_seen = sum(1 for r in labeled if r.labels <= history)
        full_unseen = sum(1 for r in labeled if not (r.labels & history))
        rows.append(
            CensusRow(
                period=name,
                total_labels=len(labels_here),
                seen_labels=len(seen),
                unseen_labels=len(unseen),
                total_reports=len(labeled),
                only_seen_reports=only_seen,
                full_unseen_reports=full_unseen,
                any_unseen_reports=len(labeled) - only_seen,
            )
        )
        history |= labels_here
    return CensusReport(granularity=granularity, rows=rows)
