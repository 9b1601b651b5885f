import json
from datetime import date
from pathlib import Path

import pytest

from vulnlibs.corpus import Dataset, Label, ReferenceDoc, VulnerabilityReport


def make_report(
    report_id: str,
    published: str,
    description: str = "",
    labels: set[str] | None = None,
    references: list[ReferenceDoc] | None = None,
    cpe: list[str] | None = None,
) -> VulnerabilityReport:
    return VulnerabilityReport(
        id=report_id,
        published=date.fromisoformat(published),
        description=description,
        references=references or [],
        cpe_entries=cpe or [],
        labels=labels or set(),
    )


def make_dataset(reports: list[VulnerabilityReport], extra_labels: list[str] | None = None) -> Dataset:
    universe: dict[str, Label] = {}
    for label_id in extra_labels or []:
        universe[label_id] = Label.from_id(label_id)
    for report in reports:
        for label_id in report.labels:
            universe.setdefault(label_id, Label.from_id(label_id))
    return Dataset(reports=sorted(reports, key=lambda r: (r.published, r.id)), labels=universe)


def write_jsonl(path: Path, records: list[dict]) -> Path:
    path.write_text("\n".join(json.dumps(r) for r in records) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def tiny_records() -> list[dict]:
    return [
        {
            "id": "CVE-2019-0001",
            "published": "2019-01-05",
            "description": "Heap overflow in poppler rendering",
            "references": [
                {"url": "https://access.redhat.com/errata/1", "title": "advisory", "text": "poppler fix"}
            ],
            "cpe": ["cpe:2.3:a:freedesktop:poppler:0.70.0:*:*:*:*:*:*:*"],
            "labels": ["poppler", "evince"],
        },
        {
            "id": "CVE-2019-0002",
            "published": "2019-02-11",
            "description": "SQL injection in webapp",
            "references": [],
            "cpe": [],
            "labels": ["webapp@2.1"],
        },
        {
            "id": "CVE-2019-0003",
            "published": "2019-03-20",
            "description": "Path traversal in archiver",
            "references": [],
            "cpe": [],
            "labels": ["archiver"],
        },
    ]
