"""Seeded synthetic corpus generator.

Produces a chronological stream of reports with temporally clustered
library versions: the first half of the timeline blames the 1.0 line of
each versioned family, the second half the 2.0 line, truths arrive in
bursty runs, a slice of descriptions only names the library inside an
allowlisted reference, and a few libraries appear exclusively in the later
(validation/test) era so they are genuinely unseen at training time.
"""

from __future__ import annotations

import random
from datetime import date, timedelta

from .corpus import Dataset, Label, ReferenceDoc, VulnerabilityReport

VERSIONED_FAMILIES = [
    ("alpha", "engine"), ("beta", "parser"), ("gamma", "cache"), ("delta", "store"),
    ("epsilon", "proxy"), ("zeta", "router"), ("eta", "codec"), ("theta", "crypto"),
    ("iota", "queue"), ("kappa", "render"),
]
PLAIN_LIBS = [
    ("lambda", "shell"), ("mu", "logger"), ("nu", "mailer"), ("xi", "broker"),
    ("omicron", "editor"), ("pi", "loader"), ("rho", "daemon"), ("sigma", "tools"),
]
# recombinations of trained sub-words; their truth appears only in the late era
UNSEEN_LIBS = [
    ("alpha", "parser"), ("gamma", "store"), ("zeta", "codec"), ("iota", "render"),
]

VULN_KINDS = [
    "overflow", "injection", "traversal", "corruption", "disclosure",
    "bypass", "forgery", "exhaustion",
]
IMPACTS = [
    "execute arbitrary code", "read sensitive memory", "crash the service",
    "escalate privileges", "write files outside the sandbox",
]
REFERENCE_DOMAINS = [
    "access.redhat.com", "ubuntu.com", "debian.org", "security.gentoo.org",
    "lists.fedoraproject.org",
]
# appears in every reference; the frequency cut should learn to drop these
REFERENCE_BOILERPLATE = (
    "security advisory important update release notes team announce "
    "mitigation tracker status resolved errata"
)
# sampled filler so the reference vocabulary has a long common tail
REFERENCE_FILLER = (
    "customers subscription products listed severity rating impact summary "
    "description solution affected packages versions upstream maintainers "
    "backport candidate stable testing unstable distribution supported "
    "lifecycle guidance bulletin notice publication identifier assigned "
    "acknowledgements reporter credits references documentation portal "
    "contact enterprise desktop workstation server cloud container"
).split()


def _lib_name(words: tuple[str, str]) -> str:
    return f"{words[0]}_{words[1]}"


def _label_id(words: tuple[str, str], version: str | None) -> str:
    name = _lib_name(words)
    return f"{name}@{version}" if version else name


def synthetic_label_universe() -> list[str]:
    ids = []
    for family in VERSIONED_FAMILIES:
        ids.append(_label_id(family, "1.0"))
        ids.append(_label_id(family, "2.0"))
    ids.extend(_label_id(lib, None) for lib in PLAIN_LIBS)
    ids.extend(_label_id(lib, None) for lib in UNSEEN_LIBS)
    return sorted(ids)


def generate_synthetic_dataset(
    n_reports: int = 300,
    seed: int = 20200101,
    start: date = date(2020, 1, 1),
    run_length: int = 5,
    vague_fraction: float = 0.45,
) -> Dataset:
    rng = random.Random(seed)
    era_boundary = n_reports // 2

    reports = []
    idx = 0
    while idx < n_reports:
        late_era = idx >= era_boundary
        roll = rng.random()
        if late_era and roll < 0.18:
            words, version = rng.choice(UNSEEN_LIBS), None
        elif roll < 0.72:
            words = rng.choice(VERSIONED_FAMILIES)
            version = "2.0" if late_era else "1.0"
        else:
            words, version = rng.choice(PLAIN_LIBS), None
        for _ in range(run_length):
            if idx >= n_reports:
                break
            reports.append(_make_report(idx, start, words, version, rng, vague_fraction))
            idx += 1

    labels = {lid: Label.from_id(lid) for lid in synthetic_label_universe()}
    return Dataset(reports=reports, labels=labels)


def _make_report(
    idx: int,
    start: date,
    words: tuple[str, str],
    version: str | None,
    rng: random.Random,
    vague_fraction: float,
) -> VulnerabilityReport:
    w1, w2 = words
    vuln = rng.choice(VULN_KINDS)
    impact = rng.choice(IMPACTS)
    label_ids = {_label_id(words, version)}
    if rng.random() < 0.20:
        co_words = rng.choice(PLAIN_LIBS)
        if co_words != words:
            label_ids.add(_label_id(co_words, None))

    vague = rng.random() < vague_fraction
    if vague:
        description = (
            f"A {vuln} flaw was reported that allows remote attackers to {impact} "
            f"via crafted input handled by the affected component."
        )
    else:
        description = (
            f"A {vuln} vulnerability was discovered in the {w1} {w2} package. "
            f"Remote attackers can {impact} through malformed requests."
        )
        if len(label_ids) > 1:
            extras = sorted(label_ids - {_label_id(words, version)})
            extra_names = " and ".join(lid.split("@")[0].replace("_", " ") for lid in extras)
            description += f" Deployments bundling {extra_names} are also affected."

    domain = rng.choice(REFERENCE_DOMAINS)
    mentioned = " and ".join(
        sorted({lid.split("@")[0].replace("_", " ") for lid in label_ids})
    )
    filler = " ".join(rng.sample(REFERENCE_FILLER, k=12))
    references = [
        ReferenceDoc(
            url=f"https://{domain}/errata/{2020 + idx % 3}-{idx:04d}",
            title=f"security advisory for {mentioned}",
            text=(
                f"an update for {mentioned} is now available. "
                f"the {w1} {w2} component of {w1} {w2} should be upgraded promptly. "
                f"{REFERENCE_BOILERPLATE} {filler}"
            ),
        ),
        ReferenceDoc(url=f"https://tracker.example.org/issue/{idx}", title="issue tracker entry"),
    ]

    cpe_entries = []
    if rng.random() < 0.7:
        cpe_version = version if version else "*"
        cpe_entries.append(
            f"cpe:2.3:a:{w1}{w2}:{_lib_name(words)}:{cpe_version}:*:*:*:*:*:*:*"
        )

    return VulnerabilityReport(
        id=f"CVE-2020-{10000 + idx}",
        published=start + timedelta(days=idx),
        description=description,
        references=references,
        cpe_entries=cpe_entries,
        labels=label_ids,
    )
