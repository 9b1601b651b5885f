"""Data enrichment: merge curated reference text into report descriptions
and derive sub-word feature text for library labels."""

from __future__ import annotations

import logging
import math
import re
from collections import Counter
from dataclasses import dataclass

from .corpus import Label, ReferenceDoc, VulnerabilityReport
from .stemmer import porter_stem

log = logging.getLogger(__name__)

# the reference hosts that cover the bulk of report links; everything else
# is dropped rather than scraped
DEFAULT_DOMAIN_ALLOWLIST = frozenset(
    {
        "access.redhat.com",
        "list.opensuse.org",
        "github.com",
        "debian.org",
        "oracle.com",
        "securitytracker.com",
        "security.gentoo.org",
        "ubuntu.com",
        "usn.ubuntu.com",
        "openwall.com",
        "lists.fedoraproject.org",
        "bugzilla.redhat.com",
    }
)

DEFAULT_STOPWORDS = frozenset(
    """a about above after again against all am an and any are as at be because
    been before being below between both but by can did do does doing down
    during each few for from further had has have having he her here hers
    herself him himself his how i if in into is it its itself just me more
    most my myself no nor not now of off on once only or other our ours
    ourselves out over own same she should so some such than that the their
    theirs them themselves then there these they this those through to too
    under until up very was we were what when where which while who whom why
    will with you your yours yourself yourselves""".split()
)

_TOKEN_RE = re.compile(r"[a-zA-Z][a-z]+")
_NAME_DELIMS = re.compile(r"[.\-_:/]+")
_ALNUM_RUNS = re.compile(r"[a-zA-Z]+|[0-9]+")
_CAMEL_RE = re.compile(r"[A-Z]+(?![a-z])|[A-Z][a-z]*|[a-z]+|[0-9]+")


@dataclass
class EnhanceConfig:
    domain_allowlist: frozenset[str] = DEFAULT_DOMAIN_ALLOWLIST
    top_word_cut_percent: float = 50.0
    per_reference_cap: int = 15
    stopword_list: frozenset[str] = DEFAULT_STOPWORDS
    description_df_cut: float = 0.30

    def validate(self) -> None:
        if not 0.0 <= self.top_word_cut_percent <= 100.0:
            raise ValueError("top_word_cut_percent must lie in [0, 100]")
        if self.per_reference_cap < 1:
            raise ValueError("per_reference_cap must be >= 1")
        if not 0.0 < self.description_df_cut <= 1.0:
            raise ValueError("description_df_cut must lie in (0, 1]")


def domain_allowed(domain: str, allowlist: frozenset[str]) -> bool:
    return any(domain == entry or domain.endswith("." + entry) for entry in allowlist)


def select_references(report: VulnerabilityReport, cfg: EnhanceConfig) -> list[ReferenceDoc]:
    """Keep references hosted on allowlisted domains, in their original
    order. References without a parseable host are skipped, never fatal."""
    kept = []
    for ref in report.references:
        if not ref.domain:
            log.warning("report %s: skipping reference with unparseable url %r", report.id, ref.url)
            continue
        if domain_allowed(ref.domain, cfg.domain_allowlist):
            kept.append(ref)
    return kept


def clean_text(raw: str) -> list[str]:
    """Tokens are maximal runs of one ASCII letter followed by one or more
    lowercase letters; anything else (digits, punctuation, ALLCAPS tails)
    is discarded. Output is lowercased."""
    return [match.lower() for match in _TOKEN_RE.findall(raw)]


def stem_and_filter(tokens: list[str], cfg: EnhanceConfig) -> list[str]:
    return [porter_stem(tok) for tok in tokens if tok not in cfg.stopword_list]


def top_cut_words(counts: Counter, cut_percent: float) -> set[str]:
    """The top ceil(cut_percent% of distinct words) by corpus count; count
    ties resolve toward the lexicographically larger word."""
    n_cut = math.ceil(cut_percent / 100.0 * len(counts))
    if n_cut <= 0:
        return set()
    ranked = sorted(counts, key=lambda w: (counts[w], w), reverse=True)
    return set(ranked[:n_cut])


def cap_repeats(tokens: list[str], cap: int) -> list[str]:
    """Drop every occurrence of a word repeated more than `cap` times
    within this single reference."""
    local = Counter(tokens)
    return [tok for tok in tokens if local[tok] <= cap]


def prune_reference_tokens(
    ref_token_lists: list[list[str]], cfg: EnhanceConfig
) -> list[list[str]]:
    """Corpus-wide pass over reference tokens only: remove the most frequent
    x% of distinct words everywhere, then cap per-reference repeats at y."""
    counts: Counter = Counter()
    for tokens in ref_token_lists:
        counts.update(tokens)
    removal = top_cut_words(counts, cfg.top_word_cut_percent)
    pruned = []
    for tokens in ref_token_lists:
        survivors = [tok for tok in tokens if tok not in removal]
        pruned.append(cap_repeats(survivors, cfg.per_reference_cap))
    return pruned


def merge_description(desc_tokens: list[str], ref_token_lists: list[list[str]]) -> str:
    parts = list(desc_tokens)
    for tokens in ref_token_lists:
        parts.extend(tokens)
    return " ".join(parts)


def delimiter_split(name: str) -> list[str]:
    """Split on ./-/_/:// and letter-digit boundaries, lowercased."""
    tokens = []
    for segment in _NAME_DELIMS.split(name):
        tokens.extend(run.lower() for run in _ALNUM_RUNS.findall(segment))
    return tokens


def camel_split(name: str) -> list[str]:
    parts = []
    for segment in _NAME_DELIMS.split(name):
        if segment.islower():
            continue  # case boundaries only; digit runs belong to delimiter_split
        runs = _CAMEL_RE.findall(segment)
        if len(runs) > 1:
            parts.extend(run.lower() for run in runs)
    return parts


def build_subword_dictionary(names: list[str]) -> frozenset[str]:
    """Dictionary for greedy sub-word splitting: every delimiter-split token
    across the label universe. Single characters are excluded so the greedy
    matcher cannot shred names letter by letter."""
    words = set()
    for name in names:
        for token in delimiter_split(name):
            if len(token) >= 2:
                words.add(token)
    return frozenset(words)


def greedy_subword_split(token: str, dictionary: frozenset[str]) -> list[str]:
    """Left-to-right longest-match split against the dictionary; the token
    itself never matches, and unmatched character runs are kept whole."""
    pieces: list[str] = []
    pending: list[str] = []
    i, n = 0, len(token)
    while i < n:
        match = None
        for j in range(n, i, -1):
            candidate = token[i:j]
            if candidate != token and candidate in dictionary:
                match = candidate
                break
        if match is None:
            pending.append(token[i])
            i += 1
        else:
            if pending:
                pieces.append("".join(pending))
                pending.clear()
            pieces.append(match)
            i += len(match)
    if pending:
        pieces.append("".join(pending))
    return pieces


def split_label_subwords(label: Label, dictionary: frozenset[str]) -> str:
    """Feature text for a label: the full name first, then delimiter splits,
    camelCase splits, and greedy dictionary splits of still-whole tokens.
    Only splits that actually produced >= 2 pieces are appended."""
    name = label.name
    parts = [name]
    delim_tokens = delimiter_split(name)
    if delim_tokens != [name]:
        parts.extend(delim_tokens)
    camel_tokens = camel_split(name)
    parts.extend(camel_tokens)
    for token in delim_tokens + camel_tokens:
        pieces = greedy_subword_split(token, dictionary)
        if len(pieces) > 1:
            parts.extend(pieces)
    return " ".join(parts)


@dataclass
class Enhancer:
    """Fitted enhancement state. The reference-word removal set and the set
    of overly common description words are computed on the training split
    only; the sub-word dictionary comes from the whole label universe."""

    cfg: EnhanceConfig
    use_references: bool = True
    split_labels: bool = True
    removal_words: frozenset[str] = frozenset()
    common_desc_words: frozenset[str] = frozenset()
    subword_dict: frozenset[str] = frozenset()

    @classmethod
    def fit(
        cls,
        train_reports: list[VulnerabilityReport],
        universe_names: list[str],
        cfg: EnhanceConfig,
        use_references: bool = True,
        split_labels: bool = True,
    ) -> "Enhancer":
        cfg.validate()
        desc_df: Counter = Counter()
        for report in train_reports:
            desc_df.update(set(stem_and_filter(clean_text(report.description), cfg)))
        n_docs = max(len(train_reports), 1)
        common = frozenset(
            word for word, df in desc_df.items() if df / n_docs > cfg.description_df_cut
        )

        removal: frozenset[str] = frozenset()
        if use_references:
            ref_counts: Counter = Counter()
            for report in train_reports:
                for ref in select_references(report, cfg):
                    ref_counts.update(_reference_tokens(ref, cfg))
            removal = frozenset(top_cut_words(ref_counts, cfg.top_word_cut_percent))

        dictionary = build_subword_dictionary(universe_names) if split_labels else frozenset()
        return cls(
            cfg=cfg,
            use_references=use_references,
            split_labels=split_labels,
            removal_words=removal,
            common_desc_words=common,
            subword_dict=dictionary,
        )

    def enhance_report(self, report: VulnerabilityReport) -> str:
        desc_tokens = [
            tok
            for tok in stem_and_filter(clean_text(report.description), self.cfg)
            if tok not in self.common_desc_words
        ]
        if not self.use_references:
            return " ".join(desc_tokens)
        ref_lists = []
        for ref in select_references(report, self.cfg):
            tokens = [t for t in _reference_tokens(ref, self.cfg) if t not in self.removal_words]
            ref_lists.append(cap_repeats(tokens, self.cfg.per_reference_cap))
        return merge_description(desc_tokens, ref_lists)

    def label_feature_text(self, label: Label) -> str:
        if not self.split_labels:
            return label.name
        return split_label_subwords(label, self.subword_dict)

    def to_dict(self) -> dict:
        return {
            "use_references": self.use_references,
            "split_labels": self.split_labels,
            "removal_words": sorted(self.removal_words),
            "common_desc_words": sorted(self.common_desc_words),
            "subword_dict": sorted(self.subword_dict),
            "config": {
                "domain_allowlist": sorted(self.cfg.domain_allowlist),
                "top_word_cut_percent": self.cfg.top_word_cut_percent,
                "per_reference_cap": self.cfg.per_reference_cap,
                "stopword_list": sorted(self.cfg.stopword_list),
                "description_df_cut": self.cfg.description_df_cut,
            },
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "Enhancer":
        raw_cfg = payload["config"]
        cfg = EnhanceConfig(
            domain_allowlist=frozenset(raw_cfg["domain_allowlist"]),
            top_word_cut_percent=raw_cfg["top_word_cut_percent"],
            per_reference_cap=raw_cfg["per_reference_cap"],
            stopword_list=frozenset(raw_cfg["stopword_list"]),
            description_df_cut=raw_cfg["description_df_cut"],
        )
        return cls(
            cfg=cfg,
            use_references=payload["use_references"],
            split_labels=payload["split_labels"],
            removal_words=frozenset(payload["removal_words"]),
            common_desc_words=frozenset(payload["common_desc_words"]),
            subword_dict=frozenset(payload["subword_dict"]),
        )


def _reference_tokens(ref: ReferenceDoc, cfg: EnhanceConfig) -> list[str]:
    raw = " ".join(part for part in (ref.title, ref.text) if part)
    return stem_and_filter(clean_text(raw), cfg)
