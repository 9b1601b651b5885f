import re

from hypothesis import given
from hypothesis import strategies as st

from vulnlibs.corpus import Label, ReferenceDoc
from vulnlibs.enhance import (
    DEFAULT_DOMAIN_ALLOWLIST,
    EnhanceConfig,
    Enhancer,
    build_subword_dictionary,
    clean_text,
    greedy_subword_split,
    merge_description,
    prune_reference_tokens,
    select_references,
    split_label_subwords,
    stem_and_filter,
    top_cut_words,
)

from conftest import make_report


class TestCleanText:
    def test_mixed_case_and_digits(self):
        # "SSL" fails the lowercase tail, "1.0.2" has no letters
        assert clean_text("OpenSSL 1.0.2 heap overflow") == ["open", "heap", "overflow"]

    def test_empty(self):
        assert clean_text("") == []

    def test_minimal_match(self):
        assert clean_text("aa") == ["aa"]

    def test_single_letters_dropped(self):
        assert clean_text("a b c") == []

    @given(st.text(max_size=200))
    def test_tokens_match_the_extraction_regex(self, raw):
        pattern = re.compile(r"[a-zA-Z][a-z]+")
        for token in clean_text(raw):
            assert pattern.fullmatch(token) or pattern.fullmatch(token[0].upper() + token[1:])
            assert token == token.lower()

    @given(st.text(alphabet=st.characters(min_codepoint=32, max_codepoint=126), max_size=100))
    def test_matched_spans_are_a_subsequence_of_input(self, raw):
        lowered = raw.lower()
        cursor = 0
        for token in clean_text(raw):
            found = lowered.find(token, cursor)
            assert found >= 0
            cursor = found + len(token)


class TestStemAndFilter:
    def test_stopword_removed_then_stemmed(self):
        cfg = EnhanceConfig()
        assert stem_and_filter(["overflows", "the", "buffer"], cfg) == ["overflow", "buffer"]

    def test_empty(self):
        assert stem_and_filter([], EnhanceConfig()) == []

    def test_all_stopwords(self):
        cfg = EnhanceConfig()
        assert stem_and_filter(["the", "a", "of"], cfg) == []


class TestSelectReferences:
    def test_allowlisted_domain_kept(self):
        report = make_report(
            "CVE-1", "2019-01-01",
            references=[ReferenceDoc(url="https://access.redhat.com/errata/RHSA-2019:1")],
        )
        cfg = EnhanceConfig()
        assert len(select_references(report, cfg)) == 1

    def test_subdomain_of_allowlisted_domain_kept(self):
        report = make_report(
            "CVE-1", "2019-01-01", references=[ReferenceDoc(url="https://www.github.com/x/y")]
        )
        assert len(select_references(report, EnhanceConfig())) == 1

    def test_unlisted_domain_dropped(self):
        report = make_report(
            "CVE-1", "2019-01-01", references=[ReferenceDoc(url="https://example.org/a")]
        )
        assert select_references(report, EnhanceConfig()) == []

    def test_empty_allowlist_drops_everything(self):
        report = make_report(
            "CVE-1", "2019-01-01",
            references=[ReferenceDoc(url=f"https://{d}/x") for d in DEFAULT_DOMAIN_ALLOWLIST],
        )
        cfg = EnhanceConfig(domain_allowlist=frozenset())
        assert select_references(report, cfg) == []

    def test_malformed_url_skipped_not_fatal(self):
        report = make_report(
            "CVE-1", "2019-01-01",
            references=[ReferenceDoc(url="not a url"), ReferenceDoc(url="https://debian.org/a")],
        )
        kept = select_references(report, EnhanceConfig())
        assert [r.domain for r in kept] == ["debian.org"]

    def test_order_preserved(self):
        report = make_report(
            "CVE-1", "2019-01-01",
            references=[
                ReferenceDoc(url="https://debian.org/1"),
                ReferenceDoc(url="https://example.org/skip"),
                ReferenceDoc(url="https://ubuntu.com/2"),
            ],
        )
        kept = select_references(report, EnhanceConfig())
        assert [r.url for r in kept] == ["https://debian.org/1", "https://ubuntu.com/2"]


class TestPruneReferenceTokens:
    def test_top_half_removed(self):
        cfg = EnhanceConfig(top_word_cut_percent=50.0, per_reference_cap=1000)
        lists = [["a"] * 10 + ["b"]]
        assert prune_reference_tokens(lists, cfg) == [["b"]]

    def test_per_reference_cap(self):
        cfg = EnhanceConfig(top_word_cut_percent=0.0, per_reference_cap=15)
        lists = [["patch"] * 16, ["patch"] * 3]
        pruned = prune_reference_tokens(lists, cfg)
        assert pruned[0] == []              # over the cap in this reference only
        assert pruned[1] == ["patch"] * 3

    def test_noop_configuration_is_identity(self):
        cfg = EnhanceConfig(top_word_cut_percent=0.0, per_reference_cap=10**9)
        lists = [["x", "y", "x"], ["z"]]
        assert prune_reference_tokens(lists, cfg) == lists

    def test_count_ties_remove_lexicographically_larger_first(self):
        counts = {"aa": 3, "bb": 3, "cc": 1}
        from collections import Counter

        removed = top_cut_words(Counter(counts), 34.0)  # ceil(0.34*3) = 2... one word? ceil(1.02)=2
        assert removed == {"aa", "bb"} or removed == {"bb", "aa"}
        removed_one = top_cut_words(Counter(counts), 33.0)  # ceil(0.99) = 1
        assert removed_one == {"bb"}


class TestMergeDescription:
    def test_description_then_references(self):
        assert merge_description(["poppler", "overflow"], [["evince"]]) == "poppler overflow evince"

    def test_no_references(self):
        assert merge_description(["poppler", "overflow"], []) == "poppler overflow"

    def test_empty_description(self):
        assert merge_description([], [["evince"]]) == "evince"


class TestSubwordSplitting:
    def test_delimiter_split(self):
        label = Label.from_id("org.apache.tika")
        dictionary = build_subword_dictionary(["org.apache.tika"])
        assert split_label_subwords(label, dictionary) == "org.apache.tika org apache tika"

    def test_dictionary_split_of_fused_name(self):
        label = Label.from_id("pyopenssl")
        dictionary = frozenset({"py", "openssl"})
        text = split_label_subwords(label, dictionary)
        assert text.split()[0] == "pyopenssl"
        assert "py openssl" in text

    def test_fused_name_inside_delimited_name(self):
        label = Label.from_id("org.springframework")
        dictionary = frozenset({"org", "spring", "framework"})
        text = split_label_subwords(label, dictionary)
        assert "spring framework" in text
        assert text.split()[:3] == ["org.springframework", "org", "springframework"]

    def test_own_name_never_matches_itself(self):
        # the whole-token dictionary entry must not suppress the split
        dictionary = frozenset({"pyopenssl", "py", "openssl"})
        assert greedy_subword_split("pyopenssl", dictionary) == ["py", "openssl"]

    def test_unsplittable_remainder_kept_whole(self):
        assert greedy_subword_split("xyzopenssl", frozenset({"openssl"})) == ["xyz", "openssl"]

    def test_digit_boundaries(self):
        label = Label.from_id("log4j")
        text = split_label_subwords(label, frozenset())
        assert text.split() == ["log4j", "log", "4", "j"]

    def test_first_token_is_always_the_original_name(self):
        dictionary = build_subword_dictionary(["a-b", "cd", "e_f"])
        for raw in ("a-b", "cd", "e_f"):
            label = Label.from_id(raw)
            assert split_label_subwords(label, dictionary).split()[0] == label.name

    def test_deterministic_given_same_universe(self):
        universe = ["py-openssl", "pyopenssl", "spring-framework", "springframework"]
        dict_a = build_subword_dictionary(universe)
        dict_b = build_subword_dictionary(list(reversed(universe)))
        for raw in universe:
            label = Label.from_id(raw)
            assert split_label_subwords(label, dict_a) == split_label_subwords(label, dict_b)


class TestEnhancerPipeline:
    def _reports(self):
        return [
            make_report(
                "CVE-1", "2019-01-01",
                description="Heap overflows in poppler rendering code",
                labels={"poppler"},
                references=[
                    ReferenceDoc(
                        url="https://access.redhat.com/errata/1",
                        title="advisory for poppler",
                        text="update for poppler fixes rendering crashes",
                    )
                ],
            ),
            make_report(
                "CVE-2", "2019-01-02",
                description="Injection in webapp layer",
                labels={"webapp"},
                references=[ReferenceDoc(url="https://example.org/ignored", text="zzz")],
            ),
        ]

    def test_deterministic_output(self):
        cfg = EnhanceConfig(top_word_cut_percent=10.0)
        runs = set()
        for _ in range(3):
            enhancer = Enhancer.fit(self._reports(), ["poppler", "webapp"], cfg)
            runs.add(tuple(enhancer.enhance_report(r) for r in self._reports()))
        assert len(runs) == 1

    def test_reference_text_lands_after_description(self):
        # df cut near 1 so the two-report corpus keeps its description words
        cfg = EnhanceConfig(top_word_cut_percent=0.0, description_df_cut=0.99)
        enhancer = Enhancer.fit(self._reports(), ["poppler", "webapp"], cfg)
        text = enhancer.enhance_report(self._reports()[0])
        assert text.startswith("heap overflow poppler render")
        assert "updat" in text

    def test_no_reference_mode_uses_description_only(self):
        cfg = EnhanceConfig()
        enhancer = Enhancer.fit(self._reports(), ["poppler"], cfg, use_references=False)
        text = enhancer.enhance_report(self._reports()[0])
        assert "updat" not in text and "fix" not in text

    def test_common_description_words_dropped(self):
        distinct = ["poppler", "curl", "nginx", "redis", "kafka", "flask", "tomcat", "wget", "lua", "vim"]
        reports = [
            make_report(
                f"CVE-{i}", "2019-01-01", description=f"common filler {distinct[i]}", labels={"x"}
            )
            for i in range(10)
        ]
        cfg = EnhanceConfig(description_df_cut=0.30)
        enhancer = Enhancer.fit(reports, ["x"], cfg)
        text = enhancer.enhance_report(reports[0])
        assert "common" not in text and "filler" not in text
        assert "poppler" in text  # the distinctive token survives

    def test_pruning_never_touches_description_tokens(self):
        # "poppler" dominates the reference corpus and lands in the removal
        # set, but description occurrences must survive
        reports = self._reports()
        cfg = EnhanceConfig(top_word_cut_percent=90.0, description_df_cut=0.99)
        enhancer = Enhancer.fit(reports, ["poppler", "webapp"], cfg)
        assert "poppler" in enhancer.removal_words
        text = enhancer.enhance_report(reports[0])
        assert "poppler" in text.split()

    def test_round_trip_serialization(self):
        cfg = EnhanceConfig()
        enhancer = Enhancer.fit(self._reports(), ["poppler", "webapp"], cfg)
        clone = Enhancer.from_dict(enhancer.to_dict())
        for report in self._reports():
            assert clone.enhance_report(report) == enhancer.enhance_report(report)
        label = Label.from_id("poppler")
        assert clone.label_feature_text(label) == enhancer.label_feature_text(label)
