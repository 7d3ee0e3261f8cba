import re

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from toxscore import cleaning
from toxscore.cleaning import CleanMode, clean0, clean1, clean_corpus, clean_text
from toxscore.corpus import LabeledComment, LabeledCorpus, RawComment, Source

PRINTABLE_ASCII = re.compile(r"[ -~]*\Z")


class TestClean0:
    def test_lowercases_without_touching_short_runs(self):
        assert clean0("FXXxk uuu") == "fxxxk uuu"

    def test_empty_is_fixed_point(self):
        assert clean0("") == ""

    def test_whitespace_and_char_run_collapse(self):
        # runs of >= 4 collapse to 3
        assert clean0("SO   COOOOOOOL") == "so coool"
        assert clean0("aaaa") == "aaa"
        assert clean0("aaa") == "aaa"

    def test_word_run_collapse(self):
        assert clean0("go go go go stop") == "go go stop"
        assert clean0("go go stop") == "go go stop"

    def test_strips_and_collapses_whitespace(self):
        assert clean0("  a \t b\n\nc  ") == "a b c"


class TestClean1:
    def test_url_removal(self):
        assert clean1("see http://a.b/c now") == "see now"
        assert clean1("go to www.example.com please") == "go to please"

    def test_non_ascii_token_removal(self):
        assert clean1("hello 你好 world") == "hello world"

    def test_empty(self):
        assert clean1("") == ""

    def test_ip_and_markup(self):
        assert clean1("from 192.168.0.1 <b>bold</b>") == "from bold"

    def test_wiki_markers(self):
        assert clean1("per [[User:Foo|Foo]] and {{cite}} ~~~~ ok") == "per and ok"
        assert clean1("User talk:Somebody said hi") == "said hi"

    def test_emoji_and_emoticons(self):
        assert clean1("nice 😀 day :) xD") == "nice day"

    def test_punctuation_run_collapse(self):
        assert clean1("what!!! really?!?!") == "what! really?"

    def test_curly_apostrophe_survives(self):
        assert clean1("don’t be rude") == "don't be rude"


# Fragments that exercise every rule family when glued together.
_FRAGMENTS = st.sampled_from([
    "hello", "WORLD", "sooo", "aaaaaa", "go go go go", "http://x.y/z",
    "www.kaggle.com/c", "10.0.0.255", "<div>", "</div>", "[[User:Bob]]",
    "{{template}}", "~~~~", "你好", "naïve", "😀", "🤬", ":)", "xD", "<3",
    "!!!", "?!?!", "don’t", "—", "…", "  ", "\t", "\n", "\x00", "\x1b",
    "a", "I", "İ", "ß", "x" * 30,
])
_FUZZ = st.lists(_FRAGMENTS, min_size=0, max_size=12).map(" ".join)
_ANY_TEXT = st.text(max_size=200)


@pytest.mark.parametrize("clean", [clean0, clean1], ids=["clean0", "clean1"])
class TestCleanProperties:
    @given(text=_FUZZ)
    @settings(max_examples=300, deadline=None)
    def test_idempotent_on_fragment_soup(self, clean, text):
        once = clean(text)
        assert clean(once) == once

    @given(text=_ANY_TEXT)
    @settings(max_examples=300, deadline=None)
    def test_idempotent_and_total_on_arbitrary_text(self, clean, text):
        once = clean(text)
        assert clean(once) == once

    @given(text=_ANY_TEXT)
    @settings(max_examples=200, deadline=None)
    def test_size_bound(self, clean, text):
        # lowercase itself may grow a string ('İ' -> 'i̇'), so the bound
        # is relative to the lowercased length
        assert len(clean(text)) <= len(text.lower()) + 1

    def test_total_on_control_chars_and_lone_surrogate(self, clean):
        clean("".join(chr(c) for c in range(32)))
        clean("bad \ud800 surrogate")


class TestClean1Postconditions:
    @given(text=st.one_of(_FUZZ, _ANY_TEXT))
    @settings(max_examples=300, deadline=None)
    def test_printable_ascii_no_double_spaces(self, text):
        out = clean1(text)
        assert PRINTABLE_ASCII.match(out)
        assert "  " not in out
        assert out == out.strip()


def _corpus() -> LabeledCorpus:
    texts = ["SO   COOL!!!", "", "see http://spam.io", "plain text", "你好 😀"]
    items = [
        LabeledComment(RawComment(f"c{i}", t, Source.CLASS), i / 10)
        for i, t in enumerate(texts)
    ]
    return LabeledCorpus(items, "class")


class TestCleanCorpus:
    @pytest.mark.parametrize("mode", [CleanMode.CLEAN0, CleanMode.CLEAN1])
    def test_count_targets_order_preserved(self, mode):
        before = _corpus()
        after = clean_corpus(before, mode)
        assert len(after) == len(before)
        assert [i.target for i in after] == [i.target for i in before]
        assert [i.comment.id for i in after] == [i.comment.id for i in before]

    def test_applying_twice_equals_once(self):
        once = clean_corpus(_corpus(), CleanMode.CLEAN1)
        twice = clean_corpus(once, CleanMode.CLEAN1)
        assert once.texts() == twice.texts()

    def test_emptied_texts_remain_and_are_counted(self):
        after = clean_corpus(_corpus(), CleanMode.CLEAN1)
        assert after.items[4].comment.text == ""
        assert after.items[4].comment.is_empty
        assert after.meta["emptied_by_cleaning"] == 1

    def test_clean1_output_is_ascii(self):
        after = clean_corpus(_corpus(), CleanMode.CLEAN1)
        for text in after.texts():
            assert all(ord(c) < 128 for c in text)


class TestRuleTable:
    def test_dump_mentions_version_and_both_modes(self):
        dump = cleaning.dump_rules()
        assert cleaning.RULES_VERSION in dump
        assert "[clean0]" in dump and "[clean1]" in dump
        assert "char_run_collapse" in dump

    def test_rules_are_ordered_and_compile(self):
        for mode in (CleanMode.CLEAN0, CleanMode.CLEAN1):
            rules = cleaning.rules_for(mode)
            assert list(rules) == sorted(rules, key=lambda r: r.order)
            for rule in rules:
                re.compile(rule.pattern)

    def test_mode_parsing(self):
        assert CleanMode.parse("1") is CleanMode.CLEAN1
        assert CleanMode.parse(0) is CleanMode.CLEAN0
        assert clean_text("ABC", 0) == "abc"
        with pytest.raises(Exception):
            CleanMode.parse("2")
