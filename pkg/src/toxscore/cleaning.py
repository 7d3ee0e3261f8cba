"""Regex-based comment cleaning templates.

Two modes share one rule engine. Mode 0 is conservative: lowercase,
collapse runs of repeated characters and repeated words, normalize
whitespace. Mode 1 additionally strips web noise (URLs, IPv4 addresses,
markup, wiki/user references), emoji and ASCII emoticons, and tokens
containing non-ASCII characters, so its output is printable ASCII.

Rules are applied in ascending order and the whole pipeline is re-run
until the text stops changing, which makes both modes idempotent even on
nested markup. The rule tables are versioned; persisted models record
RULES_VERSION and refuse to load against a different table.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import IntEnum

from .errors import ToxscoreError

RULES_VERSION = "toxscore-rules/1"

# Pipeline passes are bounded only as a termination guard; real text
# converges in 2-3 passes, deeply nested markup needs one pass per level.
_MAX_PASSES = 1000


class CleanMode(IntEnum):
    CLEAN0 = 0
    CLEAN1 = 1

    @classmethod
    def parse(cls, value: "CleanMode | int | str") -> "CleanMode":
        if isinstance(value, CleanMode):
            return value
        try:
            return cls(int(value))
        except (ValueError, TypeError):
            raise ToxscoreError(f"unknown clean mode: {value!r}") from None


@dataclass(frozen=True)
class CleanRule:
    """One ordered rewrite step: a regex and its replacement template.

    Replacements of the form ``<name>`` are engine builtins (lowercase,
    strip); their pattern field still compiles so the table stays uniform.
    """

    name: str
    pattern: str
    replacement: str
    order: int


_BUILTINS = {
    "<lowercase>": str.lower,
    "<strip>": str.strip,
}

# Shared normalization rules (mode 0 behaviour).
_RULE_LOWERCASE = CleanRule("lowercase", r"(?s).*", "<lowercase>", 0)
_RULE_CHAR_RUN = CleanRule("char_run_collapse", r"(?s)(.)\1{3,}", r"\1\1\1", 60)
_RULE_WORD_RUN = CleanRule("word_run_collapse", r"\b(\w+)(?:\s+\1\b){2,}", r"\1 \1", 61)
_RULE_WHITESPACE = CleanRule("whitespace_collapse", r"\s+", " ", 90)
_RULE_STRIP = CleanRule("strip", r"(?s).*", "<strip>", 91)

CLEAN0_RULES: tuple[CleanRule, ...] = (
    _RULE_LOWERCASE,
    _RULE_CHAR_RUN,
    _RULE_WORD_RUN,
    _RULE_WHITESPACE,
    _RULE_STRIP,
)

CLEAN1_RULES: tuple[CleanRule, ...] = (
    _RULE_LOWERCASE,
    # Typographic punctuation folds to ASCII so contractions survive the
    # non-ASCII token sweep below.
    CleanRule("fold_apostrophes", "[‘’ʼ`´]", "'", 10),
    CleanRule("fold_quotes", "[“”«»„]", '"', 11),
    CleanRule("fold_dashes", "[–—―‐‑]", "-", 12),
    CleanRule("fold_ellipsis", "…", ".", 13),
    CleanRule("markup", r"<[^>]*>", " ", 20),
    CleanRule("url", r"(?:\b[a-z][a-z0-9+.-]*://|(?<!\S)www\.)\S*", " ", 21),
    CleanRule("ipv4", r"\b\d{1,3}(?:\.\d{1,3}){3}\b", " ", 22),
    CleanRule("wiki_markup", r"\[\[[^\[\]]*\]\]|\{\{[^{}]*\}\}|~{3,}", " ", 23),
    CleanRule("wiki_user_ref", r"\b(?:user[_ ]talk|user|talk|wikipedia|wp):\S*", " ", 24),
    CleanRule(
        "emoji",
        "[\U0001f000-\U0001faff☀-➿⬀-⯿︀-️‍⃣]",
        " ",
        30,
    ),
    CleanRule(
        "ascii_emoticon",
        r"(?<!\S)(?:[:;=]'?-?[()\[\]dpo/\\|*]+|<3|\^\^+|x+d+)(?!\S)",
        " ",
        31,
    ),
    # Emoji were deleted in place above; a token still holding non-ASCII
    # at this point is treated as a non-English word and dropped whole.
    CleanRule("non_ascii_token", r"\S*[^\x00-\x7f]\S*", " ", 40),
    _RULE_CHAR_RUN,
    _RULE_WORD_RUN,
    CleanRule("bang_run_collapse", r"([!?])[!?]+", r"\1", 70),
    # Catch-all for control characters and any straggler codepoint.
    CleanRule("ascii_sanitize", r"[^\x20-\x7e]", " ", 80),
    _RULE_WHITESPACE,
    _RULE_STRIP,
)


class _Pipeline:
    def __init__(self, rules: tuple[CleanRule, ...]):
        self.rules = tuple(sorted(rules, key=lambda r: r.order))
        self._steps = []
        for rule in self.rules:
            builtin = _BUILTINS.get(rule.replacement)
            if builtin is not None:
                self._steps.append(builtin)
            else:
                self._steps.append(_RegexStep(rule))

    def __call__(self, text: str) -> str:
        for _ in range(_MAX_PASSES):
            before = text
            for step in self._steps:
                text = step(text)
            if text == before:
                break
        return text


class _RegexStep:
    __slots__ = ("_sub",)

    def __init__(self, rule: CleanRule):
        compiled = re.compile(rule.pattern)
        repl = rule.replacement
        self._sub = lambda s: compiled.sub(repl, s)

    def __call__(self, text: str) -> str:
        return self._sub(text)


_PIPELINES = {
    CleanMode.CLEAN0: _Pipeline(CLEAN0_RULES),
    CleanMode.CLEAN1: _Pipeline(CLEAN1_RULES),
}


def clean0(text: str) -> str:
    """Lowercase, collapse char/word runs, and normalize whitespace."""
    return _PIPELINES[CleanMode.CLEAN0](text)


def clean1(text: str) -> str:
    """clean0 plus web-noise/emoji/non-ASCII removal; output is printable ASCII."""
    return _PIPELINES[CleanMode.CLEAN1](text)


def clean_text(text: str, mode: CleanMode) -> str:
    return _PIPELINES[CleanMode.parse(mode)](text)


def cleaner(mode: CleanMode):
    """Return the cleaning callable for ``mode``."""
    return _PIPELINES[CleanMode.parse(mode)]


def rules_for(mode: CleanMode) -> tuple[CleanRule, ...]:
    return CLEAN0_RULES if CleanMode.parse(mode) is CleanMode.CLEAN0 else CLEAN1_RULES


def dump_rules(mode: CleanMode | None = None) -> str:
    """Render the versioned rule table(s) as inspectable text."""
    modes = [CleanMode.CLEAN0, CleanMode.CLEAN1] if mode is None else [CleanMode.parse(mode)]
    lines = [f"rules-version: {RULES_VERSION}"]
    for m in modes:
        lines.append(f"[clean{int(m)}]")
        for rule in rules_for(m):
            lines.append(f"  {rule.order:3d}  {rule.name:20s}  {rule.pattern!r}  ->  {rule.replacement!r}")
    return "\n".join(lines)


def clean_corpus(corpus, mode: CleanMode):
    """Clean every text in a corpus; targets, labels, and order unchanged.

    Texts that clean down to the empty string stay in the corpus (their
    count is recorded in ``meta["emptied_by_cleaning"]``).
    """
    from .corpus import LabeledComment, LabeledCorpus, RawComment

    pipeline = _PIPELINES[CleanMode.parse(mode)]
    items = []
    emptied = 0
    for item in corpus.items:
        cleaned = pipeline(item.comment.text)
        if cleaned == "" and item.comment.text != "":
            emptied += 1
        comment = RawComment(item.comment.id, cleaned, item.comment.source)
        items.append(LabeledComment(comment, item.target, item.labels))
    meta = dict(corpus.meta)
    meta["emptied_by_cleaning"] = emptied
    return LabeledCorpus(items, corpus.source_tag, meta)
