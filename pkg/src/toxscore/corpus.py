"""Dataset loaders and label statistics.

Four labeled-corpus schemas (six-flag Wikipedia-style, per-annotation
fractions, Reddit offensiveness scores) are parsed into one
representation: a comment plus a scalar toxicity target in [0, 1].
A fifth schema holds worker-judged (less_toxic, more_toxic) text pairs
used for ranking evaluation.

Parsing is strict: a missing column or malformed cell fails fast with
the offending row number. The one exception is the annotation schema,
where annotations lacking a joinable text are skipped and counted.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterator, Sequence

import numpy as np

from .errors import RowParseError, SchemaError, UnsupportedSourceError

LABEL_COLUMNS = ("toxic", "severe_toxic", "obscene", "threat", "insult", "identity_hate")


class Source(str, Enum):
    CLASS = "class"
    BIAS = "bias"
    MULTI = "multi"
    RUDDIT = "ruddit"


@dataclass(frozen=True)
class MultiLabel:
    """Six binary toxicity flags."""

    toxic: int
    severe_toxic: int
    obscene: int
    threat: int
    insult: int
    identity_hate: int

    def as_tuple(self) -> tuple[int, ...]:
        return (self.toxic, self.severe_toxic, self.obscene, self.threat,
                self.insult, self.identity_hate)

    @property
    def tag_count(self) -> int:
        return sum(self.as_tuple())


@dataclass(frozen=True)
class RawComment:
    id: str
    text: str
    source: Source

    @property
    def is_empty(self) -> bool:
        return self.text == ""


@dataclass(frozen=True)
class LabeledComment:
    comment: RawComment
    target: float
    labels: MultiLabel | None = None


@dataclass
class LabeledCorpus:
    items: list[LabeledComment]
    source_tag: str
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self) -> Iterator[LabeledComment]:
        return iter(self.items)

    def texts(self) -> list[str]:
        return [item.comment.text for item in self.items]

    def targets(self) -> np.ndarray:
        return np.array([item.target for item in self.items], dtype=np.float64)

    def head(self, n: int) -> "LabeledCorpus":
        """First ``n`` items (row-limit knob for desk-scale runs)."""
        if n >= len(self.items):
            return self
        return LabeledCorpus(self.items[:n], self.source_tag, dict(self.meta))


@dataclass(frozen=True)
class ComparisonPair:
    worker: str
    less_toxic: str
    more_toxic: str


@dataclass
class PairCorpus:
    pairs: list[ComparisonPair]

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self) -> Iterator[ComparisonPair]:
        return iter(self.pairs)


@dataclass
class StatsReport:
    """Plot-ready label statistics for a six-flag corpus."""

    label_counts: dict[str, int]
    tags_histogram: dict[int, int]
    correlation: list[list[float]]
    degenerate_labels: list[str]
    length_quantiles: dict[str, dict[str, list[float]]]

    def to_json_dict(self) -> dict:
        return {
            "label_counts": self.label_counts,
            "tags_histogram": {str(k): v for k, v in sorted(self.tags_histogram.items())},
            "correlation": self.correlation,
            "length_quantiles": self.length_quantiles,
            "degenerate_labels": self.degenerate_labels,
        }


def _read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file, no header row") from None
        rows = [row for row in reader if row]
    width = len(header)
    for row_no, row in enumerate(rows, start=2):
        if len(row) != width:
            raise RowParseError(f"expected {width} cells, got {len(row)}", row_no)
    return [h.strip() for h in header], rows


def _column_map(path, header: Sequence[str], required: Sequence[str],
                normalize: Callable[[str], str] = lambda s: s) -> dict[str, int]:
    positions = {normalize(name): i for i, name in enumerate(header)}
    mapping = {}
    for column in required:
        if column not in positions:
            raise SchemaError(f"{path}: missing required column {column!r}")
        mapping[column] = positions[column]
    return mapping


def _normalize_header(name: str) -> str:
    return name.strip().lower().replace("-", "_")


def _parse_binary(cell: str, column: str, row: int) -> int:
    cell = cell.strip()
    if cell == "0":
        return 0
    if cell == "1":
        return 1
    raise RowParseError(f"column {column!r} expects 0 or 1, got {cell!r}", row)


def _check_weights(weights: Sequence[float]) -> np.ndarray:
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (6,):
        raise ValueError(f"expected 6 label weights, got shape {w.shape}")
    if (w < 0).any():
        raise ValueError("label weights must be non-negative")
    if w.sum() == 0:
        raise ValueError("label weights must not all be zero")
    return w


def _load_six_label_csv(path, weights: Sequence[float], source: Source) -> LabeledCorpus:
    w = _check_weights(weights)
    w_total = float(w.sum())
    header, rows = _read_csv(path)
    cols = _column_map(path, header, ("id", "comment_text") + LABEL_COLUMNS)
    label_idx = [cols[c] for c in LABEL_COLUMNS]
    items = []
    for row_no, row in enumerate(rows, start=2):
        labels = MultiLabel(*(
            _parse_binary(row[i], LABEL_COLUMNS[k], row_no)
            for k, i in enumerate(label_idx)
        ))
        target = float(np.dot(w, labels.as_tuple())) / w_total
        comment = RawComment(row[cols["id"]], row[cols["comment_text"]], source)
        items.append(LabeledComment(comment, target, labels))
    return LabeledCorpus(items, source.value)


def load_class_dataset(path, weights: Sequence[float] = (1.0,) * 6) -> LabeledCorpus:
    """Six-flag schema; target is the weighted mean of the binary labels."""
    return _load_six_label_csv(path, weights, Source.CLASS)


def load_multi_dataset(path, weights: Sequence[float] = (1.0,) * 6) -> LabeledCorpus:
    """Same layout and target rule as the primary six-flag schema."""
    return _load_six_label_csv(path, weights, Source.MULTI)


_TEXT_COLUMN_CANDIDATES = ("comment_text", "txt", "text")


def load_bias_dataset(path, texts_path=None) -> LabeledCorpus:
    """Per-annotation schema: target is the mean of a comment's annotations.

    Each row carries one rater's toxicity judgment for a comment id. The
    comment text comes either from a text column in the same file or, when
    absent, from ``texts_path`` (a CSV mapping id to text). Annotated ids
    with no joinable text are skipped; the count lands in
    ``corpus.meta["skipped_missing_text"]``.
    """
    header, rows = _read_csv(path)
    positions = {_normalize_header(h): i for i, h in enumerate(header)}
    cols = _column_map(path, header, ("id", "toxic"), _normalize_header)
    text_col = next((positions[c] for c in _TEXT_COLUMN_CANDIDATES if c in positions), None)

    text_by_id: dict[str, str] = {}
    if texts_path is not None:
        t_header, t_rows = _read_csv(texts_path)
        t_positions = {_normalize_header(h): i for i, h in enumerate(t_header)}
        t_cols = _column_map(texts_path, t_header, ("id",), _normalize_header)
        t_text = next((t_positions[c] for c in _TEXT_COLUMN_CANDIDATES if c in t_positions), None)
        if t_text is None:
            raise SchemaError(f"{texts_path}: no text column among {_TEXT_COLUMN_CANDIDATES}")
        for t_row in t_rows:
            text_by_id[t_row[t_cols["id"]]] = t_row[t_text]
    elif text_col is None:
        raise SchemaError(
            f"{path}: no text column among {_TEXT_COLUMN_CANDIDATES} and no texts_path given"
        )

    scores: dict[str, list[float]] = {}
    texts: dict[str, str] = {}
    skipped_ids: set[str] = set()
    for row_no, row in enumerate(rows, start=2):
        cid = row[cols["id"]]
        cell = row[cols["toxic"]].strip()
        try:
            value = float(cell)
        except ValueError:
            raise RowParseError(f"column 'toxic' expects a number, got {cell!r}", row_no) from None
        if text_col is not None:
            texts.setdefault(cid, row[text_col])
        elif cid in text_by_id:
            texts.setdefault(cid, text_by_id[cid])
        elif cid not in texts:
            skipped_ids.add(cid)
            continue
        scores.setdefault(cid, []).append(value)

    items = []
    for cid, values in scores.items():
        target = min(1.0, max(0.0, float(np.mean(values))))
        items.append(LabeledComment(RawComment(cid, texts[cid], Source.BIAS), target))
    return LabeledCorpus(items, Source.BIAS.value, {"skipped_missing_text": len(skipped_ids)})


_RUDDIT_COLUMNS = ("post_id", "comment_id", "txt", "url", "offensiveness_score")


def load_ruddit_dataset(path) -> LabeledCorpus:
    """Offensiveness scores in [-1, 1] mapped affinely onto [0, 1]."""
    header, rows = _read_csv(path)
    cols = _column_map(path, header, _RUDDIT_COLUMNS, _normalize_header)
    items = []
    for row_no, row in enumerate(rows, start=2):
        cell = row[cols["offensiveness_score"]].strip()
        try:
            score = float(cell)
        except ValueError:
            raise RowParseError(
                f"column 'offensiveness_score' expects a number, got {cell!r}", row_no
            ) from None
        if not -1.0 <= score <= 1.0:
            raise RowParseError(f"offensiveness_score {score} outside [-1, 1]", row_no)
        comment = RawComment(row[cols["comment_id"]], row[cols["txt"]], Source.RUDDIT)
        items.append(LabeledComment(comment, (score + 1.0) / 2.0))
    return LabeledCorpus(items, Source.RUDDIT.value)


def load_validation_pairs(path) -> PairCorpus:
    """Worker-judged (less_toxic, more_toxic) text pairs, order preserved."""
    header, rows = _read_csv(path)
    cols = _column_map(path, header, ("worker", "less_toxic", "more_toxic"), _normalize_header)
    pairs = []
    for row_no, row in enumerate(rows, start=2):
        less, more = row[cols["less_toxic"]], row[cols["more_toxic"]]
        if less == "" or more == "":
            raise RowParseError("empty comparison text", row_no)
        pairs.append(ComparisonPair(row[cols["worker"]], less, more))
    return PairCorpus(pairs)


def merge_corpora(corpora: Sequence[LabeledCorpus], dedup: bool = False) -> LabeledCorpus:
    """Concatenate corpora; optionally collapse exact-duplicate texts.

    Duplicates keep the first occurrence's comment and labels; the target
    becomes the mean of all duplicates' targets.
    """
    if not corpora:
        raise ValueError("merge_corpora needs at least one corpus")
    tag = "+".join(dict.fromkeys(c.source_tag for c in corpora))
    merged = [item for c in corpora for item in c.items]
    if not dedup:
        return LabeledCorpus(merged, tag)
    first: dict[str, int] = {}
    grouped: list[tuple[LabeledComment, list[float]]] = []
    for item in merged:
        pos = first.get(item.comment.text)
        if pos is None:
            first[item.comment.text] = len(grouped)
            grouped.append((item, [item.target]))
        else:
            grouped[pos][1].append(item.target)
    items = [
        LabeledComment(keep.comment, float(np.mean(targets)), keep.labels)
        for keep, targets in grouped
    ]
    return LabeledCorpus(items, tag)


_SENTENCE_SPLIT = re.compile(r"[.!?\n]+")
_QUANTILE_POINTS = (0.0, 0.25, 0.5, 0.75, 1.0)


def _sentence_count(text: str) -> int:
    return sum(1 for part in _SENTENCE_SPLIT.split(text) if part.strip())


def _quantiles(values: list[int]) -> list[float]:
    if not values:
        return []
    return [float(q) for q in np.quantile(np.asarray(values, dtype=np.float64), _QUANTILE_POINTS)]


def corpus_stats(corpus: LabeledCorpus) -> StatsReport:
    """Label counts, tag histogram, label correlations, and length spreads.

    Needs a corpus whose items carry the six binary flags. Correlation
    entries involving a constant label column are undefined; they are
    reported as 0.0 and the column is listed in ``degenerate_labels``.
    """
    if not corpus.items:
        raise UnsupportedSourceError("cannot compute stats for an empty corpus")
    if any(item.labels is None for item in corpus.items):
        raise UnsupportedSourceError(
            f"corpus {corpus.source_tag!r} has items without six-flag labels"
        )

    matrix = np.array([item.labels.as_tuple() for item in corpus.items], dtype=np.float64)
    counts = matrix.sum(axis=0).astype(int)
    label_counts = dict(zip(LABEL_COLUMNS, (int(c) for c in counts)))

    tags_histogram: dict[int, int] = {}
    for row_total in matrix.sum(axis=1).astype(int):
        tags_histogram[int(row_total)] = tags_histogram.get(int(row_total), 0) + 1

    centered = matrix - matrix.mean(axis=0)
    std = np.sqrt((centered**2).sum(axis=0))
    degenerate = [LABEL_COLUMNS[i] for i in range(6) if std[i] == 0.0]
    corr = [[0.0] * 6 for _ in range(6)]
    for i in range(6):
        if std[i] == 0.0:
            continue
        corr[i][i] = 1.0
        for j in range(i + 1, 6):
            if std[j] == 0.0:
                continue
            value = float(np.dot(centered[:, i], centered[:, j]) / (std[i] * std[j]))
            value = min(1.0, max(-1.0, value))
            corr[i][j] = value
            corr[j][i] = value

    toxic_mask = matrix.sum(axis=1) > 0
    length_quantiles = {}
    for name, mask in (("clean", ~toxic_mask), ("toxic", toxic_mask)):
        texts = [corpus.items[i].comment.text for i in np.flatnonzero(mask)]
        length_quantiles[name] = {
            "words": _quantiles([len(t.split()) for t in texts]),
            "sentences": _quantiles([_sentence_count(t) for t in texts]),
        }

    return StatsReport(label_counts, tags_histogram, corr, degenerate, length_quantiles)
