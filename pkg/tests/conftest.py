"""Shared fixtures: CSV writers and seeded synthetic corpora/pairs."""

from __future__ import annotations

import csv
import random
from pathlib import Path

import pytest

from toxscore.corpus import (
    ComparisonPair,
    LabeledComment,
    LabeledCorpus,
    PairCorpus,
    RawComment,
    Source,
)

CLASS_HEADER = ["id", "comment_text", "toxic", "severe_toxic", "obscene",
                "threat", "insult", "identity_hate"]

_BENIGN_WORDS = (
    "thanks for the article great point well written agree nice helpful "
    "interesting good read kind regards please update source cited clear "
    "friendly respectful discussion topic question answer detail summary"
).split()

_TOXIC_WORDS = (
    "idiot stupid moron trash garbage loser pathetic shut freak dumb "
    "worthless clown disgusting awful hate ugly fool jerk liar creep"
).split()


def write_csv(path: Path, header: list[str], rows: list[list]) -> Path:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        writer.writerows(rows)
    return path


def synthetic_text(rng: random.Random, toxicity: float, length: int = 12) -> str:
    words = []
    for _ in range(length):
        pool = _TOXIC_WORDS if rng.random() < toxicity else _BENIGN_WORDS
        words.append(rng.choice(pool))
    return " ".join(words)


def synthetic_corpus(n: int, seed: int = 0, source: Source = Source.CLASS) -> LabeledCorpus:
    """Comments whose target equals the planted toxic-word rate."""
    rng = random.Random(seed)
    items = []
    for i in range(n):
        toxicity = rng.random() if rng.random() < 0.5 else 0.0
        text = synthetic_text(rng, toxicity)
        items.append(LabeledComment(RawComment(f"s{i}", text, source), toxicity))
    return LabeledCorpus(items, source.value)


def synthetic_pairs(n: int, seed: int = 0, gap: float = 0.3) -> PairCorpus:
    """Pairs whose ground-truth order follows the planted toxicity rates."""
    rng = random.Random(seed)
    pairs = []
    for i in range(n):
        low = rng.uniform(0.0, 1.0 - gap)
        high = low + rng.uniform(gap, 1.0 - low)
        pairs.append(ComparisonPair(
            f"w{i % 7}",
            synthetic_text(rng, low),
            synthetic_text(rng, min(1.0, high)),
        ))
    return PairCorpus(pairs)


def class_rows(n: int, seed: int = 0) -> list[list]:
    """Six-flag CSV rows with texts that echo their labels."""
    rng = random.Random(seed)
    rows = []
    for i in range(n):
        flags = [1 if rng.random() < 0.12 else 0 for _ in range(6)]
        if flags[1:] != [0] * 5:
            flags[0] = 1
        toxicity = 0.8 if flags[0] else 0.0
        rows.append([f"id{i:05d}", synthetic_text(rng, toxicity)] + flags)
    return rows


@pytest.fixture
def class_csv(tmp_path) -> Path:
    return write_csv(tmp_path / "class.csv", CLASS_HEADER, class_rows(100, seed=5))


@pytest.fixture
def pairs_csv(tmp_path) -> Path:
    pairs = synthetic_pairs(40, seed=9)
    rows = [[p.worker, p.less_toxic, p.more_toxic] for p in pairs.pairs]
    return write_csv(tmp_path / "pairs.csv", ["worker", "less_toxic", "more_toxic"], rows)


@pytest.fixture(scope="session")
def fixture_bundle_path(tmp_path_factory) -> Path:
    """A small trained ridge bundle shared by CLI/server/acceptance tests."""
    from toxscore.models import TrainParams
    from toxscore.persistence import save_bundle
    from toxscore.pipeline import train_bundle

    corpus = synthetic_corpus(150, seed=17)
    bundle, _ = train_bundle(
        corpus, 0, "tfidf2", "ridge",
        TrainParams(seed=17), created_at="2024-01-01T00:00:00+00:00",
    )
    path = tmp_path_factory.mktemp("bundle") / "fixture.toxb"
    save_bundle(bundle, path)
    return path
