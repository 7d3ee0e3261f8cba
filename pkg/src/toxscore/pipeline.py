"""End-to-end glue: corpus -> cleaned -> features -> model -> bundle -> score.

Every scoring surface (library, REPL, HTTP) funnels through
``score_text`` so identical (bundle, text) inputs produce bit-identical
scores everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timezone

from . import cleaning, models, vectorizer
from .cleaning import CleanMode
from .corpus import LabeledCorpus
from .models import TrainParams, TrainReport
from .persistence import BundleMetadata, ModelBundle


def _now_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def train_bundle(corpus: LabeledCorpus, clean_mode: CleanMode | int, preset_name: str,
                 model_kind: str, params: TrainParams = TrainParams(),
                 limit: int | None = None,
                 created_at: str | None = None) -> tuple[ModelBundle, TrainReport]:
    """Clean, fit features, train, and wrap everything into one bundle."""
    mode = CleanMode.parse(clean_mode)
    subset = corpus.head(limit) if limit else corpus
    cleaned = cleaning.clean_corpus(subset, mode)
    config = vectorizer.preset(preset_name)
    vocab, vectors = vectorizer.fit_transform(cleaned, config)
    X = vectorizer.to_csr(vectors, len(vocab))
    y = cleaned.targets()

    if model_kind == "ridge":
        model, report = models.train_ridge(X, y, params.ridge_lambda)
    elif model_kind == "svr":
        model, report = models.train_svr(X, y, params)
    elif model_kind == "mlp":
        model, report = models.train_mlp(X, y, params)
    else:
        raise ValueError(f"unknown model kind {model_kind!r}; "
                         "choose from ridge, svr, mlp")

    bundle = ModelBundle(
        clean_mode=mode,
        vocabulary=vocab,
        model=model,
        metadata=BundleMetadata(
            dataset_tag=corpus.source_tag,
            seed=params.seed,
            created_at=created_at if created_at is not None else _now_iso(),
        ),
    )
    return bundle, report


@dataclass(frozen=True)
class ScoredText:
    score: float
    cleaned: str


def score_text(bundle: ModelBundle, text: str) -> ScoredText:
    """Clean, vectorize, and score one comment with a loaded bundle."""
    cleaned = cleaning.clean_text(text, bundle.clean_mode)
    vector = vectorizer.transform(cleaned, bundle.vocabulary)
    return ScoredText(models.predict(bundle.model, vector), cleaned)


def bundle_scorer(bundle: ModelBundle):
    """Plain text -> score callable, e.g. for ranking evaluation."""
    def scorer(text: str) -> float:
        return score_text(bundle, text).score
    return scorer
