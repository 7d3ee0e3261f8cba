"""Pairwise ranking accuracy and the dataset x cleaner x features x model grid.

A pair counts as correct when the model scores the more-toxic text
strictly higher than the less-toxic one; an exact score tie earns half
credit and is reported separately, so constant and random scorers both
sit at 0.5. The grid trains one model per combination, evaluates it on
the shared pair set, and never lets one failing cell abort the run.
"""

from __future__ import annotations

import concurrent.futures
import csv
import io
import logging
import time
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from . import cleaning, models, vectorizer
from .cleaning import CleanMode
from .corpus import LabeledCorpus, PairCorpus
from .models import TrainParams

logger = logging.getLogger(__name__)

MODEL_KINDS = ("ridge", "svr", "mlp", "lightgbm")
IMPLEMENTED_MODEL_KINDS = ("ridge", "svr", "mlp")


@dataclass(frozen=True)
class RankingResult:
    accuracy: float
    n_pairs: int
    n_correct: int
    n_ties: int


def _result_from_scores(s_less: np.ndarray, s_more: np.ndarray) -> RankingResult:
    n_correct = int(np.sum(s_more > s_less))
    n_ties = int(np.sum(s_more == s_less))
    n_pairs = len(s_less)
    accuracy = (n_correct + 0.5 * n_ties) / n_pairs
    return RankingResult(accuracy, n_pairs, n_correct, n_ties)


def ranking_accuracy(scorer: Callable[[str], float], pairs: PairCorpus) -> RankingResult:
    """Fraction of pairs ordered consistently with the human judgment."""
    if not len(pairs.pairs):
        raise ValueError("cannot evaluate on an empty pair corpus")
    s_less = np.array([scorer(p.less_toxic) for p in pairs.pairs], dtype=np.float64)
    s_more = np.array([scorer(p.more_toxic) for p in pairs.pairs], dtype=np.float64)
    return _result_from_scores(s_less, s_more)


@dataclass
class GridCell:
    dataset: str
    clean_mode: int
    preset: str
    model_kind: str
    accuracy: float | None = None
    n_ties: int = 0
    train_seconds: float = 0.0
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None and self.accuracy is not None


def _train_for_kind(kind: str, X, y, params: TrainParams):
    if kind == "ridge":
        model, _ = models.train_ridge(X, y, params.ridge_lambda)
        return model
    if kind == "svr":
        model, _ = models.train_svr(X, y, params)
        return model
    if kind == "mlp":
        model, _ = models.train_mlp(X, y, params)
        return model
    raise ValueError(f"unknown model kind {kind!r}")


def _run_group(dataset: str, corpus: LabeledCorpus, clean_mode: CleanMode,
               preset_name: str, model_kinds: Sequence[str], pairs: PairCorpus,
               params: TrainParams, limit: int | None) -> list[GridCell]:
    """All model cells sharing one (dataset, cleaner, featurizer) prep."""
    cells = [GridCell(dataset, int(clean_mode), preset_name, kind) for kind in model_kinds]
    todo = [c for c in cells if c.model_kind in IMPLEMENTED_MODEL_KINDS]
    for cell in cells:
        if cell.model_kind not in IMPLEMENTED_MODEL_KINDS:
            cell.error = "not implemented"
    if not todo:
        return cells

    try:
        subset = corpus.head(limit) if limit else corpus
        cleaned = cleaning.clean_corpus(subset, clean_mode)
        config = vectorizer.preset(preset_name)
        vocab, vectors = vectorizer.fit_transform(cleaned, config)
        X = vectorizer.to_csr(vectors, len(vocab))
        y = cleaned.targets()
        clean = cleaning.cleaner(clean_mode)
        less = vectorizer.to_csr(
            [vectorizer.transform(clean(p.less_toxic), vocab) for p in pairs.pairs],
            len(vocab))
        more = vectorizer.to_csr(
            [vectorizer.transform(clean(p.more_toxic), vocab) for p in pairs.pairs],
            len(vocab))
    except Exception as exc:  # noqa: BLE001 - cell isolation is the contract
        for cell in todo:
            cell.error = f"{type(exc).__name__}: {exc}"
        return cells

    for cell in todo:
        started = time.perf_counter()
        try:
            model = _train_for_kind(cell.model_kind, X, y, params)
            cell.train_seconds = time.perf_counter() - started
            result = _result_from_scores(models.score_matrix(model, less),
                                         models.score_matrix(model, more))
            cell.accuracy = result.accuracy
            cell.n_ties = result.n_ties
        except Exception as exc:  # noqa: BLE001
            cell.train_seconds = time.perf_counter() - started
            cell.error = f"{type(exc).__name__}: {exc}"
            logger.warning("grid cell %s failed: %s", cell, exc)
    return cells


_DATASET_ORDER = {"class": 0, "bias": 1, "multi": 2, "ruddit": 3}


def _cell_sort_key(cell: GridCell):
    return (
        cell.preset,
        MODEL_KINDS.index(cell.model_kind) if cell.model_kind in MODEL_KINDS else 99,
        _DATASET_ORDER.get(cell.dataset, 99),
        cell.dataset,
        cell.clean_mode,
    )


def run_grid(corpora: Mapping[str, LabeledCorpus], pairs: PairCorpus,
             clean_modes: Sequence[CleanMode | int] = (0, 1),
             presets: Sequence[str] = tuple(vectorizer.PRESETS),
             model_kinds: Sequence[str] = IMPLEMENTED_MODEL_KINDS,
             params: TrainParams = TrainParams(),
             limit: int | None = None,
             workers: int = 1) -> list[GridCell]:
    """Train and evaluate every combination; failures stay inside their cell.

    Cells sharing (dataset, cleaner, featurizer) reuse one fitted
    vocabulary. Groups may run on a thread pool; the returned order is
    canonical either way: featurizer, then model, dataset, cleaner.
    """
    modes = [CleanMode.parse(m) for m in clean_modes]
    for name in presets:
        vectorizer.preset(name)
    groups = [
        (dataset, corpus, mode, preset_name)
        for dataset, corpus in corpora.items()
        for mode in modes
        for preset_name in presets
    ]
    cells: list[GridCell] = []
    if workers > 1 and len(groups) > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_run_group, dataset, corpus, mode, preset_name,
                            model_kinds, pairs, params, limit)
                for dataset, corpus, mode, preset_name in groups
            ]
            for future in futures:
                cells.extend(future.result())
    else:
        for dataset, corpus, mode, preset_name in groups:
            cells.extend(_run_group(dataset, corpus, mode, preset_name,
                                    model_kinds, pairs, params, limit))
    cells.sort(key=_cell_sort_key)
    return cells


@dataclass
class GridSummary:
    per_model: dict[str, float]
    per_dataset: dict[str, float]
    per_preset: dict[str, float]
    model_ranking: list[tuple[str, float]]


def _mean_by(cells: Iterable[GridCell], key: Callable[[GridCell], str]) -> dict[str, float]:
    sums: dict[str, list[float]] = {}
    for cell in cells:
        if cell.ok:
            sums.setdefault(key(cell), []).append(cell.accuracy)
    return {name: float(np.mean(values)) for name, values in sums.items()}


def compare_cells(cells: Sequence[GridCell]) -> GridSummary:
    """Mean accuracy per model, dataset, and featurizer, plus a model ranking."""
    per_model = _mean_by(cells, lambda c: c.model_kind)
    per_dataset = _mean_by(cells, lambda c: c.dataset)
    per_preset = _mean_by(cells, lambda c: c.preset)
    ranking = sorted(per_model.items(), key=lambda kv: (-kv[1], kv[0]))
    return GridSummary(per_model, per_dataset, per_preset, ranking)


GRID_CSV_COLUMNS = ("dataset", "clean", "preset", "model", "accuracy", "ties", "train_seconds")


def grid_to_csv(cells: Sequence[GridCell]) -> str:
    """One row per cell in the fixed column order; errors ride in 'accuracy'."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(GRID_CSV_COLUMNS)
    for cell in cells:
        writer.writerow([
            cell.dataset,
            cell.clean_mode,
            cell.preset,
            cell.model_kind,
            f"{cell.accuracy:.6f}" if cell.ok else f"error:{cell.error}",
            cell.n_ties,
            f"{cell.train_seconds:.3f}",
        ])
    return out.getvalue()


def format_grid_table(cells: Sequence[GridCell]) -> str:
    """Aligned text table: featurizer x model rows, dataset x cleaner columns."""
    col_keys = sorted(
        {(c.dataset, c.clean_mode) for c in cells},
        key=lambda dc: (_DATASET_ORDER.get(dc[0], 99), dc[0], dc[1]),
    )
    row_keys = sorted(
        {(c.preset, c.model_kind) for c in cells},
        key=lambda pm: (pm[0], MODEL_KINDS.index(pm[1]) if pm[1] in MODEL_KINDS else 99),
    )
    lookup = {(c.preset, c.model_kind, c.dataset, c.clean_mode): c for c in cells}
    headers = ["preset", "model"] + [f"{d}/clean{m}" for d, m in col_keys]
    rows = []
    for preset_name, kind in row_keys:
        row = [preset_name, kind]
        for dataset, mode in col_keys:
            cell = lookup.get((preset_name, kind, dataset, mode))
            if cell is None:
                row.append("-")
            elif cell.ok:
                row.append(f"{cell.accuracy:.4f}")
            else:
                row.append("n/a" if cell.error == "not implemented" else "ERR")
        rows.append(row)
    widths = [max(len(str(r[i])) for r in [headers] + rows) for i in range(len(headers))]
    lines = ["  ".join(str(v).ljust(w) for v, w in zip(r, widths)).rstrip()
             for r in [headers] + rows]
    return "\n".join(lines)
