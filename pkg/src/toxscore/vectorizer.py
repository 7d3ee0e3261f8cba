"""TF-IDF feature extraction over character or word n-grams.

Term frequency is the within-document count ratio (count of the term
over the count of all extracted terms, in-vocabulary or not). Inverse
document frequency is smoothed as ``ln(N / (1 + df)) + 1`` so every kept
term gets a positive weight and an empty denominator is impossible.
Final document vectors are L2-normalized.

Four named presets cover the shipped configurations: character 3-5 grams
(unbounded and capped at 50k features) and word 1-2 / 1-5 grams, all
with min_df=3 and max_df=0.5.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator, Sequence

import numpy as np
from scipy import sparse

from .errors import EmptyVocabularyError


class Analyzer(str, Enum):
    CHAR = "char"
    WORD = "word"


@dataclass(frozen=True)
class VectorizerConfig:
    analyzer: Analyzer
    ngram_min: int
    ngram_max: int
    min_df: int = 3
    max_df: float = 0.5
    max_features: int | None = None

    def __post_init__(self):
        if self.ngram_min < 1:
            raise ValueError("ngram_min must be >= 1")
        if self.ngram_max < self.ngram_min:
            raise ValueError("ngram_max must be >= ngram_min")
        if self.min_df < 0:
            raise ValueError("min_df must be non-negative")
        if not 0.0 < self.max_df <= 1.0:
            raise ValueError("max_df must lie in (0, 1]")
        if self.max_features is not None and self.max_features < 1:
            raise ValueError("max_features must be positive when set")


PRESETS: dict[str, VectorizerConfig] = {
    "tfidf0": VectorizerConfig(Analyzer.CHAR, 3, 5),
    "tfidf1": VectorizerConfig(Analyzer.CHAR, 3, 5, max_features=50_000),
    "tfidf2": VectorizerConfig(Analyzer.WORD, 1, 2),
    "tfidf3": VectorizerConfig(Analyzer.WORD, 1, 5),
}


def preset(name: str) -> VectorizerConfig:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


_EMPTY_IDX = np.empty(0, dtype=np.int64)
_EMPTY_VAL = np.empty(0, dtype=np.float64)


@dataclass(frozen=True, eq=False)
class SparseVector:
    """One document's features: strictly increasing indices, L2 norm 1 (or empty)."""

    indices: np.ndarray
    values: np.ndarray

    @staticmethod
    def empty() -> "SparseVector":
        return SparseVector(_EMPTY_IDX, _EMPTY_VAL)

    @property
    def nnz(self) -> int:
        return len(self.indices)

    def entries(self) -> list[tuple[int, float]]:
        return [(int(i), float(v)) for i, v in zip(self.indices, self.values)]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, SparseVector)
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.values, other.values)
        )


class Vocabulary:
    """Fitted term table: term -> (index, df, idf), indices contiguous.

    ``idf`` defaults to the smoothed formula above; an explicit array may
    be supplied (used by deserialization to restore exact floats).
    """

    __slots__ = ("config", "n_docs", "terms", "df", "idf", "_index")

    def __init__(self, config: VectorizerConfig, terms: Sequence[str],
                 df: Sequence[int], n_docs: int, idf: Sequence[float] | None = None):
        if n_docs < 1:
            raise ValueError("n_docs must be positive")
        if len(terms) != len(df):
            raise ValueError("terms and df must have equal length")
        self.config = config
        self.n_docs = int(n_docs)
        self.terms = tuple(terms)
        self.df = np.asarray(df, dtype=np.int64)
        if idf is None:
            self.idf = np.log(self.n_docs / (1.0 + self.df)) + 1.0
        else:
            self.idf = np.asarray(idf, dtype=np.float64)
            if len(self.idf) != len(self.terms):
                raise ValueError("idf and terms must have equal length")
        self._index = {t: i for i, t in enumerate(self.terms)}

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, term: str) -> bool:
        return term in self._index

    def index_of(self, term: str) -> int | None:
        return self._index.get(term)

    def term_stats(self, term: str) -> tuple[int, int, float]:
        i = self._index[term]
        return i, int(self.df[i]), float(self.idf[i])

    def items(self) -> Iterator[tuple[str, tuple[int, int, float]]]:
        for i, t in enumerate(self.terms):
            yield t, (i, int(self.df[i]), float(self.idf[i]))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Vocabulary)
            and self.config == other.config
            and self.n_docs == other.n_docs
            and self.terms == other.terms
            and np.array_equal(self.df, other.df)
            and np.array_equal(self.idf, other.idf)
        )


_WS_RUN = re.compile(r"\s+")
_WORD_TOKEN = re.compile(r"[^\W_]+")


def extract_ngrams(text: str, config: VectorizerConfig) -> Counter:
    """Multiset of n-grams: char windows (spaces included) or joined tokens."""
    counts: Counter = Counter()
    if config.analyzer is Analyzer.CHAR:
        s = _WS_RUN.sub(" ", text).strip()
        length = len(s)
        for n in range(config.ngram_min, config.ngram_max + 1):
            if length < n:
                break
            counts.update(s[i:i + n] for i in range(length - n + 1))
        return counts
    tokens = _WORD_TOKEN.findall(text)
    for n in range(config.ngram_min, config.ngram_max + 1):
        if len(tokens) < n:
            break
        if n == 1:
            counts.update(tokens)
        else:
            counts.update(" ".join(tokens[i:i + n]) for i in range(len(tokens) - n + 1))
    return counts


def _df_chunk(texts: Sequence[str], config: VectorizerConfig) -> Counter:
    df: Counter = Counter()
    for text in texts:
        df.update(set(extract_ngrams(text, config)))
    return df


def _document_frequencies(texts: Sequence[str], config: VectorizerConfig,
                          n_jobs: int) -> Counter:
    if n_jobs <= 1 or len(texts) < 2 * n_jobs:
        return _df_chunk(texts, config)
    # Chunked count with an order-independent merge (plain summation),
    # so the result is identical to the sequential path.
    import multiprocessing

    chunk = (len(texts) + n_jobs - 1) // n_jobs
    pieces = [texts[i:i + chunk] for i in range(0, len(texts), chunk)]
    with multiprocessing.Pool(n_jobs) as pool:
        partials = pool.starmap(_df_chunk, [(piece, config) for piece in pieces])
    merged: Counter = Counter()
    for part in partials:
        merged.update(part)
    return merged


def fit(corpus, config: VectorizerConfig, n_jobs: int = 1) -> Vocabulary:
    """Count document frequencies and build the vocabulary.

    Terms survive iff ``df >= min_df`` and ``df / n_docs <= max_df``. When
    ``max_features`` is set, the highest-df terms win, ties broken
    lexicographically. Kept terms get indices in lexicographic order.
    """
    texts = corpus if isinstance(corpus, (list, tuple)) else corpus.texts()
    if not texts:
        raise EmptyVocabularyError("cannot fit a vocabulary on an empty corpus")
    n_docs = len(texts)
    df_counts = _document_frequencies(texts, config, n_jobs)
    kept = [
        (term, df) for term, df in df_counts.items()
        if df >= config.min_df and df / n_docs <= config.max_df
    ]
    if config.max_features is not None and len(kept) > config.max_features:
        kept.sort(key=lambda td: (-td[1], td[0]))
        del kept[config.max_features:]
    if not kept:
        raise EmptyVocabularyError(
            f"no term passed min_df={config.min_df}, max_df={config.max_df} "
            f"over {n_docs} documents"
        )
    kept.sort(key=lambda td: td[0])
    terms = [t for t, _ in kept]
    df = [d for _, d in kept]
    return Vocabulary(config, terms, df, n_docs)


def _vector_from_counts(counts: Counter, vocab: Vocabulary) -> SparseVector:
    denom = sum(counts.values())
    if denom == 0:
        return SparseVector.empty()
    index = vocab._index
    idf = vocab.idf
    idx_list = []
    val_list = []
    for term, count in counts.items():
        i = index.get(term)
        if i is not None:
            idx_list.append(i)
            val_list.append((count / denom) * idf[i])
    if not idx_list:
        return SparseVector.empty()
    idx = np.asarray(idx_list, dtype=np.int64)
    val = np.asarray(val_list, dtype=np.float64)
    order = np.argsort(idx)
    idx, val = idx[order], val[order]
    val /= np.sqrt(np.dot(val, val))
    return SparseVector(idx, val)


def transform(text: str, vocab: Vocabulary) -> SparseVector:
    """TF-IDF vector for one document against a fitted vocabulary.

    The TF denominator counts every extracted term, including ones the
    vocabulary dropped. A document with no in-vocabulary terms maps to
    the empty vector.
    """
    return _vector_from_counts(extract_ngrams(text, vocab.config), vocab)


def fit_transform(corpus, config: VectorizerConfig,
                  n_jobs: int = 1) -> tuple[Vocabulary, list[SparseVector]]:
    """Fit, then transform every document; identical to separate calls."""
    vocab = fit(corpus, config, n_jobs=n_jobs)
    texts = corpus if isinstance(corpus, (list, tuple)) else corpus.texts()
    return vocab, [transform(text, vocab) for text in texts]


def to_csr(vectors: Iterable[SparseVector], n_features: int) -> sparse.csr_matrix:
    """Stack document vectors into a CSR matrix for training."""
    vectors = list(vectors)
    indptr = np.zeros(len(vectors) + 1, dtype=np.int64)
    for i, v in enumerate(vectors):
        indptr[i + 1] = indptr[i] + v.nnz
    indices = np.concatenate([v.indices for v in vectors]) if vectors else _EMPTY_IDX
    data = np.concatenate([v.values for v in vectors]) if vectors else _EMPTY_VAL
    return sparse.csr_matrix((data, indices, indptr), shape=(len(vectors), n_features))
