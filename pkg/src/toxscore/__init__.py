"""Toxic-comment scoring: loaders, cleaning, TF-IDF, models, evaluation, serving."""

__version__ = "0.1.0"

from .cleaning import CleanMode, clean0, clean1, clean_corpus, clean_text
from .corpus import (
    ComparisonPair,
    LabeledComment,
    LabeledCorpus,
    MultiLabel,
    PairCorpus,
    RawComment,
    Source,
    corpus_stats,
    load_bias_dataset,
    load_class_dataset,
    load_multi_dataset,
    load_ruddit_dataset,
    load_validation_pairs,
    merge_corpora,
)
from .errors import (
    BadMagicError,
    BundleError,
    DimensionMismatchError,
    EmptyVocabularyError,
    IntegrityError,
    RowParseError,
    SchemaError,
    ToxscoreError,
    UnsupportedSourceError,
    UnsupportedVersionError,
)
from .evaluation import (
    GridCell,
    GridSummary,
    RankingResult,
    compare_cells,
    ranking_accuracy,
    run_grid,
)
from .models import (
    LinearModel,
    MlpModel,
    TrainParams,
    TrainReport,
    margin_rank_loss,
    predict,
    train_mlp,
    train_pairwise_ranker,
    train_ridge,
    train_svr,
)
from .persistence import BundleMetadata, ModelBundle, load_bundle, save_bundle
from .pipeline import ScoredText, bundle_scorer, score_text, train_bundle
from .vectorizer import (
    Analyzer,
    PRESETS,
    SparseVector,
    VectorizerConfig,
    Vocabulary,
    extract_ngrams,
    fit,
    fit_transform,
    transform,
)
