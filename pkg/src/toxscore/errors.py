"""Exception types shared across the package."""


class ToxscoreError(Exception):
    """Base class for all package-specific errors."""


class SchemaError(ToxscoreError):
    """A CSV file is missing a required column or has an unusable header."""


class RowParseError(ToxscoreError):
    """A CSV row holds an unparseable cell; carries the offending row number."""

    def __init__(self, message: str, row: int):
        super().__init__(f"row {row}: {message}")
        self.row = row


class UnsupportedSourceError(ToxscoreError):
    """An operation needs per-label annotations the corpus does not carry."""


class EmptyVocabularyError(ToxscoreError):
    """Vocabulary fitting left zero terms after frequency thresholds."""


class DimensionMismatchError(ToxscoreError):
    """Feature vector, vocabulary, and model dimensions disagree."""


class BundleError(ToxscoreError):
    """Base class for model-bundle serialization failures."""


class BadMagicError(BundleError):
    """The file does not start with the bundle magic bytes."""


class UnsupportedVersionError(BundleError):
    """The bundle was written by an incompatible format or rule-table version."""


class IntegrityError(BundleError):
    """Checksum mismatch, truncation, or internally inconsistent sections."""
