"""Single-file model bundles: cleaner mode + vocabulary + trained weights.

Framed little-endian binary with magic ``TOXB``, a canonical-JSON header,
length-prefixed vocabulary and weight sections, and a trailing CRC-32
over everything before it. Encoding is canonical, so saving the same
bundle twice yields byte-identical files. The CRC is verified before any
section is parsed, so any corruption is rejected up front. See
docs/format.md for the byte-level layout.
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import cleaning
from .cleaning import CleanMode
from .errors import (
    BadMagicError,
    DimensionMismatchError,
    IntegrityError,
    UnsupportedVersionError,
)
from .models import LinearModel, MlpModel
from .vectorizer import Analyzer, VectorizerConfig, Vocabulary

MAGIC = b"TOXB"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class BundleMetadata:
    dataset_tag: str
    seed: int
    created_at: str
    accuracy: float | None = None


@dataclass
class ModelBundle:
    clean_mode: CleanMode
    vocabulary: Vocabulary
    model: LinearModel | MlpModel
    metadata: BundleMetadata
    rules_version: str = cleaning.RULES_VERSION
    format_version: int = FORMAT_VERSION

    def __post_init__(self):
        if len(self.vocabulary) != self.model.n_features:
            raise DimensionMismatchError(
                f"vocabulary has {len(self.vocabulary)} terms but model expects "
                f"{self.model.n_features} features"
            )

    @property
    def config(self) -> VectorizerConfig:
        return self.vocabulary.config

    @property
    def version_string(self) -> str:
        return f"{self.format_version}/{self.metadata.dataset_tag}/{self.metadata.created_at}"


def _f64_bytes(arr: np.ndarray) -> bytes:
    return np.ascontiguousarray(arr, dtype="<f8").tobytes()


def dumps_bundle(bundle: ModelBundle) -> bytes:
    """Serialize to the framed binary format (deterministic bytes)."""
    vocab = bundle.vocabulary
    config = vocab.config
    header = {
        "clean_mode": int(bundle.clean_mode),
        "rules_version": bundle.rules_version,
        "vectorizer": {
            "analyzer": config.analyzer.value,
            "ngram_min": config.ngram_min,
            "ngram_max": config.ngram_max,
            "min_df": config.min_df,
            "max_df": config.max_df,
            "max_features": config.max_features,
        },
        "n_docs": vocab.n_docs,
        "model_kind": "linear" if isinstance(bundle.model, LinearModel) else "mlp",
        "metadata": {
            "dataset_tag": bundle.metadata.dataset_tag,
            "seed": bundle.metadata.seed,
            "created_at": bundle.metadata.created_at,
            "accuracy": bundle.metadata.accuracy,
        },
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")

    out = bytearray()
    out += MAGIC
    out += struct.pack("<I", bundle.format_version)
    out += struct.pack("<Q", len(header_bytes))
    out += header_bytes

    out += struct.pack("<Q", len(vocab))
    for i, term in enumerate(vocab.terms):
        term_bytes = term.encode("utf-8")
        out += struct.pack("<I", len(term_bytes))
        out += term_bytes
        out += struct.pack("<Qd", int(vocab.df[i]), float(vocab.idf[i]))

    model = bundle.model
    if isinstance(model, LinearModel):
        out += struct.pack("<Q", len(model.weights))
        out += _f64_bytes(model.weights)
        out += struct.pack("<d", model.bias)
    else:
        h, d = model.hidden_weights.shape
        out += struct.pack("<IQ", h, d)
        out += _f64_bytes(model.hidden_weights)
        out += _f64_bytes(model.hidden_bias)
        out += _f64_bytes(model.output_weights)
        out += struct.pack("<d", model.output_bias)

    out += struct.pack("<I", zlib.crc32(bytes(out)))
    return bytes(out)


def save_bundle(bundle: ModelBundle, path) -> None:
    Path(path).write_bytes(dumps_bundle(bundle))


class _Cursor:
    """Bounds-checked reader over the already-CRC-verified payload."""

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise IntegrityError("section runs past end of file")
        piece = self.data[self.pos:self.pos + n]
        self.pos += n
        return piece

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def f64_array(self, count: int) -> np.ndarray:
        raw = self.take(8 * count)
        return np.frombuffer(raw, dtype="<f8").astype(np.float64)


def loads_bundle(data: bytes) -> ModelBundle:
    """Parse bundle bytes; every failure mode raises a distinct error."""
    if len(data) < len(MAGIC) + 4 + 8 + 4:
        raise IntegrityError("file too short to be a model bundle")
    stored_crc = struct.unpack("<I", data[-4:])[0]
    if zlib.crc32(data[:-4]) != stored_crc:
        raise IntegrityError("checksum mismatch: file is corrupt or truncated")
    if data[:4] != MAGIC:
        raise BadMagicError(f"expected magic {MAGIC!r}, found {data[:4]!r}")

    cur = _Cursor(data[4:-4])
    (version,) = cur.unpack("<I")
    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(f"bundle format {version} not supported "
                                      f"(reader handles {FORMAT_VERSION})")
    (header_len,) = cur.unpack("<Q")
    try:
        header = json.loads(cur.take(header_len).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise IntegrityError(f"unreadable header: {exc}") from None

    rules_version = header["rules_version"]
    if rules_version != cleaning.RULES_VERSION:
        raise UnsupportedVersionError(
            f"bundle was cleaned with rule table {rules_version!r}; "
            f"this build ships {cleaning.RULES_VERSION!r}"
        )
    vc = header["vectorizer"]
    config = VectorizerConfig(
        analyzer=Analyzer(vc["analyzer"]),
        ngram_min=vc["ngram_min"],
        ngram_max=vc["ngram_max"],
        min_df=vc["min_df"],
        max_df=vc["max_df"],
        max_features=vc["max_features"],
    )

    (n_terms,) = cur.unpack("<Q")
    terms = []
    df = np.empty(n_terms, dtype=np.int64)
    idf = np.empty(n_terms, dtype=np.float64)
    for i in range(n_terms):
        (term_len,) = cur.unpack("<I")
        terms.append(cur.take(term_len).decode("utf-8"))
        df[i], idf[i] = cur.unpack("<Qd")
    vocab = Vocabulary(config, terms, df, header["n_docs"], idf=idf)

    kind = header["model_kind"]
    if kind == "linear":
        (n_weights,) = cur.unpack("<Q")
        weights = cur.f64_array(n_weights)
        (bias,) = cur.unpack("<d")
        model: LinearModel | MlpModel = LinearModel(weights, bias)
    elif kind == "mlp":
        h, d = cur.unpack("<IQ")
        hidden_weights = cur.f64_array(h * d).reshape(h, d)
        hidden_bias = cur.f64_array(h)
        output_weights = cur.f64_array(h)
        (output_bias,) = cur.unpack("<d")
        model = MlpModel(hidden_weights, hidden_bias, output_weights, output_bias)
    else:
        raise IntegrityError(f"unknown model kind {kind!r}")
    if cur.pos != len(cur.data):
        raise IntegrityError("trailing bytes after model section")

    meta = header["metadata"]
    metadata = BundleMetadata(meta["dataset_tag"], meta["seed"],
                              meta["created_at"], meta["accuracy"])
    return ModelBundle(
        clean_mode=CleanMode(header["clean_mode"]),
        vocabulary=vocab,
        model=model,
        metadata=metadata,
        rules_version=rules_version,
        format_version=version,
    )


def load_bundle(path) -> ModelBundle:
    return loads_bundle(Path(path).read_bytes())
