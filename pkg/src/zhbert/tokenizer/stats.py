"""Compression (chars/token) and parameter-budget reporting."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from ..encoder.config import EncoderConfig, parameter_count
from ..errors import ConfigError, InputError
from .bpe import TokenizerModel

BUCKET_CHARS = {"short_512": 512, "long_8192": 8192}


@dataclass(frozen=True)
class CompressionReport:
    chars_per_token: Fraction
    token_count: int
    char_count: int
    bucket: str

    def __post_init__(self):
        if self.chars_per_token != Fraction(self.char_count, self.token_count):
            raise ConfigError("chars_per_token does not equal char_count/token_count")


@dataclass(frozen=True)
class BudgetReport:
    total_params: int
    embedding_params: int
    embedding_share: float
    tied_embeddings: bool


def bucket_max_chars(bucket: str) -> int:
    try:
        return BUCKET_CHARS[bucket]
    except KeyError:
        raise ConfigError(
            f"unknown bucket {bucket!r}; expected one of {sorted(BUCKET_CHARS)}"
        ) from None


def compression_stats(
    model: TokenizerModel, texts: Sequence[str], bucket: str
) -> CompressionReport:
    """Exact chars/token over the concatenated texts, truncated to the
    bucket's character cap (mirroring how throughput samples are bucketed)."""
    cap = bucket_max_chars(bucket)
    clipped = [t[:cap] for t in texts]
    if not clipped or all(len(t) == 0 for t in clipped):
        raise InputError("compression_stats needs at least one non-empty text")
    chars = sum(len(t) for t in clipped)
    tokens = sum(len(model.encode(t)) for t in clipped)
    return CompressionReport(
        chars_per_token=Fraction(chars, tokens),
        token_count=tokens,
        char_count=chars,
        bucket=bucket,
    )


def budget_report(vocab_size: int, config: EncoderConfig) -> BudgetReport:
    """Embedding vs total parameter budget, by exact tensor enumeration."""
    cfg = config.with_vocab(vocab_size)
    embedding_params = vocab_size * cfg.hidden
    total = parameter_count(cfg)
    share = embedding_params / total if total else 0.0
    return BudgetReport(
        total_params=total,
        embedding_params=embedding_params,
        embedding_share=share,
        tied_embeddings=cfg.tie_embeddings,
    )
