from .bpe import (
    MARKER,
    SPECIALS,
    TokenizerModel,
    resolve_target_size,
    train_bpe,
    word_symbols,
)
from .segment import RunSegmenter, is_cjk
from .stats import BudgetReport, CompressionReport, budget_report, compression_stats
from .store import load_tokenizer, save_tokenizer

__all__ = [
    "MARKER",
    "SPECIALS",
    "TokenizerModel",
    "RunSegmenter",
    "BudgetReport",
    "CompressionReport",
    "budget_report",
    "compression_stats",
    "is_cjk",
    "load_tokenizer",
    "resolve_target_size",
    "save_tokenizer",
    "train_bpe",
    "word_symbols",
]
