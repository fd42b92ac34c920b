"""Attention patterns over packed batches.

Every layer restricts attention to same-sequence pairs (block-diagonal
over the flat buffer). Local layers additionally restrict to a sliding
window |i - j| <= radius of within-sequence offsets; global layers see the
whole sequence. The predicate is symmetric, as befits a bidirectional
encoder.
"""

from __future__ import annotations

import torch

from .config import EncoderConfig, is_global_layer
from .packing import PackedBatch


def window_mask(length: int, radius: int, dtype=torch.bool) -> torch.Tensor:
    idx = torch.arange(length)
    return ((idx.unsqueeze(1) - idx.unsqueeze(0)).abs() <= radius).to(dtype)


def sequence_mask(layer_index: int, cfg: EncoderConfig, length: int) -> torch.Tensor:
    """Allowed-pairs matrix for one sequence at one layer."""
    if is_global_layer(cfg, layer_index):
        return torch.ones(length, length, dtype=torch.bool)
    return window_mask(length, cfg.local_window_radius)


def attention_mask(layer_index: int, cfg: EncoderConfig, batch: PackedBatch) -> torch.Tensor:
    """Full (T, T) allowed-pairs matrix over the flat buffer. Convenience
    for tests and inspection; the forward pass works per sequence."""
    total = batch.total_tokens
    mask = torch.zeros(total, total, dtype=torch.bool)
    for a, b in batch.seq_slices():
        mask[a:b, a:b] = sequence_mask(layer_index, cfg, b - a)
    return mask


def count_scores(layer_index: int, cfg: EncoderConfig, batch: PackedBatch) -> int:
    """Instrumented attention-score count: the number of allowed pairs the
    forward pass evaluates at this layer, counted from the actual masks."""
    return sum(
        int(sequence_mask(layer_index, cfg, b - a).sum()) for a, b in batch.seq_slices()
    )


def count_scores_all_layers(cfg: EncoderConfig, batch: PackedBatch) -> list[int]:
    return [count_scores(i, cfg, batch) for i in range(cfg.layers)]
