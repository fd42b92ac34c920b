"""Unpadded batches: variable-length sequences concatenated into one flat
buffer with cumulative boundary offsets. No compute is spent on padding and
attention never crosses a boundary."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import torch

from ..errors import InputError


@dataclass
class PackedBatch:
    token_ids: torch.Tensor  # int64, shape (total_tokens,)
    cu_seqlens: tuple[int, ...]  # starts at 0, strictly increasing, ends at total
    max_len: int

    def __post_init__(self):
        cs = self.cu_seqlens
        if len(cs) < 2 or cs[0] != 0 or cs[-1] != int(self.token_ids.numel()):
            raise InputError("cu_seqlens must start at 0 and end at len(token_ids)")
        if any(b <= a for a, b in zip(cs, cs[1:])):
            raise InputError("cu_seqlens must be strictly increasing")
        if self.max_len != max(b - a for a, b in zip(cs, cs[1:])):
            raise InputError("max_len must equal the longest sequence")

    @property
    def total_tokens(self) -> int:
        return int(self.token_ids.numel())

    @property
    def n_sequences(self) -> int:
        return len(self.cu_seqlens) - 1

    def seq_slices(self) -> list[tuple[int, int]]:
        return list(zip(self.cu_seqlens, self.cu_seqlens[1:]))

    def seq_lengths(self) -> list[int]:
        return [b - a for a, b in self.seq_slices()]

    def positions(self) -> torch.Tensor:
        """Within-sequence position of every flat token (restarts at 0)."""
        out = torch.empty(self.total_tokens, dtype=torch.int64)
        for a, b in self.seq_slices():
            out[a:b] = torch.arange(b - a, dtype=torch.int64)
        return out


def pack_sequences(sequences: Sequence[Sequence[int]]) -> PackedBatch:
    if not sequences or any(len(s) == 0 for s in sequences):
        raise InputError("pack_sequences needs non-empty sequences")
    flat: list[int] = []
    cu = [0]
    for seq in sequences:
        flat.extend(int(t) for t in seq)
        cu.append(len(flat))
    return PackedBatch(
        token_ids=torch.tensor(flat, dtype=torch.int64),
        cu_seqlens=tuple(cu),
        max_len=max(len(s) for s in sequences),
    )


def first_fit(sequences: Sequence[Sequence[int]], capacity: int) -> tuple[list[int], list[int]]:
    """Greedy first-fit of sequences into one flat buffer of ``capacity``
    tokens. Returns (taken indices, skipped indices), order preserved."""
    taken: list[int] = []
    skipped: list[int] = []
    used = 0
    for i, seq in enumerate(sequences):
        if used + len(seq) <= capacity:
            taken.append(i)
            used += len(seq)
        else:
            skipped.append(i)
    return taken, skipped
