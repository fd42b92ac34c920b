"""Whole-word grouping and the dynamic masking-rate curriculum.

Masking never splits a word: token positions are first grouped into
whole-word spans (runs of a word-initial subword plus its continuation
subwords), then whole spans are selected at a step-dependent rate. The
rate rises 15% -> 30% over a warmup prefix and decays 30% -> 15% over the
main phase, both segments linear in the step fraction.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

from .errors import ConfigError, InputError
from .tokenizer.bpe import TokenizerModel

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class WordGrouping:
    """Contiguous (start, end) token-index spans, end inclusive; one span
    per whole word. Special-token positions belong to no span."""

    spans: tuple[tuple[int, int], ...]
    n_tokens: int

    @property
    def maskable_positions(self) -> int:
        return sum(end - start + 1 for start, end in self.spans)


def group_words(token_ids: Sequence[int], model: TokenizerModel) -> WordGrouping:
    """Partition non-special positions into whole-word spans.

    A continuation token with no open span (sequence start, or right after
    a special) cannot attach to anything; it starts its own span (logged).
    """
    spans: list[tuple[int, int]] = []
    start = None
    prev = None
    for i, tid in enumerate(token_ids):
        if model.is_special_id(tid):
            if start is not None:
                spans.append((start, prev))
                start = None
            continue
        if model.is_continuation_id(tid):
            if start is None:
                log.debug("continuation token at position %d starts a word", i)
                start = i
        else:
            if start is not None:
                spans.append((start, prev))
            start = i
        prev = i
    if start is not None:
        spans.append((start, prev))
    return WordGrouping(spans=tuple(spans), n_tokens=len(token_ids))


@dataclass(frozen=True)
class MaskingCurriculum:
    total_steps: int
    warmup_fraction: float = 0.04
    r_start: float = 0.15
    r_peak: float = 0.30
    r_end: float = 0.15

    def __post_init__(self):
        if self.total_steps < 1:
            raise ConfigError("total_steps must be >= 1")
        if not 0.0 < self.warmup_fraction < 1.0:
            raise ConfigError("warmup_fraction must be in (0, 1)")
        if not 0.0 < self.r_start <= self.r_peak <= 1.0:
            raise ConfigError("need 0 < r_start <= r_peak <= 1")
        if not 0.0 < self.r_end <= self.r_peak:
            raise ConfigError("need 0 < r_end <= r_peak")

    @property
    def warmup_end_step(self) -> int:
        return max(1, round(self.warmup_fraction * self.total_steps))


def curriculum_rate(c: MaskingCurriculum, step: int) -> float:
    """Masking rate at a training step; endpoints are hit exactly."""
    if not 0 <= step <= c.total_steps:
        raise InputError(f"step {step} outside [0, {c.total_steps}]")
    w = c.warmup_end_step
    if step <= w:
        if step == 0:
            return c.r_start
        if step == w:
            return c.r_peak
        return c.r_start + (c.r_peak - c.r_start) * (step / w)
    if step == c.total_steps:
        return c.r_end
    return c.r_peak + (c.r_end - c.r_peak) * ((step - w) / (c.total_steps - w))


class Replacement(Enum):
    MASK = "mask"
    RANDOM = "random"
    KEEP = "keep"


@dataclass(frozen=True)
class ReplacementPolicy:
    """Per masked position: probability of [MASK] / random token / kept token."""

    p_mask: float = 0.8
    p_random: float = 0.1
    p_keep: float = 0.1

    def __post_init__(self):
        if min(self.p_mask, self.p_random, self.p_keep) < 0:
            raise ConfigError("replacement probabilities must be >= 0")
        if abs(self.p_mask + self.p_random + self.p_keep - 1.0) > 1e-9:
            raise ConfigError("replacement probabilities must sum to 1")


@dataclass(frozen=True)
class MaskingPlan:
    masked_positions: frozenset[int]
    replacement: dict[int, Replacement] = field(hash=False)
    realized_rate: float = 0.0
    selected_spans: tuple[tuple[int, int], ...] = ()


def realize_mask(
    grouping: WordGrouping,
    rate: float,
    rng_seed: int,
    policy: ReplacementPolicy = ReplacementPolicy(),
) -> MaskingPlan:
    """Select whole words in seeded-random order until the realized rate
    first reaches the target; then draw each position's replacement kind.

    Bit-for-bit deterministic given (grouping, rate, rng_seed, policy).
    """
    if not 0.0 < rate < 1.0:
        raise ConfigError(f"rate must be in (0, 1), got {rate}")
    maskable = grouping.maskable_positions
    if maskable == 0:
        return MaskingPlan(frozenset(), {}, 0.0, ())

    rng = random.Random(rng_seed)
    order = list(range(len(grouping.spans)))
    rng.shuffle(order)

    chosen: list[tuple[int, int]] = []
    covered = 0
    for idx in order:
        start, end = grouping.spans[idx]
        chosen.append((start, end))
        covered += end - start + 1
        if covered / maskable >= rate:
            break

    positions = sorted(p for start, end in chosen for p in range(start, end + 1))
    replacement: dict[int, Replacement] = {}
    for p in positions:
        draw = rng.random()
        if draw < policy.p_mask:
            replacement[p] = Replacement.MASK
        elif draw < policy.p_mask + policy.p_random:
            replacement[p] = Replacement.RANDOM
        else:
            replacement[p] = Replacement.KEEP

    return MaskingPlan(
        masked_positions=frozenset(positions),
        replacement=replacement,
        realized_rate=covered / maskable,
        selected_spans=tuple(sorted(chosen)),
    )


def apply_plan(
    token_ids: Sequence[int],
    plan: MaskingPlan,
    model: TokenizerModel,
    rng_seed: int,
) -> tuple[list[int], list[int]]:
    """Corrupted input ids plus per-position labels (-1 = not masked).

    RANDOM positions draw uniformly over non-special vocab ids with a
    dedicated seeded stream, so the plan itself stays id-agnostic.
    """
    rng = random.Random(rng_seed)
    pool = [i for i in range(model.vocab_size) if not model.is_special_id(i)]
    if not pool:
        raise InputError("vocab has no non-special tokens to draw replacements from")
    inputs = list(token_ids)
    labels = [-1] * len(token_ids)
    for p in sorted(plan.masked_positions):
        labels[p] = inputs[p]
        kind = plan.replacement[p]
        if kind is Replacement.MASK:
            inputs[p] = model.mask_id
        elif kind is Replacement.RANDOM:
            inputs[p] = pool[rng.randrange(len(pool))]
    return inputs, labels
