"""Two-stage pre-training driver and pseudo-perplexity evaluation.

Stage I trains at a short max length, Stage II at 8x that length with the
same tokens-per-update (within 10%) and its own lower LR ramp. Each step:
draw a ratio-weighted document batch, greedy first-fit pack into the flat
buffer, realize whole-word masks at the curriculum rate for the global
step, forward, masked cross entropy, one optimizer step. Batch
composition depends only on (seed, step), so equal-seed runs produce
identical traces and checkpoints.
"""

from __future__ import annotations

import logging
import math
import random
from dataclasses import dataclass, field

import torch

from .corpus.mixture import MixtureStream
from .encoder.checkpoint import save_checkpoint
from .encoder.model import Checkpoint, forward, mlm_loss
from .encoder.packing import PackedBatch, first_fit, pack_sequences
from .errors import ConfigError, InputError, ZhbertError
from .optimsched import OptimizerConfig, ScheduleConfig, StableAdamW, eta_at
from .seeding import derive_seed
from .tokenizer.bpe import TokenizerModel
from .wordmask import MaskingCurriculum, apply_plan, curriculum_rate, group_words, realize_mask

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class StagePlan:
    stage: str  # "I" or "II"
    max_len: int
    batch_sequences: int
    steps: int
    schedule: ScheduleConfig
    curriculum: MaskingCurriculum
    optimizer: OptimizerConfig = OptimizerConfig()
    checkpoint_every: int = 0

    def __post_init__(self):
        if self.stage not in ("I", "II"):
            raise ConfigError(f"stage must be 'I' or 'II', got {self.stage!r}")
        if self.max_len < 4:
            raise ConfigError("max_len must be >= 4 (room for specials and a word)")
        if self.batch_sequences < 1 or self.steps < 1:
            raise ConfigError("batch_sequences and steps must be >= 1")
        if self.schedule.total_steps != self.steps:
            raise ConfigError("schedule.total_steps must equal plan steps")
        if self.curriculum.total_steps != self.steps:
            raise ConfigError("curriculum.total_steps must equal plan steps")

    @property
    def tokens_per_update(self) -> int:
        return self.batch_sequences * self.max_len


def validate_stage_pair(stage1: StagePlan, stage2: StagePlan) -> None:
    """Tokens-per-update must be roughly constant across the two stages."""
    t1, t2 = stage1.tokens_per_update, stage2.tokens_per_update
    if abs(t2 - t1) > 0.1 * t1:
        raise ConfigError(
            f"stage II tokens_per_update {t2} outside +-10% of stage I's {t1}"
        )


@dataclass
class TraceRow:
    step: int
    loss: float
    eta: float
    mask_rate: float


@dataclass
class StageResult:
    checkpoint: Checkpoint
    trace: list[TraceRow] = field(default_factory=list)


def run_stage(
    plan: StagePlan,
    data: MixtureStream,
    ckpt: Checkpoint,
    tok: TokenizerModel,
    *,
    seed: int,
    out_dir=None,
) -> StageResult:
    cfg = ckpt.config
    if tok.vocab_size != cfg.vocab_size:
        raise ConfigError(
            f"tokenizer vocab {tok.vocab_size} != encoder vocab {cfg.vocab_size}"
        )
    if plan.max_len > cfg.max_context:
        # Context extension: rotary positions carry no learned length limit,
        # so raising max_context is the whole mechanism.
        ckpt.config = cfg = cfg.with_max_context(plan.max_len)

    for p in ckpt.weights.values():
        p.requires_grad_(True)
    opt = StableAdamW(ckpt.weights, plan.optimizer)
    if ckpt.opt_m is not None and ckpt.opt_v is not None:
        opt.m = ckpt.opt_m
        opt.v = ckpt.opt_v
        opt.step_count = ckpt.opt_step

    trace: list[TraceRow] = []
    for step in range(plan.steps):
        inputs_batch, labels_batch = _build_masked_batch(plan, data, tok, seed, step)
        batch = pack_sequences(inputs_batch)
        labels = torch.tensor(
            [l for seq in labels_batch for l in seq], dtype=torch.int64
        )
        result = forward(ckpt, batch)
        loss = mlm_loss(result.logits, labels)
        loss_val = float(loss.detach())
        if not math.isfinite(loss_val):
            if out_dir is not None:
                dump_dir = f"{out_dir}/abort_step{step}"
                save_checkpoint(_detached(ckpt, opt), dump_dir)
                log.error("non-finite loss at step %d; state dumped to %s", step, dump_dir)
            raise ZhbertError(f"non-finite loss {loss_val} at step {step}")

        loss.backward()
        grads = {
            k: (p.grad.detach().clone() if p.grad is not None else torch.zeros_like(p))
            for k, p in ckpt.weights.items()
        }
        for p in ckpt.weights.values():
            p.grad = None
        eta = eta_at(plan.schedule, step)
        opt.step(grads, eta)

        rate = curriculum_rate(plan.curriculum, step)
        trace.append(TraceRow(step=step, loss=loss_val, eta=eta, mask_rate=rate))
        if (
            out_dir is not None
            and plan.checkpoint_every > 0
            and (step + 1) % plan.checkpoint_every == 0
            and step + 1 < plan.steps
        ):
            save_checkpoint(_detached(ckpt, opt), f"{out_dir}/step{step + 1:06d}")

    ckpt.step += plan.steps
    final = _detached(ckpt, opt)
    if out_dir is not None:
        save_checkpoint(final, f"{out_dir}/final")
    return StageResult(checkpoint=final, trace=trace)


def _detached(ckpt: Checkpoint, opt: StableAdamW) -> Checkpoint:
    return Checkpoint(
        config=ckpt.config,
        weights={k: p.detach().clone() for k, p in ckpt.weights.items()},
        step=ckpt.step,
        opt_m={k: t.clone() for k, t in opt.m.items()},
        opt_v={k: t.clone() for k, t in opt.v.items()},
        opt_step=opt.step_count,
    )


def _build_masked_batch(
    plan: StagePlan,
    data: MixtureStream,
    tok: TokenizerModel,
    seed: int,
    step: int,
) -> tuple[list[list[int]], list[list[int]]]:
    capacity = plan.tokens_per_update
    drawn = data.batch(step, capacity)
    sequences: list[list[int]] = []
    sources: list[str] = []
    for name, doc_tokens in drawn:
        body = list(doc_tokens)[: plan.max_len - 2]
        if not body:
            continue
        sequences.append([tok.cls_id] + body + [tok.sep_id])
        sources.append(name)
    if not sequences:
        raise InputError("mixture batch produced no non-empty sequences")

    taken, skipped = first_fit(sequences, capacity)
    if not taken:
        # Even the first sequence exceeds the buffer; keep it alone rather
        # than spin (it is <= max_len + 2 <= capacity for sane plans).
        taken = [0]
        skipped = [i for i in range(len(sequences)) if i != 0]
    for i in reversed(skipped):
        data.push_back(sources[i], [t for t in sequences[i][1:-1]])

    rate = curriculum_rate(plan.curriculum, step)
    inputs_batch: list[list[int]] = []
    labels_batch: list[list[int]] = []
    for j, idx in enumerate(taken):
        seq = sequences[idx]
        grouping = group_words(seq, tok)
        mask_plan = realize_mask(grouping, rate, derive_seed(seed, "mask", step, j))
        inputs, labels = apply_plan(seq, mask_plan, tok, derive_seed(seed, "repl", step, j))
        inputs_batch.append(inputs)
        labels_batch.append(labels)
    return inputs_batch, labels_batch


@dataclass(frozen=True)
class BucketPppl:
    bucket: int
    pppl: float
    positions_sampled: int
    n_sequences: int


@dataclass
class PpplReport:
    entries: list[BucketPppl]
    positions_per_seq: int
    seed: int


def pseudo_perplexity(
    ckpt: Checkpoint,
    texts,
    buckets: list[int],
    positions_per_seq: int,
    seed: int,
    tok: TokenizerModel,
    *,
    forward_token_budget: int = 8192,
) -> PpplReport:
    """exp(mean -log p(x_i | x_without_i)) per length bucket, masking one
    sampled position at a time. Sampling is seeded and recorded."""
    if positions_per_seq < 1:
        raise ConfigError("positions_per_seq must be >= 1")
    for b in buckets:
        if b > ckpt.config.max_context:
            raise ConfigError(f"bucket {b} exceeds max_context {ckpt.config.max_context}")
        if b < 3:
            raise ConfigError(f"bucket {b} too short for [CLS] x [SEP]")

    entries: list[BucketPppl] = []
    for bucket in buckets:
        variants: list[list[int]] = []
        targets: list[tuple[int, int]] = []  # (flat index within variant, true id)
        n_sequences = 0
        for seq_idx, text in enumerate(texts):
            ids = tok.encode(text)
            if not ids:
                continue
            seq = [tok.cls_id] + ids[: bucket - 2] + [tok.sep_id]
            maskable = [
                i for i in range(1, len(seq) - 1) if not tok.is_special_id(seq[i])
            ]
            if not maskable:
                continue
            n_sequences += 1
            rng_positions = sorted(
                _sample_without_replacement(
                    maskable, min(positions_per_seq, len(maskable)),
                    derive_seed(seed, "pppl", bucket, seq_idx),
                )
            )
            for pos in rng_positions:
                variant = list(seq)
                true_id = variant[pos]
                variant[pos] = tok.mask_id
                variants.append(variant)
                targets.append((pos, true_id))
        if not variants:
            log.warning("bucket %d has no scoreable sequences; omitted", bucket)
            continue

        nll_sum = 0.0
        n_positions = 0
        start = 0
        while start < len(variants):
            end = start
            used = 0
            while end < len(variants) and used + len(variants[end]) <= max(
                forward_token_budget, len(variants[end])
            ):
                used += len(variants[end])
                end += 1
            batch = pack_sequences(variants[start:end])
            with torch.no_grad():
                result = forward(ckpt, batch)
            logits = result.logits
            for j in range(start, end):
                pos, true_id = targets[j]
                flat = batch.cu_seqlens[j - start] + pos
                row = logits[flat]
                logp = row[true_id] - torch.logsumexp(row, dim=-1)
                nll_sum += -float(logp)
                n_positions += 1
            start = end

        entries.append(
            BucketPppl(
                bucket=bucket,
                pppl=math.exp(nll_sum / n_positions),
                positions_sampled=n_positions,
                n_sequences=n_sequences,
            )
        )
    return PpplReport(entries=entries, positions_per_seq=positions_per_seq, seed=seed)


def _sample_without_replacement(pool: list[int], n: int, seed: int) -> list[int]:
    return random.Random(seed).sample(pool, n)
