"""Throughput measurement, attention-cost accounting, and STS metrics.

Wall-clock throughput is reported for humans but never asserted anywhere;
the assertable quantity is the analytic attention-score count, computed
here by direct per-position window summation, independently of the
encoder's own mask-based instrumentation.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass

import torch

from .encoder.config import EncoderConfig, is_global_layer
from .encoder.model import Checkpoint, forward
from .encoder.packing import pack_sequences
from .errors import ConfigError, InputError
from .seeding import derive_seed
from .tokenizer.bpe import TokenizerModel

log = logging.getLogger(__name__)


# -- attention-cost accounting ---------------------------------------------


def local_score_count(length: int, radius: int) -> int:
    """Allowed pairs for one sequence under a sliding window: the window
    saturates at L*(2r+1) minus the truncation at both edges."""
    total = 0
    for i in range(length):
        total += min(length - 1, i + radius) - max(0, i - radius) + 1
    return total


def global_score_count(length: int) -> int:
    return length * length


def analytic_score_counts(cfg: EncoderConfig, seq_lengths: list[int]) -> list[int]:
    """Per-layer allowed-pair counts for a packed batch of these lengths."""
    counts = []
    for layer in range(cfg.layers):
        if is_global_layer(cfg, layer):
            counts.append(sum(global_score_count(n) for n in seq_lengths))
        else:
            counts.append(
                sum(local_score_count(n, cfg.local_window_radius) for n in seq_lengths)
            )
    return counts


# -- throughput -------------------------------------------------------------


@dataclass(frozen=True)
class BenchBucket:
    seq_len: int
    batch_sequences: int

    @classmethod
    def parse(cls, spec: str) -> "BenchBucket":
        try:
            length_s, batch_s = spec.lower().split("x")
            return cls(seq_len=int(length_s), batch_sequences=int(batch_s))
        except ValueError:
            raise ConfigError(f"bucket must look like '512x4', got {spec!r}") from None

    @property
    def label(self) -> str:
        return f"{self.seq_len}x{self.batch_sequences}"


@dataclass
class BenchReport:
    bucket: str
    runs: int
    per_run_tokens_per_second: list[float]
    mean_tokens_per_second: float
    score_counts: list[int]  # analytic, per layer
    layer_kinds: list[str]  # "global" / "local", per layer
    requested_batch: int
    effective_batch: int

    @property
    def batch_reduced(self) -> bool:
        return self.effective_batch < self.requested_batch


def throughput(
    ckpt: Checkpoint,
    bucket: BenchBucket,
    runs: int = 10,
    *,
    seed: int = 0,
    reduced_precision: bool = False,
) -> BenchReport:
    """Time `forward` over repeated runs on a synthetic batch.

    A buffer-allocation failure halves the batch and retries (reported in
    the result) instead of aborting the measurement.
    """
    if runs < 3:
        raise ConfigError("need at least 3 runs for a reported mean")
    cfg = ckpt.config
    if bucket.seq_len > cfg.max_context:
        raise ConfigError(f"bucket length {bucket.seq_len} exceeds max_context")

    work = ckpt
    if reduced_precision:
        work = Checkpoint(
            config=cfg,
            weights={k: t.detach().to(torch.float32) for k, t in ckpt.weights.items()},
            step=ckpt.step,
        )

    gen = torch.Generator().manual_seed(derive_seed(seed, "bench", bucket.label))
    batch_sequences = bucket.batch_sequences
    while True:
        ids = torch.randint(
            0, cfg.vocab_size, (batch_sequences, bucket.seq_len), generator=gen
        )
        batch = pack_sequences([row.tolist() for row in ids])
        try:
            with torch.no_grad():
                forward(work, batch, want_logits=False)  # warmup
            break
        except (MemoryError, RuntimeError) as exc:
            if batch_sequences <= 1:
                raise
            batch_sequences = batch_sequences // 2
            log.warning(
                "allocation failure (%s); retrying with batch %d", exc, batch_sequences
            )

    per_run: list[float] = []
    tokens = batch.total_tokens
    for _ in range(runs):
        t0 = time.perf_counter()
        with torch.no_grad():
            forward(work, batch, want_logits=False)
        per_run.append(tokens / (time.perf_counter() - t0))

    return BenchReport(
        bucket=bucket.label,
        runs=runs,
        per_run_tokens_per_second=per_run,
        mean_tokens_per_second=sum(per_run) / len(per_run),
        score_counts=analytic_score_counts(cfg, batch.seq_lengths()),
        layer_kinds=[
            "global" if is_global_layer(cfg, i) else "local" for i in range(cfg.layers)
        ],
        requested_batch=bucket.batch_sequences,
        effective_batch=batch_sequences,
    )


# -- correlation metrics -----------------------------------------------------


@dataclass(frozen=True)
class CorrelationReport:
    pearson_r: float
    spearman_rho: float
    n_pairs: int

    def __post_init__(self):
        if self.n_pairs < 2:
            raise InputError("need at least 2 pairs")
        if not (-1.0 - 1e-12 <= self.pearson_r <= 1.0 + 1e-12):
            raise InputError(f"pearson_r {self.pearson_r} out of [-1, 1]")
        if not (-1.0 - 1e-12 <= self.spearman_rho <= 1.0 + 1e-12):
            raise InputError(f"spearman_rho {self.spearman_rho} out of [-1, 1]")


def pearson(xs, ys) -> float:
    """Product-moment correlation; centered two-pass computation."""
    if len(xs) != len(ys):
        raise InputError("pearson needs equally long inputs")
    n = len(xs)
    if n < 2:
        raise InputError("pearson needs at least 2 points")
    mx = sum(xs) / n
    my = sum(ys) / n
    dx = [x - mx for x in xs]
    dy = [y - my for y in ys]
    vx = sum(d * d for d in dx)
    vy = sum(d * d for d in dy)
    if vx == 0.0 or vy == 0.0:
        raise InputError("pearson undefined for zero-variance input")
    cov = sum(a * b for a, b in zip(dx, dy))
    return cov / math.sqrt(vx * vy)


def fractional_ranks(values) -> list[float]:
    """1-based ranks; tied values share the average of their rank block."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j + 2) / 2  # ranks are 1-based
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def spearman(xs, ys) -> float:
    """Pearson over fractional ranks."""
    if len(xs) != len(ys):
        raise InputError("spearman needs equally long inputs")
    return pearson(fractional_ranks(xs), fractional_ranks(ys))


# -- STS scoring -------------------------------------------------------------


def embed_text(
    ckpt: Checkpoint, tok: TokenizerModel, text: str, pooling: str = "mean"
) -> torch.Tensor:
    ids = tok.encode(text)
    if not ids:
        raise InputError(f"text produced no tokens: {text!r}")
    seq = [tok.cls_id] + ids[: ckpt.config.max_context - 2] + [tok.sep_id]
    batch = pack_sequences([seq])
    with torch.no_grad():
        hidden = forward(ckpt, batch, want_logits=False).hidden
    if pooling == "cls":
        return hidden[0]
    if pooling == "mean":
        keep = torch.tensor([not tok.is_special_id(t) for t in seq])
        return hidden[keep].mean(dim=0)
    raise ConfigError(f"unknown pooling {pooling!r}; expected 'mean' or 'cls'")


def cosine(a: torch.Tensor, b: torch.Tensor) -> float:
    return float((a @ b) / (torch.linalg.norm(a) * torch.linalg.norm(b)))


def sts_score(
    ckpt: Checkpoint,
    pairs: list[tuple[str, str, float]],
    tok: TokenizerModel,
    pooling: str = "mean",
) -> CorrelationReport:
    """Pearson/Spearman between embedding cosines and gold scores."""
    if len(pairs) < 2:
        raise InputError("sts_score needs at least 2 pairs")
    sims = []
    golds = []
    for text_a, text_b, gold in pairs:
        ea = embed_text(ckpt, tok, text_a, pooling)
        eb = embed_text(ckpt, tok, text_b, pooling)
        sims.append(cosine(ea, eb))
        golds.append(float(gold))
    return CorrelationReport(
        pearson_r=pearson(sims, golds),
        spearman_rho=spearman(sims, golds),
        n_pairs=len(pairs),
    )
