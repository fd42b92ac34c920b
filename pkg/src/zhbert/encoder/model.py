"""The encoder forward pass and MLM loss.

Pre-norm blocks throughout: x + attn(rmsnorm(x)) then x + geglu(rmsnorm(x)),
bias-free linears, rotary positions (global layers use the large base,
local layers the small one), masked-word cross entropy on top. The
reference path is float64 and fully deterministic; reduced precision
exists only for throughput measurement.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import torch

from ..errors import InputError
from .attention import sequence_mask
from .config import EncoderConfig, is_global_layer, layer_theta, parameter_shapes
from .packing import PackedBatch
from .rope import rope_rotate

log = logging.getLogger(__name__)


@dataclass
class Checkpoint:
    config: EncoderConfig
    weights: dict[str, torch.Tensor]
    step: int = 0
    opt_m: dict[str, torch.Tensor] | None = None
    opt_v: dict[str, torch.Tensor] | None = None
    opt_step: int = 0

    def __post_init__(self):
        expected = parameter_shapes(self.config)
        if set(self.weights) != set(expected):
            missing = set(expected) - set(self.weights)
            extra = set(self.weights) - set(expected)
            raise InputError(f"weight names mismatch (missing={missing}, extra={extra})")
        for name, shape in expected.items():
            if tuple(self.weights[name].shape) != shape:
                raise InputError(
                    f"weight {name} has shape {tuple(self.weights[name].shape)}, expected {shape}"
                )


def init_checkpoint(cfg: EncoderConfig, seed: int, init_std: float = 0.02) -> Checkpoint:
    """Fresh weights: seeded normal(0, init_std) everywhere, norm gains 1."""
    gen = torch.Generator().manual_seed(seed & 0x7FFF_FFFF_FFFF_FFFF)
    weights: dict[str, torch.Tensor] = {}
    for name, shape in parameter_shapes(cfg).items():
        if name.endswith("_norm"):
            weights[name] = torch.ones(shape, dtype=torch.float64)
        else:
            weights[name] = (
                torch.randn(shape, generator=gen, dtype=torch.float64) * init_std
            )
    return Checkpoint(config=cfg, weights=weights)


def rmsnorm(x: torch.Tensor, gain: torch.Tensor, eps: float) -> torch.Tensor:
    scale = torch.rsqrt((x * x).mean(dim=-1, keepdim=True) + eps)
    return x * scale * gain


def gelu(x: torch.Tensor) -> torch.Tensor:
    return 0.5 * x * (1.0 + torch.erf(x / math.sqrt(2.0)))


def geglu(x: torch.Tensor, w_in: torch.Tensor, w_out: torch.Tensor) -> torch.Tensor:
    u = x @ w_in
    gate, value = u.chunk(2, dim=-1)
    return (gelu(gate) * value) @ w_out


@dataclass
class ForwardResult:
    hidden: torch.Tensor  # (total_tokens, hidden)
    logits: torch.Tensor  # (total_tokens, vocab)
    score_counts: list[int] = field(default_factory=list)  # per layer, if requested


def forward(
    ckpt: Checkpoint,
    batch: PackedBatch,
    *,
    want_logits: bool = True,
    count_scores: bool = False,
) -> ForwardResult:
    cfg = ckpt.config
    w = ckpt.weights
    ids = batch.token_ids
    if ids.numel() and int(ids.max()) >= cfg.vocab_size:
        raise InputError(f"token id {int(ids.max())} >= vocab_size {cfg.vocab_size}")
    if ids.numel() and int(ids.min()) < 0:
        raise InputError("negative token id")
    if batch.max_len > cfg.max_context:
        raise InputError(
            f"sequence length {batch.max_len} exceeds max_context {cfg.max_context}"
        )

    positions = batch.positions()
    slices = batch.seq_slices()
    d = cfg.head_dim
    inv_sqrt_d = 1.0 / math.sqrt(d)

    x = w["embedding"][ids]
    counts: list[int] = []
    for layer in range(cfg.layers):
        p = f"layer{layer}."
        theta = layer_theta(cfg, layer)

        h = rmsnorm(x, w[p + "attn_norm"], cfg.norm_eps)
        total = h.shape[0]
        q = (h @ w[p + "wq"]).view(total, cfg.heads, d)
        k = (h @ w[p + "wk"]).view(total, cfg.heads, d)
        v = (h @ w[p + "wv"]).view(total, cfg.heads, d)
        q = rope_rotate(q.transpose(0, 1), positions, theta)  # (heads, T, d)
        k = rope_rotate(k.transpose(0, 1), positions, theta)
        v = v.transpose(0, 1)

        attn_out = []
        layer_count = 0
        glob = is_global_layer(cfg, layer)
        for a, b in slices:
            scores = q[:, a:b] @ k[:, a:b].transpose(-2, -1) * inv_sqrt_d
            if glob:
                if count_scores:
                    layer_count += (b - a) * (b - a)
            else:
                mask = sequence_mask(layer, cfg, b - a)
                scores = scores.masked_fill(~mask, float("-inf"))
                if count_scores:
                    layer_count += int(mask.sum())
            probs = torch.softmax(scores, dim=-1)
            attn_out.append(probs @ v[:, a:b])
        o = torch.cat(attn_out, dim=1).transpose(0, 1).reshape(total, cfg.hidden)
        x = x + o @ w[p + "wo"]

        h2 = rmsnorm(x, w[p + "mlp_norm"], cfg.norm_eps)
        x = x + geglu(h2, w[p + "w_in"], w[p + "w_out"])
        if count_scores:
            counts.append(layer_count)

    hidden = rmsnorm(x, w["final_norm"], cfg.norm_eps)
    if want_logits:
        head = w["embedding"] if cfg.tie_embeddings else w["lm_head"]
        logits = hidden @ head.T
    else:
        logits = hidden.new_zeros((hidden.shape[0], 0))
    return ForwardResult(hidden=hidden, logits=logits, score_counts=counts)


def mlm_loss(logits: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    """Mean cross entropy over masked positions (labels >= 0).

    Zero masked positions yields a zero loss (warned): there is nothing to
    predict, not a perfect prediction.
    """
    if labels.shape[0] != logits.shape[0]:
        raise InputError("labels and logits disagree on sequence length")
    masked = labels >= 0
    n = int(masked.sum())
    if n == 0:
        log.warning("mlm_loss called with zero masked positions")
        return logits.new_zeros(())
    sel = logits[masked]
    logp = sel - torch.logsumexp(sel, dim=-1, keepdim=True)
    picked = logp.gather(1, labels[masked].unsqueeze(1)).squeeze(1)
    return -picked.mean()
