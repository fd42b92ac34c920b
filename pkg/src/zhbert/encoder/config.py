"""Encoder hyperparameters and the exact parameter-tensor inventory."""

from __future__ import annotations

from dataclasses import dataclass, replace

from ..errors import ConfigError


@dataclass(frozen=True)
class EncoderConfig:
    """Pre-norm encoder: RMSNorm, GeGLU, bias-free linears, rotary positions,
    alternating local/global attention.

    Defaults are the full-scale configuration; tests use small overrides.
    """

    layers: int = 28
    hidden: int = 1024
    heads: int = 16
    ffn_expansion: float = 2.6
    ffn_round_multiple: int = 64
    rope_theta_global: float = 80_000.0
    rope_theta_local: float = 10_000.0
    global_layer_interval: int = 3
    global_layer_offset: int = 0
    local_window_radius: int = 64
    max_context: int = 1024
    vocab_size: int = 0
    tie_embeddings: bool = True
    norm_eps: float = 1e-6

    def __post_init__(self):
        if self.layers < 1:
            raise ConfigError("layers must be >= 1")
        if self.hidden < 1 or self.hidden % self.heads != 0:
            raise ConfigError("hidden must be a positive multiple of heads")
        if self.head_dim % 2 != 0:
            raise ConfigError("head_dim must be even (dimensions rotate in pairs)")
        if self.global_layer_interval < 1:
            raise ConfigError("global_layer_interval must be >= 1")
        if self.local_window_radius < 1:
            raise ConfigError("local_window_radius must be >= 1")
        if self.vocab_size < 0:
            raise ConfigError("vocab_size must be >= 0")
        if self.ffn_round_multiple < 1:
            raise ConfigError("ffn_round_multiple must be >= 1")
        if self.max_context < 1:
            raise ConfigError("max_context must be >= 1")

    @property
    def head_dim(self) -> int:
        return self.hidden // self.heads

    @property
    def ffn_intermediate(self) -> int:
        """GeGLU inner width: expansion * hidden rounded up to the multiple."""
        raw = self.hidden * self.ffn_expansion
        m = self.ffn_round_multiple
        return max(m, int(-(-raw // m)) * m)

    def with_vocab(self, vocab_size: int) -> "EncoderConfig":
        return replace(self, vocab_size=vocab_size)

    def with_max_context(self, max_context: int) -> "EncoderConfig":
        return replace(self, max_context=max_context)


def is_global_layer(cfg: EncoderConfig, layer_index: int) -> bool:
    return (layer_index - cfg.global_layer_offset) % cfg.global_layer_interval == 0


def layer_theta(cfg: EncoderConfig, layer_index: int) -> float:
    return cfg.rope_theta_global if is_global_layer(cfg, layer_index) else cfg.rope_theta_local


def parameter_shapes(cfg: EncoderConfig) -> dict[str, tuple[int, ...]]:
    """Every weight tensor of the model, in checkpoint order."""
    h, inter = cfg.hidden, cfg.ffn_intermediate
    shapes: dict[str, tuple[int, ...]] = {"embedding": (cfg.vocab_size, h)}
    for i in range(cfg.layers):
        p = f"layer{i}."
        shapes[p + "attn_norm"] = (h,)
        shapes[p + "wq"] = (h, h)
        shapes[p + "wk"] = (h, h)
        shapes[p + "wv"] = (h, h)
        shapes[p + "wo"] = (h, h)
        shapes[p + "mlp_norm"] = (h,)
        shapes[p + "w_in"] = (h, 2 * inter)
        shapes[p + "w_out"] = (inter, h)
    shapes["final_norm"] = (h,)
    if not cfg.tie_embeddings:
        shapes["lm_head"] = (cfg.vocab_size, h)
    return shapes


def parameter_count(cfg: EncoderConfig) -> int:
    total = 0
    for shape in parameter_shapes(cfg).values():
        n = 1
        for dim in shape:
            n *= dim
        total += n
    return total
