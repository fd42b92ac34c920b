from .attention import (
    attention_mask,
    count_scores,
    count_scores_all_layers,
    sequence_mask,
    window_mask,
)
from .checkpoint import load_checkpoint, save_checkpoint
from .config import (
    EncoderConfig,
    is_global_layer,
    layer_theta,
    parameter_count,
    parameter_shapes,
)
from .model import (
    Checkpoint,
    ForwardResult,
    forward,
    gelu,
    geglu,
    init_checkpoint,
    mlm_loss,
    rmsnorm,
)
from .packing import PackedBatch, first_fit, pack_sequences
from .rope import rope_frequencies, rope_rotate

__all__ = [
    "Checkpoint",
    "EncoderConfig",
    "ForwardResult",
    "PackedBatch",
    "attention_mask",
    "count_scores",
    "count_scores_all_layers",
    "first_fit",
    "forward",
    "gelu",
    "geglu",
    "init_checkpoint",
    "is_global_layer",
    "layer_theta",
    "load_checkpoint",
    "mlm_loss",
    "pack_sequences",
    "parameter_count",
    "parameter_shapes",
    "rmsnorm",
    "rope_frequencies",
    "rope_rotate",
    "save_checkpoint",
    "sequence_mask",
    "window_mask",
]
