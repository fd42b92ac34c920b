"""Rotary position encoding: dimension pairs (2i, 2i+1) rotate by the
position-dependent angle m * theta^(-2i/d). Pair norms are preserved and
query/key dot products depend only on relative position."""

from __future__ import annotations

import torch

from ..errors import ConfigError, InputError


def rope_frequencies(head_dim: int, theta: float, dtype=torch.float64) -> torch.Tensor:
    if head_dim % 2 != 0:
        raise ConfigError(f"head_dim must be even, got {head_dim}")
    i = torch.arange(0, head_dim, 2, dtype=dtype)
    return theta ** (-i / head_dim)


def rope_rotate(vectors: torch.Tensor, positions: torch.Tensor, theta: float) -> torch.Tensor:
    """Rotate per-position vectors of shape (..., n_positions, head_dim)."""
    head_dim = vectors.shape[-1]
    if positions.numel() and int(positions.min()) < 0:
        raise InputError("positions must be non-negative")
    freqs = rope_frequencies(head_dim, theta, dtype=vectors.dtype)
    angles = positions.to(vectors.dtype).unsqueeze(-1) * freqs  # (..., P, d/2)
    cos = torch.cos(angles)
    sin = torch.sin(angles)
    even = vectors[..., 0::2]
    odd = vectors[..., 1::2]
    rotated = torch.stack((even * cos - odd * sin, even * sin + odd * cos), dim=-1)
    return rotated.flatten(-2)
