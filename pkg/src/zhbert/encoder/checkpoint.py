"""Checkpoint directory format.

  config.txt    key=value encoder config plus step counters
  manifest.txt  one line per tensor: name dtype shape offset nbytes
  weights.bin   all tensors concatenated, raw little-endian bytes

Optimizer moments, when present, live in the same blob under ``opt.m/``
and ``opt.v/`` name prefixes. Round trips are bit-identical.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import torch

from ..errors import InputError
from .config import EncoderConfig
from .model import Checkpoint

FORMAT_VERSION = "1"

_DTYPES = {"float64": "<f8", "float32": "<f4"}
_TORCH_DTYPES = {"float64": torch.float64, "float32": torch.float32}


def save_checkpoint(ckpt: Checkpoint, out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    named: list[tuple[str, torch.Tensor]] = sorted(ckpt.weights.items())
    if ckpt.opt_m is not None and ckpt.opt_v is not None:
        named += [(f"opt.m/{k}", t) for k, t in sorted(ckpt.opt_m.items())]
        named += [(f"opt.v/{k}", t) for k, t in sorted(ckpt.opt_v.items())]

    manifest_lines: list[str] = []
    offset = 0
    with open(out / "weights.bin", "wb") as blob:
        for name, tensor in named:
            dtype = str(tensor.dtype).removeprefix("torch.")
            if dtype not in _DTYPES:
                raise InputError(f"unsupported tensor dtype {dtype} for {name}")
            arr = tensor.detach().cpu().numpy().astype(_DTYPES[dtype], copy=False)
            data = np.ascontiguousarray(arr).tobytes()
            shape = ",".join(str(s) for s in tensor.shape) or "scalar"
            manifest_lines.append(f"{name} {dtype} {shape} {offset} {len(data)}")
            blob.write(data)
            offset += len(data)

    _write_text(out / "manifest.txt", manifest_lines)

    cfg = ckpt.config
    config_lines = [
        f"format_version={FORMAT_VERSION}",
        f"layers={cfg.layers}",
        f"hidden={cfg.hidden}",
        f"heads={cfg.heads}",
        f"ffn_expansion={cfg.ffn_expansion!r}",
        f"ffn_round_multiple={cfg.ffn_round_multiple}",
        f"rope_theta_global={cfg.rope_theta_global!r}",
        f"rope_theta_local={cfg.rope_theta_local!r}",
        f"global_layer_interval={cfg.global_layer_interval}",
        f"global_layer_offset={cfg.global_layer_offset}",
        f"local_window_radius={cfg.local_window_radius}",
        f"max_context={cfg.max_context}",
        f"vocab_size={cfg.vocab_size}",
        f"tie_embeddings={cfg.tie_embeddings}",
        f"norm_eps={cfg.norm_eps!r}",
        f"step={ckpt.step}",
        f"opt_step={ckpt.opt_step}",
        f"has_opt_state={ckpt.opt_m is not None}",
    ]
    _write_text(out / "config.txt", config_lines)


def load_checkpoint(ckpt_dir: str | Path) -> Checkpoint:
    d = Path(ckpt_dir)
    if not (d / "config.txt").exists():
        raise InputError(f"no checkpoint at {d} (config.txt missing)")
    kv = dict(line.split("=", 1) for line in _read_text(d / "config.txt"))
    cfg = EncoderConfig(
        layers=int(kv["layers"]),
        hidden=int(kv["hidden"]),
        heads=int(kv["heads"]),
        ffn_expansion=float(kv["ffn_expansion"]),
        ffn_round_multiple=int(kv["ffn_round_multiple"]),
        rope_theta_global=float(kv["rope_theta_global"]),
        rope_theta_local=float(kv["rope_theta_local"]),
        global_layer_interval=int(kv["global_layer_interval"]),
        global_layer_offset=int(kv["global_layer_offset"]),
        local_window_radius=int(kv["local_window_radius"]),
        max_context=int(kv["max_context"]),
        vocab_size=int(kv["vocab_size"]),
        tie_embeddings=kv["tie_embeddings"] == "True",
        norm_eps=float(kv["norm_eps"]),
    )

    blob = (d / "weights.bin").read_bytes()
    weights: dict[str, torch.Tensor] = {}
    opt_m: dict[str, torch.Tensor] = {}
    opt_v: dict[str, torch.Tensor] = {}
    for line in _read_text(d / "manifest.txt"):
        name, dtype, shape_s, offset_s, nbytes_s = line.split(" ")
        offset, nbytes = int(offset_s), int(nbytes_s)
        shape = () if shape_s == "scalar" else tuple(int(s) for s in shape_s.split(","))
        arr = np.frombuffer(blob[offset : offset + nbytes], dtype=_DTYPES[dtype])
        tensor = torch.from_numpy(arr.reshape(shape).copy()).to(_TORCH_DTYPES[dtype])
        if name.startswith("opt.m/"):
            opt_m[name.removeprefix("opt.m/")] = tensor
        elif name.startswith("opt.v/"):
            opt_v[name.removeprefix("opt.v/")] = tensor
        else:
            weights[name] = tensor

    has_opt = kv.get("has_opt_state") == "True"
    return Checkpoint(
        config=cfg,
        weights=weights,
        step=int(kv.get("step", "0")),
        opt_m=opt_m if has_opt else None,
        opt_v=opt_v if has_opt else None,
        opt_step=int(kv.get("opt_step", "0")),
    )


def _write_text(path: Path, lines: list[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line)
            fh.write("\n")


def _read_text(path: Path) -> list[str]:
    with open(path, "r", encoding="utf-8", newline="\n") as fh:
        return [line.rstrip("\n") for line in fh if line.strip()]
