"""Sectioned key=value config files for anything with more than a few
parameters. Unknown sections or keys are rejected, flags override file
values, and every producing command logs the fully-resolved config next to
its outputs so a run can be reproduced from the log alone."""

from __future__ import annotations

import configparser
from pathlib import Path

from .errors import ConfigError
from .optimsched import OptimizerConfig, Phase, ScheduleConfig
from .wordmask import MaskingCurriculum

ENCODER_KEYS = {
    "layers": int,
    "hidden": int,
    "heads": int,
    "ffn_expansion": float,
    "ffn_round_multiple": int,
    "rope_theta_global": float,
    "rope_theta_local": float,
    "global_layer_interval": int,
    "global_layer_offset": int,
    "local_window_radius": int,
    "max_context": int,
    "vocab_size": int,
    "tie_embeddings": bool,
    "norm_eps": float,
}

STAGE_KEYS = {
    "stage": str,
    "max_len": int,
    "batch_sequences": int,
    "steps": int,
    "checkpoint_every": int,
}

SCHEDULE_KEYS = {
    "phase": str,
    "eta_max": float,
    "eta_min": float,
    "cycles_n": int,
    "damping_gamma": float,
    "warmup_steps": int,
    "warmup_start": float,
}

CURRICULUM_KEYS = {
    "warmup_fraction": float,
    "r_start": float,
    "r_peak": float,
    "r_end": float,
}

OPTIMIZER_KEYS = {
    "beta1": float,
    "beta2": float,
    "weight_decay": float,
    "grad_clip_norm": float,
    "eps": float,
    "rms_threshold": float,
}

SECTION_SCHEMAS = {
    "encoder": ENCODER_KEYS,
    "stage": STAGE_KEYS,
    "schedule": SCHEDULE_KEYS,
    "curriculum": CURRICULUM_KEYS,
    "optimizer": OPTIMIZER_KEYS,
}


def _coerce(raw: str, typ):
    if typ is bool:
        if raw.lower() in ("true", "1", "yes"):
            return True
        if raw.lower() in ("false", "0", "no"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if raw.lower() == "none":
        return None
    return typ(raw)


def read_config(path: str | Path, allowed_sections=None) -> dict[str, dict]:
    """Parse and schema-check a sectioned config file."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keep key case
    read = parser.read(path, encoding="utf-8")
    if not read:
        raise ConfigError(f"config file {path} not found")
    out: dict[str, dict] = {}
    for section in parser.sections():
        if section not in SECTION_SCHEMAS:
            raise ConfigError(f"unknown config section [{section}] in {path}")
        if allowed_sections is not None and section not in allowed_sections:
            raise ConfigError(f"section [{section}] not allowed in this file: {path}")
        schema = SECTION_SCHEMAS[section]
        values = {}
        for key, raw in parser.items(section):
            if key not in schema:
                raise ConfigError(f"unknown key {key!r} in section [{section}] of {path}")
            try:
                values[key] = _coerce(raw, schema[key])
            except ValueError as exc:
                raise ConfigError(f"bad value for {section}.{key}: {exc}") from None
        out[section] = values
    return out


def write_resolved_config(sections: dict[str, dict], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for section in sorted(sections):
            fh.write(f"[{section}]\n")
            for key in sorted(sections[section]):
                fh.write(f"{key} = {sections[section][key]!r}\n")
            fh.write("\n")


def encoder_config_from(values: dict):
    from .encoder.config import EncoderConfig

    return EncoderConfig(**values)


def schedule_config_from(values: dict, total_steps: int) -> ScheduleConfig:
    values = dict(values)
    phase_name = values.pop("phase", "damped_cosine")
    try:
        phase = Phase(phase_name)
    except ValueError:
        raise ConfigError(f"unknown schedule phase {phase_name!r}") from None
    return ScheduleConfig(total_steps=total_steps, phase=phase, **values)


def curriculum_from(values: dict, total_steps: int) -> MaskingCurriculum:
    return MaskingCurriculum(total_steps=total_steps, **values)


def optimizer_config_from(values: dict) -> OptimizerConfig:
    return OptimizerConfig(**values)
