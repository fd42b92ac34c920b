"""Learning-rate schedules and the RMS-capped AdamW optimizer.

The main-phase schedule is a damped cosine: with progress p = step/S,

    eta(p) = (Peak(p) + Valley(p)) / 2 + (Peak(p) - Valley(p)) / 2 * cos(pi (2N-1) p)
    Peak(p)   = eta_max * (1 - (1 - gamma) p)
    Valley(p) = eta_max / 2 * (1 - p) + eta_min * p

N cycles, damping factor gamma. The cosine argument hits an odd multiple
of pi at p = 1, so eta(0) = eta_max and eta(S) = eta_min hold for every
(N >= 1, gamma in [0, 1]). Warmup and the second-stage schedule are plain
linear ramps. Schedules are pure functions of (config, step), never of
observed loss.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import torch

from .errors import ConfigError, InputError, NonFiniteGradientError


class Phase(Enum):
    WARMUP_RAMP = "warmup_ramp"
    DAMPED_COSINE = "damped_cosine"
    STAGE2_LINEAR = "stage2_linear"


@dataclass(frozen=True)
class ScheduleConfig:
    total_steps: int
    phase: Phase = Phase.DAMPED_COSINE
    eta_max: float = 8e-4
    eta_min: float = 5e-5
    cycles_n: int = 3
    damping_gamma: float = 0.1
    warmup_steps: int = 0
    warmup_start: float = 5e-5

    def __post_init__(self):
        if self.total_steps < 1:
            raise ConfigError("total_steps must be >= 1")
        if not self.eta_min < self.eta_max:
            raise ConfigError("eta_min must be < eta_max")
        if self.cycles_n < 1:
            raise ConfigError("cycles_n must be >= 1")
        if not 0.0 <= self.damping_gamma <= 1.0:
            raise ConfigError("damping_gamma must be in [0, 1]")
        if not 0 <= self.warmup_steps < self.total_steps:
            raise ConfigError("warmup_steps must be in [0, total_steps)")


def _check_step(cfg: ScheduleConfig, step: int) -> None:
    if not 0 <= step <= cfg.total_steps:
        raise InputError(f"step {step} outside [0, {cfg.total_steps}]")


def _check_phase(cfg: ScheduleConfig, expected: Phase) -> None:
    if cfg.phase is not expected:
        raise ConfigError(f"schedule phase is {cfg.phase.value}, expected {expected.value}")


def damped_cosine_eta(cfg: ScheduleConfig, step: int) -> float:
    _check_phase(cfg, Phase.DAMPED_COSINE)
    _check_step(cfg, step)
    p = step / cfg.total_steps
    peak = cfg.eta_max * (1.0 - (1.0 - cfg.damping_gamma) * p)
    valley = 0.5 * cfg.eta_max * (1.0 - p) + cfg.eta_min * p
    mid = 0.5 * (peak + valley)
    amp = 0.5 * (peak - valley)
    return mid + amp * math.cos(math.pi * (2 * cfg.cycles_n - 1) * p)


def _linear(start: float, end: float, step: int, total: int) -> float:
    if step <= 0:
        return start
    if step >= total:
        return end
    return start + (end - start) * (step / total)


def warmup_eta(cfg: ScheduleConfig, step: int) -> float:
    """Linear ramp warmup_start -> eta_max over the config's steps."""
    _check_phase(cfg, Phase.WARMUP_RAMP)
    _check_step(cfg, step)
    return _linear(cfg.warmup_start, cfg.eta_max, step, cfg.total_steps)


def stage2_eta(cfg: ScheduleConfig, step: int) -> float:
    """Linear decay eta_max -> eta_min over the config's steps."""
    _check_phase(cfg, Phase.STAGE2_LINEAR)
    _check_step(cfg, step)
    return _linear(cfg.eta_max, cfg.eta_min, step, cfg.total_steps)


def trapezoid_eta(
    cfg: ScheduleConfig, step: int, *, ramp_steps: int, decay_steps: int
) -> float:
    """Warmup-stable-decay comparison schedule built from linear pieces."""
    _check_step(cfg, step)
    if ramp_steps + decay_steps > cfg.total_steps:
        raise ConfigError("ramp_steps + decay_steps exceed total_steps")
    if step < ramp_steps:
        return _linear(cfg.warmup_start, cfg.eta_max, step, ramp_steps)
    if step <= cfg.total_steps - decay_steps:
        return cfg.eta_max
    return _linear(
        cfg.eta_max, cfg.eta_min, step - (cfg.total_steps - decay_steps), decay_steps
    )


def eta_at(cfg: ScheduleConfig, step: int) -> float:
    """Schedule value with the optional warmup prefix carved out.

    Steps below ``warmup_steps`` ramp warmup_start -> eta_max; the
    configured phase then runs on the remaining steps. Continuous at the
    seam because the main phase starts at eta_max.
    """
    _check_step(cfg, step)
    w = cfg.warmup_steps
    if w > 0 and step < w:
        sub = replace(cfg, phase=Phase.WARMUP_RAMP, total_steps=w, warmup_steps=0)
        return warmup_eta(sub, step)
    main = replace(cfg, total_steps=cfg.total_steps - w, warmup_steps=0)
    if cfg.phase is Phase.DAMPED_COSINE:
        return damped_cosine_eta(main, step - w)
    if cfg.phase is Phase.STAGE2_LINEAR:
        return stage2_eta(main, step - w)
    return warmup_eta(replace(main, phase=Phase.WARMUP_RAMP), step - w)


@dataclass(frozen=True)
class OptimizerConfig:
    beta1: float = 0.9
    beta2: float = 0.95
    weight_decay: float = 0.1
    grad_clip_norm: float | None = 1.0
    eps: float = 1e-8
    rms_threshold: float | None = 1.0

    def __post_init__(self):
        if not 0.0 <= self.beta1 < 1.0 or not 0.0 <= self.beta2 < 1.0:
            raise ConfigError("betas must be in [0, 1)")
        if self.weight_decay < 0.0:
            raise ConfigError("weight_decay must be >= 0")


class StableAdamW:
    """AdamW with global grad-norm clipping and a per-tensor cap on the RMS
    of the normalized update.

    Per tensor, with bias-corrected moments m_hat and v_hat:

        u        = m_hat / sqrt(v_hat + eps)          (eps inside the root)
        eta_eff  = eta / max(1, rms(u) / rms_threshold)
        w       -= eta_eff * m_hat / (sqrt(v_hat) + eps) + eta * weight_decay * w

    With clipping and the RMS cap disabled this is textbook AdamW.
    """

    def __init__(self, params: dict[str, torch.Tensor], cfg: OptimizerConfig = OptimizerConfig()):
        self.cfg = cfg
        self.params = params
        self.m = {k: torch.zeros_like(p) for k, p in params.items()}
        self.v = {k: torch.zeros_like(p) for k, p in params.items()}
        self.step_count = 0

    def step(self, grads: dict[str, torch.Tensor], eta: float) -> None:
        """Apply one update in place. Rejects the whole step (state and
        weights untouched) if any gradient is non-finite."""
        if set(grads) != set(self.params):
            raise InputError("gradient names do not match parameter names")
        for name, g in grads.items():
            if g.shape != self.params[name].shape:
                raise InputError(f"gradient shape mismatch for {name}")
            if not torch.isfinite(g).all():
                raise NonFiniteGradientError(f"non-finite gradient in {name}")

        cfg = self.cfg
        scale = 1.0
        if cfg.grad_clip_norm is not None:
            total_sq = sum(float((g.double() ** 2).sum()) for g in grads.values())
            norm = math.sqrt(total_sq)
            if norm > cfg.grad_clip_norm:
                scale = cfg.grad_clip_norm / norm

        self.step_count += 1
        t = self.step_count
        bc1 = 1.0 - cfg.beta1**t
        bc2 = 1.0 - cfg.beta2**t

        with torch.no_grad():
            for name, p in self.params.items():
                g = grads[name] * scale if scale != 1.0 else grads[name]
                m = self.m[name]
                v = self.v[name]
                m.mul_(cfg.beta1).add_(g, alpha=1.0 - cfg.beta1)
                v.mul_(cfg.beta2).addcmul_(g, g, value=1.0 - cfg.beta2)
                m_hat = m / bc1
                v_hat = v / bc2
                eta_eff = eta
                if cfg.rms_threshold is not None:
                    u = m_hat / torch.sqrt(v_hat + cfg.eps)
                    rms = float(torch.sqrt((u**2).mean()))
                    eta_eff = eta / max(1.0, rms / cfg.rms_threshold)
                update = m_hat / (torch.sqrt(v_hat) + cfg.eps)
                p -= eta_eff * update + eta * cfg.weight_decay * p
