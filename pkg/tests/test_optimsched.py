import math
import random

import pytest
import torch

from zhbert.errors import ConfigError, InputError, NonFiniteGradientError
from zhbert.optimsched import (
    OptimizerConfig,
    Phase,
    ScheduleConfig,
    StableAdamW,
    damped_cosine_eta,
    eta_at,
    stage2_eta,
    trapezoid_eta,
    warmup_eta,
)


def rand_schedule(rng):
    eta_max = 10 ** rng.uniform(-5, -2)
    eta_min = eta_max * rng.uniform(0.01, 0.9)
    return ScheduleConfig(
        total_steps=rng.randint(1, 100_000),
        phase=Phase.DAMPED_COSINE,
        eta_max=eta_max,
        eta_min=eta_min,
        cycles_n=rng.randint(1, 8),
        damping_gamma=rng.uniform(0.0, 1.0),
    )


class TestDampedCosine:
    def test_endpoints_random_configs(self):
        rng = random.Random(100)
        for _ in range(200):
            cfg = rand_schedule(rng)
            assert damped_cosine_eta(cfg, 0) == pytest.approx(cfg.eta_max, rel=1e-12)
            assert damped_cosine_eta(cfg, cfg.total_steps) == pytest.approx(
                cfg.eta_min, rel=1e-12
            )

    def test_halfway_value(self):
        # Hand evaluation at p = 1/2 with defaults (N=3, gamma=0.1):
        # Peak = 8e-4 * 0.55 = 4.4e-4, Valley = 4e-4/2 + 5e-5/2 = 2.25e-4,
        # cos(2.5 pi) = 0, so eta = (4.4e-4 + 2.25e-4)/2 = 3.325e-4.
        cfg = ScheduleConfig(total_steps=1000, eta_max=8e-4, eta_min=5e-5)
        assert damped_cosine_eta(cfg, 500) == pytest.approx(3.325e-4, rel=1e-12)

    def test_envelope_bounds_dense_grid(self):
        rng = random.Random(4)
        for _ in range(20):
            cfg = rand_schedule(rng)
            total = cfg.total_steps
            for step in range(0, total + 1, max(1, total // 500)):
                p = step / total
                peak = cfg.eta_max * (1 - (1 - cfg.damping_gamma) * p)
                valley = 0.5 * cfg.eta_max * (1 - p) + cfg.eta_min * p
                lo, hi = min(peak, valley), max(peak, valley)
                eta = damped_cosine_eta(cfg, step)
                assert lo - 1e-18 <= eta <= hi + 1e-18

    @pytest.mark.parametrize("n_cycles", [1, 2, 3, 5])
    def test_extrema_count(self, n_cycles):
        # The cosine argument sweeps (2N-1) half cycles, so the schedule has
        # 2N-1 turning points: 2N-2 interior ones plus the terminal landing
        # at p=1, where the cosine hits an odd multiple of pi exactly.
        cfg = ScheduleConfig(
            total_steps=40_000, eta_max=8e-4, eta_min=5e-5, cycles_n=n_cycles
        )
        values = [damped_cosine_eta(cfg, s) for s in range(0, 40_001, 2)]
        diffs = [b - a for a, b in zip(values, values[1:])]
        signs = [d for d in diffs if d != 0.0]
        interior_flips = sum(1 for a, b in zip(signs, signs[1:]) if (a > 0) != (b > 0))
        terminal_extremum = 1 if signs and signs[-1] != 0.0 else 0
        assert interior_flips == 2 * n_cycles - 2
        assert interior_flips + terminal_extremum == 2 * n_cycles - 1

    def test_step_out_of_range(self):
        cfg = ScheduleConfig(total_steps=10)
        with pytest.raises(InputError):
            damped_cosine_eta(cfg, 11)

    def test_wrong_phase_rejected(self):
        cfg = ScheduleConfig(total_steps=10, phase=Phase.WARMUP_RAMP)
        with pytest.raises(ConfigError):
            damped_cosine_eta(cfg, 0)


class TestLinearPhases:
    def test_warmup_endpoints_and_midpoint(self):
        cfg = ScheduleConfig(
            total_steps=100, phase=Phase.WARMUP_RAMP, warmup_start=5e-5, eta_max=8e-4
        )
        assert warmup_eta(cfg, 0) == 5e-5
        assert warmup_eta(cfg, 100) == 8e-4
        assert warmup_eta(cfg, 50) == pytest.approx(4.25e-4, rel=1e-12)

    def test_stage2_endpoints_and_midpoint(self):
        cfg = ScheduleConfig(
            total_steps=200, phase=Phase.STAGE2_LINEAR, eta_max=1e-4, eta_min=5e-5
        )
        assert stage2_eta(cfg, 0) == 1e-4
        assert stage2_eta(cfg, 200) == 5e-5
        assert stage2_eta(cfg, 100) == pytest.approx(7.5e-5, rel=1e-12)

    def test_trapezoid_shape(self):
        cfg = ScheduleConfig(total_steps=100, eta_max=8e-4, eta_min=5e-5, warmup_start=5e-5)
        assert trapezoid_eta(cfg, 0, ramp_steps=10, decay_steps=20) == 5e-5
        assert trapezoid_eta(cfg, 10, ramp_steps=10, decay_steps=20) == 8e-4
        assert trapezoid_eta(cfg, 50, ramp_steps=10, decay_steps=20) == 8e-4
        assert trapezoid_eta(cfg, 100, ramp_steps=10, decay_steps=20) == 5e-5

    def test_composite_warmup_then_cosine(self):
        cfg = ScheduleConfig(total_steps=100, warmup_steps=10, warmup_start=5e-5)
        assert eta_at(cfg, 0) == 5e-5
        assert eta_at(cfg, 10) == cfg.eta_max  # seam hits the cosine start
        assert eta_at(cfg, 100) == pytest.approx(cfg.eta_min, rel=1e-12)
        jumps = [abs(eta_at(cfg, s + 1) - eta_at(cfg, s)) for s in range(100)]
        assert max(jumps) < cfg.eta_max  # no discontinuity spikes


class TestStableAdamW:
    def test_zero_gradients_no_decay_is_noop(self):
        w = torch.tensor([1.0, -2.0, 3.0], dtype=torch.float64)
        opt = StableAdamW({"w": w}, OptimizerConfig(weight_decay=0.0))
        opt.step({"w": torch.zeros_like(w)}, eta=1e-3)
        assert torch.equal(w, torch.tensor([1.0, -2.0, 3.0], dtype=torch.float64))

    def test_matches_textbook_adamw(self):
        # Scalar oracle with clipping and the RMS cap disabled.
        cfg = OptimizerConfig(
            beta1=0.9, beta2=0.95, weight_decay=0.1, grad_clip_norm=None,
            eps=1e-8, rms_threshold=None,
        )
        w = torch.tensor([0.7], dtype=torch.float64)
        opt = StableAdamW({"w": w}, cfg)
        grads = [0.3, -0.5, 0.2, 0.9, -0.1]
        w_ref, m, v = 0.7, 0.0, 0.0
        lr = 2e-3
        for t, g in enumerate(grads, start=1):
            m = cfg.beta1 * m + (1 - cfg.beta1) * g
            v = cfg.beta2 * v + (1 - cfg.beta2) * g * g
            m_hat = m / (1 - cfg.beta1**t)
            v_hat = v / (1 - cfg.beta2**t)
            w_ref = w_ref - lr * (m_hat / (math.sqrt(v_hat) + cfg.eps)) - lr * cfg.weight_decay * w_ref
            opt.step({"w": torch.tensor([g], dtype=torch.float64)}, eta=lr)
        assert float(w[0]) == pytest.approx(w_ref, abs=1e-10)

    def test_clip_scales_moment_input(self):
        # Gradient with norm 10 under clip 1.0 reaches the moments at 1/10.
        g = torch.zeros(4, dtype=torch.float64)
        g[0] = 10.0
        w = torch.zeros(4, dtype=torch.float64)
        opt = StableAdamW({"w": w}, OptimizerConfig())
        opt.step({"w": g}, eta=0.0)
        expected_m = (1 - 0.9) * 1.0  # g scaled to norm 1
        assert float(opt.m["w"][0]) == pytest.approx(expected_m, rel=1e-12)

    def test_scalar_update_bounded_by_eta(self):
        w = torch.tensor([5.0], dtype=torch.float64)
        opt = StableAdamW(
            {"w": w}, OptimizerConfig(weight_decay=0.0, grad_clip_norm=None)
        )
        eta = 1e-2
        for _ in range(50):
            before = float(w[0])
            opt.step({"w": torch.tensor([3.0], dtype=torch.float64)}, eta=eta)
            assert abs(float(w[0]) - before) <= eta * (1 + 1e-9)

    def test_rms_cap_shrinks_large_updates(self):
        # With beta2 = 0, v tracks only the latest gradient; after a large
        # step followed by a tiny one, m_hat / sqrt(v_hat) >> 1 and the cap
        # must shrink the second update.
        def run(rms_threshold):
            w = torch.tensor([0.0], dtype=torch.float64)
            opt = StableAdamW(
                {"w": w},
                OptimizerConfig(
                    beta1=0.9, beta2=0.0, weight_decay=0.0,
                    grad_clip_norm=None, rms_threshold=rms_threshold,
                ),
            )
            opt.step({"w": torch.tensor([1.0], dtype=torch.float64)}, eta=1e-2)
            before = float(w[0])
            opt.step({"w": torch.tensor([0.01], dtype=torch.float64)}, eta=1e-2)
            return abs(float(w[0]) - before)

        assert run(1.0) < run(None) * 0.5

    def test_nonfinite_rejected_state_unchanged(self):
        w = torch.tensor([1.0, 2.0], dtype=torch.float64)
        opt = StableAdamW({"w": w}, OptimizerConfig())
        opt.step({"w": torch.tensor([0.1, 0.1], dtype=torch.float64)}, eta=1e-3)
        w_before = w.clone()
        m_before = opt.m["w"].clone()
        step_before = opt.step_count
        with pytest.raises(NonFiniteGradientError):
            opt.step({"w": torch.tensor([float("nan"), 0.1], dtype=torch.float64)}, eta=1e-3)
        assert torch.equal(w, w_before)
        assert torch.equal(opt.m["w"], m_before)
        assert opt.step_count == step_before

    def test_shape_mismatch_rejected(self):
        w = torch.zeros(3, dtype=torch.float64)
        opt = StableAdamW({"w": w}, OptimizerConfig())
        with pytest.raises(InputError):
            opt.step({"w": torch.zeros(4, dtype=torch.float64)}, eta=1e-3)
