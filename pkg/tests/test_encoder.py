import dataclasses
import math
import random

import numpy as np
import pytest
import torch

from oracles import ref_forward_one_sequence, ref_mlm_loss

from zhbert.encoder import (
    EncoderConfig,
    attention_mask,
    count_scores,
    forward,
    init_checkpoint,
    is_global_layer,
    load_checkpoint,
    mlm_loss,
    pack_sequences,
    parameter_shapes,
    rmsnorm,
    rope_rotate,
    save_checkpoint,
    window_mask,
)
from zhbert.encoder.model import Checkpoint
from zhbert.errors import ConfigError, InputError


class TestConfig:
    def test_validation(self):
        with pytest.raises(ConfigError):
            EncoderConfig(hidden=10, heads=3)  # not divisible
        with pytest.raises(ConfigError):
            EncoderConfig(hidden=16, heads=16)  # head_dim 1 is odd
        with pytest.raises(ConfigError):
            EncoderConfig(global_layer_interval=0)

    def test_ffn_rounding(self):
        cfg = EncoderConfig(hidden=1024, vocab_size=100)
        assert cfg.ffn_intermediate % 64 == 0
        assert cfg.ffn_intermediate >= 1024 * 2.6

    def test_default_layer_pattern(self):
        cfg = EncoderConfig(vocab_size=10)
        kinds = [is_global_layer(cfg, i) for i in range(6)]
        assert kinds == [True, False, False, True, False, False]

    def test_offset_knob(self):
        cfg = EncoderConfig(vocab_size=10, global_layer_offset=1)
        assert not is_global_layer(cfg, 0)
        assert is_global_layer(cfg, 1)

    def test_parameter_shapes_cover_model(self, toy_config):
        shapes = parameter_shapes(toy_config)
        assert shapes["embedding"] == (11, 8)
        assert "lm_head" not in shapes  # tied by default
        untied = dataclasses.replace(toy_config, tie_embeddings=False)
        assert parameter_shapes(untied)["lm_head"] == (11, 8)


class TestRope:
    def test_position_zero_identity(self):
        torch.manual_seed(0)
        x = torch.randn(3, 5, 8, dtype=torch.float64)
        out = rope_rotate(x, torch.zeros(5, dtype=torch.int64), theta=10_000.0)
        assert torch.allclose(out, x, atol=0.0)

    def test_head_dim_two_angle_is_position(self):
        # With d=2 the only frequency is theta^0 = 1: angle == position.
        for m in (1, 2, 7, 100):
            x = torch.tensor([[1.0, 0.0]], dtype=torch.float64)
            out = rope_rotate(x, torch.tensor([m]), theta=10_000.0)
            assert float(out[0, 0]) == pytest.approx(math.cos(m), abs=1e-12)
            assert float(out[0, 1]) == pytest.approx(math.sin(m), abs=1e-12)

    def test_relative_position_property(self):
        rng = torch.Generator().manual_seed(42)
        d = 8
        for _ in range(1000):
            q = torch.randn(1, d, dtype=torch.float64, generator=rng)
            k = torch.randn(1, d, dtype=torch.float64, generator=rng)
            m = int(torch.randint(0, 500, (1,), generator=rng))
            n = int(torch.randint(0, 500, (1,), generator=rng))
            delta = int(torch.randint(0, 500, (1,), generator=rng))
            base = rope_rotate(q, torch.tensor([m]), 10_000.0) @ rope_rotate(
                k, torch.tensor([n]), 10_000.0
            ).T
            shifted = rope_rotate(q, torch.tensor([m + delta]), 10_000.0) @ rope_rotate(
                k, torch.tensor([n + delta]), 10_000.0
            ).T
            assert float((base - shifted).abs()) < 1e-6

    def test_norm_preserved(self):
        rng = torch.Generator().manual_seed(7)
        x = torch.randn(64, 16, dtype=torch.float64, generator=rng)
        out = rope_rotate(x, torch.arange(64), theta=80_000.0)
        assert torch.allclose(
            torch.linalg.norm(out, dim=-1), torch.linalg.norm(x, dim=-1), atol=1e-6
        )

    def test_odd_head_dim_rejected(self):
        with pytest.raises(ConfigError):
            rope_rotate(torch.zeros(1, 3), torch.tensor([0]), 10.0)

    def test_negative_position_rejected(self):
        with pytest.raises(InputError):
            rope_rotate(torch.zeros(1, 2), torch.tensor([-1]), 10.0)

    def test_matches_reference(self):
        rng = torch.Generator().manual_seed(3)
        x = torch.randn(5, 6, dtype=torch.float64, generator=rng)
        out = rope_rotate(x, torch.arange(5), theta=123.0)
        from oracles import ref_rope

        for i in range(5):
            expected = ref_rope(x[i].numpy(), i, 123.0)
            assert np.allclose(out[i].numpy(), expected, atol=1e-12)


class TestAttentionMask:
    def test_tridiagonal_radius_one(self, toy_config):
        cfg = dataclasses.replace(toy_config, local_window_radius=1)
        batch = pack_sequences([[1] * 8])
        mask = attention_mask(1, cfg, batch)  # layer 1 is local (interval 2)
        expected = torch.zeros(8, 8, dtype=torch.bool)
        for i in range(8):
            for j in range(8):
                expected[i, j] = abs(i - j) <= 1
        assert torch.equal(mask, expected)

    def test_packed_boundary_blocks_cross_attention(self, toy_config):
        batch = pack_sequences([[1, 2, 3], [4, 5]])
        for layer in (0, 1):
            mask = attention_mask(layer, toy_config, batch)
            assert not mask[:3, 3:].any()
            assert not mask[3:, :3].any()

    def test_window_saturation_equals_global(self, toy_config):
        cfg = dataclasses.replace(toy_config, local_window_radius=50)
        batch = pack_sequences([[1] * 8, [2] * 5])
        local = attention_mask(1, cfg, batch)
        glob = attention_mask(0, cfg, batch)
        assert torch.equal(local, glob)

    def test_symmetric(self, toy_config):
        batch = pack_sequences([[1] * 9, [2] * 4])
        for layer in (0, 1):
            mask = attention_mask(layer, toy_config, batch)
            assert torch.equal(mask, mask.T)

    def test_window_mask_helper(self):
        # L(2r+1) - r(r+1) = 6*5 - 6 = 24
        assert int(window_mask(6, 2).sum()) == 24


class TestForward:
    def test_zero_weights_uniform_logits(self, toy_config):
        ckpt = init_checkpoint(toy_config, seed=0)
        for name, t in ckpt.weights.items():
            if not name.endswith("_norm"):
                ckpt.weights[name] = torch.zeros_like(t)
        res = forward(ckpt, pack_sequences([[1, 2, 3]]))
        assert torch.allclose(res.logits, res.logits[:, :1].expand_as(res.logits))

    def test_packed_equals_padded_reference(self, toy_config, toy_checkpoint):
        seqs = [[1, 2, 3, 4, 5, 6, 7], [8, 9, 10], [0, 1]]
        batch = pack_sequences(seqs)
        res = forward(toy_checkpoint, batch)
        weights_np = {k: t.detach().numpy() for k, t in toy_checkpoint.weights.items()}
        offset = 0
        for seq in seqs:
            hidden_ref, logits_ref = ref_forward_one_sequence(toy_config, weights_np, seq)
            got_h = res.hidden[offset : offset + len(seq)].numpy()
            got_l = res.logits[offset : offset + len(seq)].numpy()
            assert np.abs(got_h - hidden_ref).max() < 1e-5
            assert np.abs(got_l - logits_ref).max() < 1e-5
            offset += len(seq)

    def test_single_token_hand_computation(self):
        # 1 layer, hidden 2, 1 head: small enough to trace by hand.
        cfg = EncoderConfig(
            layers=1, hidden=2, heads=1, ffn_expansion=1.0, ffn_round_multiple=1,
            global_layer_interval=1, local_window_radius=1, max_context=4,
            vocab_size=3, norm_eps=1e-6,
        )
        w = {
            "embedding": torch.tensor([[0.1, 0.2], [0.3, -0.4], [0.5, 0.6]], dtype=torch.float64),
            "layer0.attn_norm": torch.tensor([1.0, 1.0], dtype=torch.float64),
            "layer0.wq": torch.tensor([[0.1, 0.0], [0.0, 0.1]], dtype=torch.float64),
            "layer0.wk": torch.tensor([[0.2, 0.0], [0.0, 0.2]], dtype=torch.float64),
            "layer0.wv": torch.tensor([[0.3, 0.1], [-0.1, 0.3]], dtype=torch.float64),
            "layer0.wo": torch.tensor([[1.0, 0.5], [0.5, 1.0]], dtype=torch.float64),
            "layer0.mlp_norm": torch.tensor([1.0, 1.0], dtype=torch.float64),
            "layer0.w_in": torch.tensor(
                [[0.4, -0.2, 0.1, 0.3], [0.2, 0.5, -0.3, 0.1]], dtype=torch.float64
            ),
            "layer0.w_out": torch.tensor([[0.6, 0.1], [-0.2, 0.7]], dtype=torch.float64),
            "final_norm": torch.tensor([1.0, 1.0], dtype=torch.float64),
        }
        ckpt = Checkpoint(config=cfg, weights=w)
        res = forward(ckpt, pack_sequences([[1]]))

        def rn(v):
            ms = (v[0] ** 2 + v[1] ** 2) / 2
            s = 1.0 / math.sqrt(ms + 1e-6)
            return [v[0] * s, v[1] * s]

        def gelu1(t):
            return 0.5 * t * (1.0 + math.erf(t / math.sqrt(2.0)))

        x = [0.3, -0.4]
        h = rn(x)
        # Single token at position 0: rope is identity, softmax over itself is 1,
        # so attention output is just v = h @ wv.
        v = [h[0] * 0.3 + h[1] * -0.1, h[0] * 0.1 + h[1] * 0.3]
        o = [v[0] * 1.0 + v[1] * 0.5, v[0] * 0.5 + v[1] * 1.0]
        x = [x[0] + o[0], x[1] + o[1]]
        h2 = rn(x)
        u = [
            h2[0] * 0.4 + h2[1] * 0.2,
            h2[0] * -0.2 + h2[1] * 0.5,
            h2[0] * 0.1 + h2[1] * -0.3,
            h2[0] * 0.3 + h2[1] * 0.1,
        ]
        act = [gelu1(u[0]) * u[2], gelu1(u[1]) * u[3]]
        ff = [act[0] * 0.6 + act[1] * -0.2, act[0] * 0.1 + act[1] * 0.7]
        x = [x[0] + ff[0], x[1] + ff[1]]
        hf = rn(x)
        emb = [[0.1, 0.2], [0.3, -0.4], [0.5, 0.6]]
        expected = [hf[0] * e[0] + hf[1] * e[1] for e in emb]

        assert np.allclose(res.logits[0].numpy(), expected, atol=1e-12)

    def test_id_overflow_rejected(self, toy_checkpoint):
        with pytest.raises(InputError):
            forward(toy_checkpoint, pack_sequences([[10, 11]]))

    def test_length_overflow_rejected(self, toy_checkpoint):
        too_long = [[1] * (toy_checkpoint.config.max_context + 1)]
        with pytest.raises(InputError):
            forward(toy_checkpoint, pack_sequences(too_long))

    def test_deterministic(self, toy_config):
        a = forward(init_checkpoint(toy_config, seed=5), pack_sequences([[1, 2, 3]]))
        b = forward(init_checkpoint(toy_config, seed=5), pack_sequences([[1, 2, 3]]))
        assert torch.equal(a.logits, b.logits)


class TestRmsNorm:
    def test_unit_rms_pre_gain(self):
        rng = torch.Generator().manual_seed(11)
        x = torch.randn(100, 32, dtype=torch.float64, generator=rng)
        out = rmsnorm(x, torch.ones(32, dtype=torch.float64), eps=1e-6)
        rms = torch.sqrt((out * out).mean(dim=-1))
        assert float((rms - 1.0).abs().max()) < 1e-6


class TestMlmLoss:
    def test_perfect_one_hot(self):
        logits = torch.full((3, 5), -100.0, dtype=torch.float64)
        labels = torch.tensor([2, -1, 4])
        logits[0, 2] = 100.0
        logits[2, 4] = 100.0
        assert float(mlm_loss(logits, labels)) < 1e-9

    def test_uniform_logits(self):
        logits = torch.zeros(4, 7, dtype=torch.float64)
        labels = torch.tensor([0, 3, -1, 6])
        assert float(mlm_loss(logits, labels)) == pytest.approx(math.log(7), rel=1e-12)

    def test_matches_direct_summation(self):
        rng = torch.Generator().manual_seed(2)
        logits = torch.randn(10, 11, dtype=torch.float64, generator=rng)
        labels = torch.tensor([1, -1, 3, -1, -1, 7, 0, -1, 9, 2])
        expected = ref_mlm_loss(logits.numpy(), labels.tolist())
        assert float(mlm_loss(logits, labels)) == pytest.approx(expected, abs=1e-6)

    def test_zero_masked_positions(self):
        logits = torch.randn(3, 5, dtype=torch.float64)
        assert float(mlm_loss(logits, torch.tensor([-1, -1, -1]))) == 0.0


class TestGradientCheck:
    def test_all_tensors_match_finite_differences(self, toy_config):
        ckpt = init_checkpoint(toy_config, seed=13)
        batch = pack_sequences([[1, 2, 3, 4, 5], [6, 7, 8]])
        labels = torch.tensor([-1, 2, -1, 4, -1, -1, 7, -1])

        for p in ckpt.weights.values():
            p.requires_grad_(True)
        loss = mlm_loss(forward(ckpt, batch).logits, labels)
        loss.backward()
        analytic = {k: p.grad.clone() for k, p in ckpt.weights.items()}
        for p in ckpt.weights.values():
            p.requires_grad_(False)

        h = 1e-6
        worst = 0.0
        with torch.no_grad():
            for name, w in ckpt.weights.items():
                flat = w.view(-1)
                fd = torch.zeros_like(flat)
                for i in range(flat.numel()):
                    orig = float(flat[i])
                    flat[i] = orig + h
                    up = float(mlm_loss(forward(ckpt, batch).logits, labels))
                    flat[i] = orig - h
                    down = float(mlm_loss(forward(ckpt, batch).logits, labels))
                    flat[i] = orig
                    fd[i] = (up - down) / (2 * h)
                g = analytic[name].view(-1)
                rel = float(torch.linalg.norm(g - fd)) / max(
                    float(torch.linalg.norm(g)), float(torch.linalg.norm(fd)), 1e-30
                )
                worst = max(worst, rel)
                assert rel < 1e-4, f"{name}: rel error {rel}"
        assert worst < 1e-4


class TestScoreCounting:
    def test_instrumented_counts(self, toy_config):
        batch = pack_sequences([[1] * 10, [2] * 6])
        res = forward(init_checkpoint(toy_config, seed=1), batch, count_scores=True)
        assert res.score_counts == [
            count_scores(i, toy_config, batch) for i in range(toy_config.layers)
        ]

    def test_local_linear_global_quadratic(self, toy_config):
        r = toy_config.local_window_radius
        short = pack_sequences([[1] * 20])
        long = pack_sequences([[1] * 40])
        local_short = count_scores(1, toy_config, short)
        local_long = count_scores(1, toy_config, long)
        glob_short = count_scores(0, toy_config, short)
        glob_long = count_scores(0, toy_config, long)
        assert glob_long == 4 * glob_short
        assert abs(local_long - 2 * local_short) <= r * (r + 1)


class TestCheckpoint:
    def test_round_trip_bit_exact(self, tmp_path, toy_checkpoint):
        save_checkpoint(toy_checkpoint, tmp_path / "ckpt")
        loaded = load_checkpoint(tmp_path / "ckpt")
        assert loaded.config == toy_checkpoint.config
        for name, t in toy_checkpoint.weights.items():
            assert torch.equal(loaded.weights[name], t)
        save_checkpoint(loaded, tmp_path / "ckpt2")
        for f in ("config.txt", "manifest.txt", "weights.bin"):
            assert (tmp_path / "ckpt" / f).read_bytes() == (tmp_path / "ckpt2" / f).read_bytes()

    def test_optimizer_state_round_trip(self, tmp_path, toy_checkpoint):
        toy_checkpoint.opt_m = {k: torch.rand_like(t) for k, t in toy_checkpoint.weights.items()}
        toy_checkpoint.opt_v = {k: torch.rand_like(t) for k, t in toy_checkpoint.weights.items()}
        toy_checkpoint.opt_step = 17
        save_checkpoint(toy_checkpoint, tmp_path / "ckpt")
        loaded = load_checkpoint(tmp_path / "ckpt")
        assert loaded.opt_step == 17
        for name in toy_checkpoint.weights:
            assert torch.equal(loaded.opt_m[name], toy_checkpoint.opt_m[name])
            assert torch.equal(loaded.opt_v[name], toy_checkpoint.opt_v[name])

    def test_shape_mismatch_rejected(self, toy_config):
        weights = {
            k: torch.zeros(s, dtype=torch.float64)
            for k, s in parameter_shapes(toy_config).items()
        }
        weights["embedding"] = torch.zeros(5, 5, dtype=torch.float64)
        with pytest.raises(InputError):
            Checkpoint(config=toy_config, weights=weights)


class TestPacking:
    def test_positions_restart(self):
        batch = pack_sequences([[1, 2, 3], [4, 5]])
        assert batch.positions().tolist() == [0, 1, 2, 0, 1]

    def test_invalid_cu_seqlens(self):
        from zhbert.encoder.packing import PackedBatch

        with pytest.raises(InputError):
            PackedBatch(token_ids=torch.tensor([1, 2]), cu_seqlens=(0, 1), max_len=1)
        with pytest.raises(InputError):
            PackedBatch(token_ids=torch.tensor([1, 2]), cu_seqlens=(0, 2, 2), max_len=2)

    def test_empty_sequence_rejected(self):
        with pytest.raises(InputError):
            pack_sequences([[1, 2], []])
