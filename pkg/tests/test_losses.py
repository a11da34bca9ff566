import math

import numpy as np
import pytest
import torch

from semcomm.training import loss_ce, loss_ir, loss_mse, loss_mse_joint

from .oracles import ce_bruteforce, ir_loss_bruteforce


class TestIrLoss:
    def test_matches_pair_loop(self):
        rng = np.random.default_rng(0)
        for _ in range(25):
            n = int(rng.integers(3, 9))
            z = rng.standard_normal((n, 5))
            z /= np.linalg.norm(z, axis=1, keepdims=True)
            labels = rng.integers(0, 3, n)
            labels[1] = labels[0]
            margin = float(rng.uniform(-0.5, 0.9))
            got = float(loss_ir(torch.as_tensor(z), torch.as_tensor(labels), margin))
            assert abs(got - ir_loss_bruteforce(z, labels, margin)) < 1e-10

    def test_perfect_clusters_give_zero(self):
        z = torch.tensor([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0]])
        assert float(loss_ir(z, torch.tensor([0, 0, 1, 1]), margin=0.5)) == 0.0

    def test_permutation_invariant(self):
        torch.manual_seed(0)
        z = torch.nn.functional.normalize(torch.randn(8, 4, dtype=torch.float64), dim=-1)
        y = torch.tensor([0, 0, 1, 1, 2, 2, 0, 1])
        p = torch.randperm(8)
        assert float(loss_ir(z, y)) == pytest.approx(float(loss_ir(z[p], y[p])), abs=1e-14)

    def test_no_positive_pair(self):
        with pytest.raises(ValueError):
            loss_ir(torch.eye(3), torch.tensor([0, 1, 2]))


class TestMse:
    def test_zero_when_equal(self):
        z = torch.randn(3, 4)
        assert float(loss_mse(z, z)) == 0.0

    def test_row_sum_then_mean(self):
        z, zh = torch.zeros(2, 3), torch.tensor([[1.0, 1.0, 1.0], [0.0, 2.0, 0.0]])
        assert float(loss_mse(z, zh)) == pytest.approx((3 + 4) / 2)

    def test_mask_skips_rows(self):
        z = torch.zeros(1, 3, 2)
        zh = torch.tensor([[[1.0, 0.0], [0.0, 0.0], [100.0, 0.0]]])
        assert float(loss_mse(z, zh, torch.tensor([[True, True, False]]))) == pytest.approx(0.5)

    def test_joint_is_sum(self):
        torch.manual_seed(1)
        a, b, c, d = torch.randn(2, 3, 4), torch.randn(2, 3, 4), torch.randn(2, 5, 4), torch.randn(2, 5, 4)
        m = torch.rand(2, 5) > 0.3
        m[:, 0] = True
        assert float(loss_mse_joint(a, b, c, d, m)) == pytest.approx(float(loss_mse(a, b) + loss_mse(c, d, m)))

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            loss_mse(torch.zeros(2, 3), torch.zeros(2, 4))


class TestCe:
    def test_uniform_logits_give_log_vocab(self):
        for V in (2, 7, 50):
            assert float(loss_ce(torch.zeros(4, V, dtype=torch.float64), torch.arange(4) % V)) == pytest.approx(math.log(V), abs=1e-12)

    def test_matches_loop(self):
        rng = np.random.default_rng(2)
        for _ in range(25):
            B, T, V = rng.integers(1, 4), rng.integers(1, 6), rng.integers(2, 9)
            logits = rng.standard_normal((B, T, V)) * 3
            target = rng.integers(0, V, (B, T))
            mask = rng.random((B, T)) < 0.7
            mask[0, 0] = True
            got = float(loss_ce(torch.as_tensor(logits), torch.as_tensor(target), torch.as_tensor(mask)))
            assert abs(got - ce_bruteforce(logits, target, mask)) < 1e-10

    def test_masked_positions_ignored(self):
        logits = torch.zeros(1, 2, 3)
        logits[0, 1] = torch.tensor([100.0, -100.0, 0.0])
        mask = torch.tensor([[True, False]])
        assert float(loss_ce(logits, torch.tensor([[0, 1]]), mask)) == pytest.approx(math.log(3))

    def test_target_out_of_range(self):
        with pytest.raises(ValueError):
            loss_ce(torch.zeros(2, 3), torch.tensor([0, 3]))
