import math
import os
import sys
import unittest

import numpy as np

# 添加项目根目录到Python路径
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from errors import DomainError, NumericError
from numerics import RandomStream, sample_bernoulli_matrix
from model import (TrainConfig, TrainReport, Rbm, DeepAutoencoder, JOINT, init_rbm, hidden_probs,
                   visible_probs, cd1_step, positive_statistics, train_rbm, train_stack, autoencode,
                   validation_error, progress_line)
from model.rbm import Velocity, reconstruct_visible, reconstruction_rms


def _zero_rbm(n_visible, n_hidden, bias_unit=False):
    return Rbm(np.zeros((n_hidden, n_visible)), np.zeros(n_hidden), np.zeros(n_visible), bias_unit)


class TestTrainConfig(unittest.TestCase):
    """测试训练配置"""

    def test_momentum_schedule(self):
        cfg = TrainConfig(momentum=0.5, final_momentum=0.9, momentum_switch_epoch=5)
        self.assertEqual(cfg.momentum_at(0), 0.5)
        self.assertEqual(cfg.momentum_at(4), 0.5)
        self.assertEqual(cfg.momentum_at(5), 0.9)

    def test_validation(self):
        for bad in (TrainConfig(batch_size=0), TrainConfig(momentum=1.0), TrainConfig(epochs=-1),
                    TrainConfig(learning_rate=-0.1), TrainConfig(weight_decay=-1)):
            with self.assertRaises(DomainError):
                bad.validate()

    def test_report(self):
        report = TrainReport('joint.L1')
        report.add(1, 0.5, 0.4)
        report.add(2, 0.3, None)
        self.assertEqual(report.final_train, 0.3)
        self.assertIsNone(report.final_val)
        frame = report.to_frame()
        self.assertEqual(list(frame.columns), ['phase', 'epoch', 'train_rms', 'val_rms'])
        self.assertEqual(progress_line('joint.L1', 2, None), 'phase=joint.L1 epoch=2 val_rms=nan')
        self.assertEqual(progress_line('translate', 3, 0.25), 'phase=translate epoch=3 val_rms=0.250000')


class TestInit(unittest.TestCase):
    """测试初始化"""

    def test_zero_sigma(self):
        rbm = init_rbm(5, 4, TrainConfig(init_sigma=0.0))
        self.assertTrue(np.all(rbm.W == 0))
        self.assertTrue(np.all(rbm.b_hidden == 0))
        self.assertTrue(np.all(rbm.b_visible == 0))

    def test_determinism(self):
        cfg = TrainConfig(seed=42)
        self.assertTrue(init_rbm(20, 10, cfg).params_equal(init_rbm(20, 10, cfg)))
        self.assertFalse(init_rbm(20, 10, cfg).params_equal(init_rbm(20, 10, cfg.with_seed(43))))

    def test_moments(self):
        rbm = init_rbm(1000, 1000, TrainConfig(init_sigma=0.01, seed=7))
        self.assertLess(abs(rbm.W.mean()), 1e-4)
        self.assertLess(abs(rbm.W.std() - 0.01), 1e-4)

    def test_invalid_sizes(self):
        with self.assertRaises(DomainError):
            init_rbm(0, 3)
        with self.assertRaises(DomainError):
            Rbm(np.zeros((2, 3)), np.zeros(3), np.zeros(3))
        with self.assertRaises(NumericError):
            Rbm(np.full((2, 3), np.nan), np.zeros(2), np.zeros(3))


class TestConditionals(unittest.TestCase):
    """测试条件概率"""

    def test_hidden_probs_example(self):
        rbm = Rbm([[1.0, -1.0]], [0.0], [0.0, 0.0])
        self.assertAlmostEqual(float(hidden_probs(rbm, [1.0, 0.0])[0]), 1 / (1 + math.exp(-1)), places=15)
        self.assertEqual(float(hidden_probs(rbm, [1.0, 1.0])[0]), 0.5)

    def test_visible_probs_example(self):
        rbm = Rbm([[2.0, 0.0]], [0.0], [0.0, -1.0])
        q = visible_probs(rbm, [1.0])
        self.assertAlmostEqual(q[0], 1 / (1 + math.exp(-2)), places=15)
        self.assertAlmostEqual(q[1], 1 / (1 + math.exp(1)), places=15)

    def test_zero_model(self):
        rbm = _zero_rbm(6, 4)
        self.assertTrue(np.all(hidden_probs(rbm, np.ones(6)) == 0.5))
        self.assertTrue(np.all(visible_probs(rbm, np.ones(4)) == 0.5))

    def test_length_check(self):
        rbm = _zero_rbm(6, 4)
        with self.assertRaises(DomainError):
            hidden_probs(rbm, np.ones(5))
        with self.assertRaises(DomainError):
            visible_probs(rbm, np.ones(6))

    def test_batch_matches_rows(self):
        rbm = init_rbm(8, 5, TrainConfig(init_sigma=1.0, seed=3))
        batch = np.random.default_rng(0).random((4, 8))
        rows = np.array([hidden_probs(rbm, row) for row in batch])
        self.assertTrue(np.allclose(hidden_probs(rbm, batch), rows, atol=1e-15))

    def test_sampling_frequency(self):
        """20 组随机小模型，每组 10^5 次采样：隐藏单元为 1 的总次数在 3 倍二项标准差内"""
        rng = np.random.default_rng(9)
        n = 100000
        for case in range(20):
            rbm = Rbm(rng.normal(0.0, 1.0, (3, 4)), rng.normal(0.0, 0.5, 3), np.zeros(4))
            p = hidden_probs(rbm, rng.random(4))
            bits = sample_bernoulli_matrix(np.tile(p, (n, 1)), RandomStream(case))
            ones = float(bits.sum())
            sigma = math.sqrt(n * float(np.sum(p * (1 - p))))
            self.assertLessEqual(abs(ones - n * float(p.sum())), 3 * sigma)

    def test_bias_unit_clamp(self):
        rbm = _zero_rbm(4, 2, bias_unit=True)
        q = reconstruct_visible(rbm, np.zeros(2))
        self.assertEqual(q[-1], 1.0)
        self.assertTrue(np.all(q[:-1] == 0.5))


class TestCd1(unittest.TestCase):
    """测试 CD-1 更新"""

    def test_zero_learning_rate(self):
        cfg = TrainConfig(learning_rate=0.0, momentum=0.0)
        rbm = init_rbm(6, 4, TrainConfig(init_sigma=0.5, seed=1))
        before = rbm.copy()
        cd1_step(rbm, np.random.default_rng(1).random((5, 6)), cfg, RandomStream(2))
        self.assertTrue(rbm.params_equal(before))

    def _oracle_step(self, W, bh, bv, v, cfg, rng, velocity, momentum):
        """逐元素实现的 CD-1，只处理单个样本"""
        H, V = len(bh), len(bv)
        sig = lambda x: 1.0 / (1.0 + math.exp(-x))
        p = [sig(sum(W[j][i] * v[i] for i in range(V)) + bh[j]) for j in range(H)]
        h = [1.0 if rng.uniform() < p[j] else 0.0 for j in range(H)]
        vn = [sig(sum(W[j][i] * h[j] for j in range(H)) + bv[i]) for i in range(V)]
        pn = [sig(sum(W[j][i] * vn[i] for i in range(V)) + bh[j]) for j in range(H)]
        vW, vbh, vbv = velocity
        lr, wd = cfg.learning_rate, cfg.weight_decay
        for j in range(H):
            for i in range(V):
                vW[j][i] = lr * ((p[j] * v[i] - pn[j] * vn[i]) - wd * W[j][i]) + momentum * vW[j][i]
                W[j][i] += vW[j][i]
            vbh[j] = lr * (p[j] - pn[j]) + momentum * vbh[j]
            bh[j] += vbh[j]
        for i in range(V):
            vbv[i] = lr * (v[i] - vn[i]) + momentum * vbv[i]
            bv[i] += vbv[i]

    def test_matches_elementwise_oracle(self):
        cfg = TrainConfig(learning_rate=0.3, momentum=0.5, weight_decay=0.01)
        rbm = Rbm([[0.1, -0.2, 0.3], [0.4, 0.0, -0.5]], [0.05, -0.1], [0.2, 0.0, -0.3])
        W = rbm.W.tolist()
        bh, bv = rbm.b_hidden.tolist(), rbm.b_visible.tolist()
        oracle_velocity = ([[0.0] * 3, [0.0] * 3], [0.0, 0.0], [0.0, 0.0, 0.0])
        velocity = Velocity(rbm)
        rng, oracle_rng = RandomStream(17), RandomStream(17)
        for v in ([1.0, 0.0, 1.0], [0.2, 0.9, 0.4]):
            cd1_step(rbm, np.array([v]), cfg, rng, velocity)
            self._oracle_step(W, bh, bv, v, cfg, oracle_rng, oracle_velocity, cfg.momentum)
        self.assertLessEqual(np.max(np.abs(rbm.W - np.array(W))), 1e-12)
        self.assertLessEqual(np.max(np.abs(rbm.b_hidden - np.array(bh))), 1e-12)
        self.assertLessEqual(np.max(np.abs(rbm.b_visible - np.array(bv))), 1e-12)

    def test_positive_statistics_linearity(self):
        rbm = init_rbm(5, 3, TrainConfig(init_sigma=1.0, seed=4))
        rng = np.random.default_rng(5)
        a, b = rng.random((4, 5)), rng.random((4, 5))
        whole = positive_statistics(rbm, np.vstack([a, b]))
        half_a, half_b = positive_statistics(rbm, a), positive_statistics(rbm, b)
        for w, x, y in zip(whole, half_a, half_b):
            self.assertTrue(np.allclose(w, (x + y) / 2, atol=1e-14))

    def test_batch_width_check(self):
        rbm = _zero_rbm(4, 2)
        with self.assertRaises(DomainError):
            cd1_step(rbm, np.zeros((3, 5)), TrainConfig(), RandomStream(0))


class TestTrainRbm(unittest.TestCase):
    """测试单层训练"""

    def test_zero_epochs(self):
        cfg = TrainConfig(epochs=0, seed=5)
        data = np.random.default_rng(0).random((10, 6))
        rbm, report = train_rbm(data, 3, cfg)
        self.assertEqual(len(report), 0)
        self.assertTrue(rbm.params_equal(init_rbm(6, 3, cfg)))

    def test_learns_repeated_pattern(self):
        pattern = np.array([1, 0, 1, 1, 0, 0, 1, 0], dtype=np.float64)
        data = np.tile(pattern, (200, 1))
        cfg = TrainConfig(epochs=200, batch_size=100, seed=1)
        rbm, report = train_rbm(data, 4, cfg, validation=data[:10])
        self.assertEqual(len(report), 200)
        self.assertLess(reconstruction_rms(rbm, data), 0.1)
        self.assertLess(report.final_val, 0.1)

    def test_determinism(self):
        data = np.random.default_rng(2).random((30, 10))
        cfg = TrainConfig(epochs=3, batch_size=7, seed=11)
        rbm_a, report_a = train_rbm(data, 5, cfg)
        rbm_b, report_b = train_rbm(data, 5, cfg)
        self.assertTrue(rbm_a.params_equal(rbm_b))
        self.assertEqual(report_a, report_b)

    def test_progress_callback(self):
        calls = []
        data = np.random.default_rng(3).random((10, 4))
        train_rbm(data, 2, TrainConfig(epochs=2, batch_size=5), progress=lambda *args: calls.append(args))
        self.assertEqual([c[1] for c in calls], [1, 2])

    def test_bad_data(self):
        with self.assertRaises(DomainError):
            train_rbm(np.zeros((0, 4)), 2)
        with self.assertRaises(NumericError):
            train_rbm(np.array([[np.inf, 0.0]]), 2)


class TestStack(unittest.TestCase):
    """测试堆叠与自编码"""

    def test_layer_chain(self):
        data = np.random.default_rng(0).random((12, 50))
        model, reports = train_stack(data, [300, 200, 100], TrainConfig(epochs=1, batch_size=6))
        self.assertEqual(model.layer_sizes, [300, 200, 100])
        self.assertEqual([layer.n_visible for layer in model.layers], [50, 300, 200])
        self.assertEqual([r.phase for r in reports], ['joint.L1', 'joint.L2', 'joint.L3'])
        self.assertTrue(model.layers[0].bias_unit)
        self.assertFalse(model.layers[1].bias_unit)

    def test_depth_one_matches_single_rbm(self):
        data = np.random.default_rng(1).random((20, 9))
        cfg = TrainConfig(epochs=3, batch_size=8, seed=21)
        model, reports = train_stack(data, [5], cfg, bias_unit=False)
        rbm, report = train_rbm(data, 5, cfg)
        self.assertTrue(model.layers[0].params_equal(rbm))
        self.assertEqual(reports[0].train_values, report.train_values)

    def test_expected_visible(self):
        with self.assertRaises(DomainError):
            train_stack(np.zeros((3, 7)), [4], TrainConfig(epochs=1), expected_visible=9)
        with self.assertRaises(DomainError):
            train_stack(np.zeros((3, 7)), [], TrainConfig(epochs=1))

    def test_validation_reported_each_epoch(self):
        data = np.random.default_rng(2).random((10, 7))
        _, reports = train_stack(data, [4, 3], TrainConfig(epochs=2, batch_size=5), validation=data[:3])
        for report in reports:
            self.assertEqual(len(report.val_values), 2)
            self.assertTrue(all(v is not None for v in report.val_values))

    def test_zero_model_autoencode(self):
        model = DeepAutoencoder([_zero_rbm(7, 4, True), _zero_rbm(4, 3)], JOINT).validate()
        out = autoencode(model, np.ones(7))
        self.assertEqual(out.shape, (7,))
        self.assertTrue(np.all(out == 0.5))
        self.assertEqual(validation_error(model, np.zeros((3, 7))), 0.5)

    def test_autoencode_deterministic(self):
        data = np.random.default_rng(3).random((10, 7))
        model, _ = train_stack(data, [4], TrainConfig(epochs=2, batch_size=5))
        self.assertTrue(np.array_equal(autoencode(model, data[0]), autoencode(model, data[0])))
        with self.assertRaises(DomainError):
            autoencode(model, np.ones(6))

    def test_chain_validation(self):
        with self.assertRaises(DomainError):
            DeepAutoencoder([_zero_rbm(7, 4), _zero_rbm(5, 3)], JOINT).validate()
        with self.assertRaises(DomainError):
            DeepAutoencoder([], JOINT).validate()

    def test_empty_validation_set(self):
        model = DeepAutoencoder([_zero_rbm(7, 4, True)], JOINT)
        with self.assertRaises(DomainError):
            validation_error(model, np.zeros((0, 7)))


if __name__ == '__main__':
    unittest.main()
