import math
import os
import sys
import unittest

import numpy as np

# 添加项目根目录到Python路径
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from errors import DomainError, NumericError
from numerics import (RandomStream, derive_seed, sigmoid, sample_bernoulli, sample_bernoulli_matrix,
                      rms_diff, rms_rows, as_matrix, check_finite, MASK64)


class TestSigmoid(unittest.TestCase):
    """测试 sigmoid"""

    def test_symmetry_point(self):
        self.assertEqual(sigmoid(0.0), 0.5)

    def test_logistic_identity(self):
        for x in (-3.0, 1.7, 42.0):
            self.assertAlmostEqual(sigmoid(x), 1.0 - sigmoid(-x), places=15)

    def test_saturation_without_overflow(self):
        with np.errstate(over='raise'):
            high = sigmoid(1000.0)
            low = sigmoid(-1000.0)
        self.assertTrue(1.0 - 1e-12 < high <= 1.0)
        self.assertTrue(0.0 <= low < 1e-12)

    def test_strictly_increasing(self):
        x = np.linspace(-30, 30, 601)
        y = sigmoid(x)
        self.assertTrue(np.all(np.diff(y) > 0))
        self.assertTrue(np.all((y > 0) & (y < 1)))


class TestRandomStream(unittest.TestCase):
    """测试随机流"""

    def test_same_seed_same_sequence(self):
        a = RandomStream(12345).uniform(1000)
        b = RandomStream(12345).uniform(1000)
        self.assertTrue(np.array_equal(a, b))

    def test_different_seed(self):
        self.assertFalse(np.array_equal(RandomStream(1).uniform(10), RandomStream(2).uniform(10)))

    def test_seed_range(self):
        RandomStream(MASK64)
        with self.assertRaises(DomainError):
            RandomStream(-1)
        with self.assertRaises(DomainError):
            RandomStream(MASK64 + 1)

    def test_derive_seed(self):
        self.assertNotEqual(derive_seed(7, 0), derive_seed(7, 1))
        self.assertEqual(derive_seed(7, 3), derive_seed(7, 3))
        self.assertTrue(0 <= derive_seed(MASK64, 100) <= MASK64)

    def test_matrix_draws_row_major(self):
        """矩阵抽样与逐个标量抽样的顺序一致"""
        probs = np.full((3, 4), 0.5)
        bits = sample_bernoulli_matrix(probs, RandomStream(99))
        rng = RandomStream(99)
        expected = np.array([[sample_bernoulli(0.5, rng) for _ in range(4)] for _ in range(3)])
        self.assertTrue(np.array_equal(bits, expected))


class TestBernoulli(unittest.TestCase):
    """测试伯努利采样"""

    def test_extremes(self):
        rng = RandomStream(5)
        self.assertTrue(all(sample_bernoulli(0.0, rng) == 0 for _ in range(200)))
        self.assertTrue(all(sample_bernoulli(1.0, rng) == 1 for _ in range(200)))

    def test_out_of_range(self):
        with self.assertRaises(DomainError):
            sample_bernoulli(1.5, RandomStream(0))
        with self.assertRaises(DomainError):
            sample_bernoulli(-0.1, RandomStream(0))

    def test_one_draw_per_sample(self):
        """无论 p 为何值都只消耗一次抽样"""
        a, b = RandomStream(11), RandomStream(11)
        for p in (0.0, 1.0, 0.3, 0.0):
            sample_bernoulli(p, a)
        b.uniform(4)
        self.assertEqual(a.uniform(), b.uniform())

    def test_empirical_mean(self):
        n, p = 100000, 0.3
        bits = sample_bernoulli_matrix(np.full(n, p), RandomStream(2024))
        self.assertLess(abs(bits.mean() - p), 3 * math.sqrt(p * (1 - p) / n))


class TestRms(unittest.TestCase):
    """测试均方根误差"""

    def test_identity(self):
        a = np.random.default_rng(0).random(10)
        self.assertEqual(rms_diff(a, a), 0.0)

    def test_hand_computed(self):
        self.assertAlmostEqual(rms_diff([0, 0], [3, 4]), math.sqrt(12.5), places=12)

    def test_symmetry(self):
        rng = np.random.default_rng(1)
        a, b = rng.random(50), rng.random(50)
        self.assertEqual(rms_diff(a, b), rms_diff(b, a))

    def test_length_mismatch(self):
        with self.assertRaises(DomainError):
            rms_diff([1, 2], [1, 2, 3])
        with self.assertRaises(DomainError):
            rms_diff([], [])

    def test_rows(self):
        a = np.array([[0.0, 0.0], [1.0, 1.0]])
        b = np.array([[3.0, 4.0], [1.0, 1.0]])
        self.assertTrue(np.allclose(rms_rows(a, b), [math.sqrt(12.5), 0.0]))


class TestMatrix(unittest.TestCase):
    """测试矩阵工具"""

    def test_matmul_matches_naive_loop(self):
        rng = np.random.default_rng(3)
        a, b = rng.normal(size=(20, 20)), rng.normal(size=(20, 20))
        naive = np.zeros((20, 20))
        for i in range(20):
            for j in range(20):
                naive[i, j] = sum(a[i, k] * b[k, j] for k in range(20))
        product = as_matrix(a) @ as_matrix(b)
        self.assertLessEqual(np.max(np.abs(product - naive)) / np.max(np.abs(naive)), 1e-12)

    def test_as_matrix_checks(self):
        self.assertEqual(as_matrix([1.0, 2.0]).shape, (1, 2))
        with self.assertRaises(DomainError):
            as_matrix([[1.0, 2.0]], cols=3)
        with self.assertRaises(NumericError):
            check_finite(np.array([1.0, np.nan]), "x")


if __name__ == '__main__':
    unittest.main()
