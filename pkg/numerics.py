# -*- encoding: UTF-8 -*-
"""
数值基础：随机流、sigmoid、伯努利采样、均方根误差

所有随机数均来自 RandomStream，消耗顺序固定：
矩阵按行优先，样本按文件顺序。
"""

import numpy as np

from errors import DomainError, NumericError

MASK64 = (1 << 64) - 1
GOLDEN64 = 0x9E3779B97F4A7C15


def derive_seed(seed, salt):
    """由主种子和盐值派生子种子（各训练阶段使用独立的流）"""
    return (int(seed) ^ ((int(salt) + 1) * GOLDEN64)) & MASK64


class RandomStream:
    """可复现的随机数流（PCG64，周期 2^128）"""

    def __init__(self, seed):
        seed = int(seed)
        if seed < 0 or seed > MASK64:
            raise DomainError(f"seed 必须是64位无符号整数: {seed}")
        self.seed = seed
        self._generator = np.random.Generator(np.random.PCG64(seed))

    def uniform(self, size=None):
        """[0,1) 均匀分布，每个元素消耗一次抽样"""
        return self._generator.random(size)

    def normal(self, scale=1.0, size=None):
        return self._generator.normal(0.0, scale, size)

    def rayleigh(self, scale=1.0, size=None):
        return self._generator.rayleigh(scale, size)

    def permutation(self, n):
        return self._generator.permutation(n)

    def choice(self, n, size):
        """无放回抽取 size 个下标"""
        return self._generator.choice(n, size=size, replace=False)

    def __repr__(self):
        return f"RandomStream(seed={self.seed})"


def sigmoid(x):
    """数值稳定的 logistic 函数，只对非正数求 exp，不会溢出"""
    x = np.asarray(x, dtype=np.float64)
    z = np.exp(-np.abs(x))
    out = np.where(x >= 0, 1.0 / (1.0 + z), z / (1.0 + z))
    if out.ndim == 0:
        return float(out)
    return out


def sample_bernoulli(p, rng):
    """以概率 p 返回 1；无论 p 为何值都只消耗一次抽样"""
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"概率超出 [0,1]: {p}")
    u = rng.uniform()
    return 1 if u < p else 0


def sample_bernoulli_matrix(probs, rng):
    """逐元素伯努利采样，按行优先消耗 probs.size 次抽样"""
    probs = np.asarray(probs, dtype=np.float64)
    u = rng.uniform(probs.shape)
    return (u < probs).astype(np.float64)


def rms_diff(a, b):
    """两个向量的均方根差"""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise DomainError(f"向量长度不一致: {a.size} != {b.size}")
    if a.size == 0:
        raise DomainError("向量为空")
    return float(np.sqrt(np.mean((a - b) ** 2)))


def rms_rows(a, b):
    """逐行均方根差，返回每个样本的误差"""
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    if a.shape != b.shape:
        raise DomainError(f"矩阵形状不一致: {a.shape} != {b.shape}")
    if a.shape[1] == 0:
        raise DomainError("向量为空")
    return np.sqrt(np.mean((a - b) ** 2, axis=1))


def as_matrix(data, cols=None):
    """转换为二维 float64 矩阵并检查数值有限"""
    m = np.atleast_2d(np.asarray(data, dtype=np.float64))
    if cols is not None and m.shape[1] != cols:
        raise DomainError(f"列数应为 {cols}，实际为 {m.shape[1]}")
    check_finite(m, "matrix")
    return m


def check_finite(values, what):
    if not np.all(np.isfinite(values)):
        raise NumericError(f"{what} 含有非有限数值")
    return values
