# -*- encoding: UTF-8 -*-
"""
受限玻尔兹曼机：条件概率、CD-1 更新与逐层训练

可见单元取 [0,1] 实数，视为概率；反向重建取概率而不采样。
"""

from dataclasses import dataclass

import numpy as np

from errors import DomainError
from numerics import RandomStream, sigmoid, sample_bernoulli_matrix, rms_rows, as_matrix, check_finite
from model.base import BaseTrainer, TrainConfig


@dataclass
class Rbm:
    """一层 RBM，W 形状为 (n_hidden, n_visible)"""
    W: np.ndarray
    b_hidden: np.ndarray
    b_visible: np.ndarray
    # 最后一个可见单元为常数 1.0 的偏置输入，训练时重建值钳位为 1.0
    bias_unit: bool = False

    def __post_init__(self):
        self.W = np.array(self.W, dtype=np.float64)
        self.b_hidden = np.array(self.b_hidden, dtype=np.float64).ravel()
        self.b_visible = np.array(self.b_visible, dtype=np.float64).ravel()
        if self.W.ndim != 2:
            raise DomainError(f"W 必须是二维矩阵: {self.W.shape}")
        n_hidden, n_visible = self.W.shape
        if n_hidden == 0 or n_visible == 0:
            raise DomainError(f"层尺寸必须为正: {n_visible}x{n_hidden}")
        if self.b_hidden.shape != (n_hidden,) or self.b_visible.shape != (n_visible,):
            raise DomainError(f"偏置尺寸与 W {self.W.shape} 不一致: "
                              f"{self.b_hidden.shape}, {self.b_visible.shape}")
        check_finite(self.W, "W")
        check_finite(self.b_hidden, "b_hidden")
        check_finite(self.b_visible, "b_visible")

    @property
    def n_visible(self):
        return self.W.shape[1]

    @property
    def n_hidden(self):
        return self.W.shape[0]

    def copy(self):
        return Rbm(self.W.copy(), self.b_hidden.copy(), self.b_visible.copy(), self.bias_unit)

    def params_equal(self, other):
        """逐位比较全部参数"""
        return (self.bias_unit == other.bias_unit
                and np.array_equal(self.W, other.W)
                and np.array_equal(self.b_hidden, other.b_hidden)
                and np.array_equal(self.b_visible, other.b_visible))

    def __repr__(self):
        return f"Rbm({self.n_visible}->{self.n_hidden}, bias_unit={self.bias_unit})"


class Velocity:
    """动量项，保存上一次的参数增量"""

    def __init__(self, rbm):
        self.W = np.zeros_like(rbm.W)
        self.b_hidden = np.zeros_like(rbm.b_hidden)
        self.b_visible = np.zeros_like(rbm.b_visible)


def init_rbm(n_visible, n_hidden, cfg=None, rng=None, bias_unit=False):
    """W ~ N(0, init_sigma^2)，偏置为零；按行优先消耗 n_hidden*n_visible 次抽样"""
    cfg = cfg or TrainConfig()
    if n_visible <= 0 or n_hidden <= 0:
        raise DomainError(f"层尺寸必须为正: {n_visible}x{n_hidden}")
    rng = rng or RandomStream(cfg.seed)
    W = rng.normal(cfg.init_sigma, (n_hidden, n_visible))
    return Rbm(W, np.zeros(n_hidden), np.zeros(n_visible), bias_unit=bias_unit)


def _last_dim(values, expected, what):
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 0 or values.shape[-1] != expected:
        got = values.shape[-1] if values.ndim else 0
        raise DomainError(f"{what} 长度应为 {expected}，实际为 {got}")
    return values


def hidden_probs(rbm, v):
    """p_j = sigmoid(W_j·v + b_hidden_j)；v 可以是单个向量或按行排列的批"""
    v = _last_dim(v, rbm.n_visible, "可见向量")
    return sigmoid(v @ rbm.W.T + rbm.b_hidden)


def visible_probs(rbm, h):
    """q_i = sigmoid(W^T_i·h + b_visible_i)"""
    h = _last_dim(h, rbm.n_hidden, "隐藏向量")
    return sigmoid(h @ rbm.W + rbm.b_visible)


def reconstruct_visible(rbm, h):
    """训练负相位的可见重建，偏置单元钳位为 1.0"""
    q = np.array(visible_probs(rbm, h), dtype=np.float64)
    if rbm.bias_unit:
        q[..., -1] = 1.0
    return q


def positive_statistics(rbm, v):
    """正相位统计量 (<p v^T>, <p>, <v>)，按批求均值"""
    v = as_matrix(v, rbm.n_visible)
    p = np.atleast_2d(hidden_probs(rbm, v))
    n = v.shape[0]
    return p.T @ v / n, p.sum(axis=0) / n, v.sum(axis=0) / n


def cd1_step(rbm, batch, cfg, rng, velocity=None, momentum=None):
    """
    一次 CD-1 更新（原地修改 rbm）
    :param velocity: 跨批次保留的动量项，None 表示从零开始
    :param momentum: 本次使用的动量，None 时取 cfg.momentum
    :return: (rbm, 批内样本重建 RMS 的均值)
    """
    v = as_matrix(batch, rbm.n_visible)
    n = v.shape[0]
    velocity = velocity or Velocity(rbm)
    momentum = cfg.momentum if momentum is None else momentum
    lr, decay = cfg.learning_rate, cfg.weight_decay

    p = hidden_probs(rbm, v)
    h = sample_bernoulli_matrix(p, rng)
    v_neg = reconstruct_visible(rbm, h)
    p_neg = hidden_probs(rbm, v_neg)

    grad_W = (p.T @ v - p_neg.T @ v_neg) / n
    grad_bh = (p.sum(axis=0) - p_neg.sum(axis=0)) / n
    grad_bv = (v.sum(axis=0) - v_neg.sum(axis=0)) / n

    velocity.W = lr * (grad_W - decay * rbm.W) + momentum * velocity.W
    velocity.b_hidden = lr * grad_bh + momentum * velocity.b_hidden
    velocity.b_visible = lr * grad_bv + momentum * velocity.b_visible

    rbm.W += velocity.W
    rbm.b_hidden += velocity.b_hidden
    rbm.b_visible += velocity.b_visible
    return rbm, float(np.mean(rms_rows(v, v_neg)))


def reconstruction_rms(rbm, data):
    """单层上下一次（不采样）的平均重建 RMS"""
    data = as_matrix(data, rbm.n_visible)
    recon = visible_probs(rbm, hidden_probs(rbm, data))
    return float(np.mean(rms_rows(data, recon)))


class RbmTrainer(BaseTrainer):
    """单层 RBM 训练器"""

    def __init__(self, cfg=None, logger_manager=None, progress=None, phase="rbm", evaluate=None):
        super().__init__(cfg, logger_manager, progress)
        self.phase = phase
        # evaluate(rbm) -> 验证误差；None 时用单层重建误差
        self.evaluate = evaluate

    def train(self, data, n_hidden, bias_unit=False, validation=None, rng=None):
        data = self._validate_data(data)
        n = data.shape[0]
        rng = rng or RandomStream(self.cfg.seed)
        rbm = init_rbm(data.shape[1], n_hidden, self.cfg, rng, bias_unit)
        velocity = Velocity(rbm)
        report = self._start(self.phase)
        if validation is not None:
            validation = self._validate_data(validation, "验证数据")

        self.logger.info(f"{self.phase}: 训练 {rbm}，{n} 个样本，{self.cfg.epochs} 轮")
        for epoch in range(self.cfg.epochs):
            momentum = self.cfg.momentum_at(epoch)
            batch_rms = [cd1_step(rbm, data[idx], self.cfg, rng, velocity, momentum)[1]
                         for idx in self._batches(n, rng)]
            if self.evaluate is not None:
                val = self.evaluate(rbm)
            elif validation is not None:
                val = reconstruction_rms(rbm, validation)
            else:
                val = None
            self._finish_epoch(report, epoch + 1, float(np.mean(batch_rms)), val)
        return rbm, report


def train_rbm(data, n_hidden, cfg=None, validation=None, bias_unit=False, logger_manager=None, progress=None):
    """训练单层 RBM，返回 (Rbm, TrainReport)"""
    return RbmTrainer(cfg, logger_manager, progress).train(data, n_hidden, bias_unit=bias_unit,
                                                           validation=validation)
