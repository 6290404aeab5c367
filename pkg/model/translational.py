# -*- encoding: UTF-8 -*-
"""
tRBM：只看超声输入的第一层，训练目标是联合底层在完整联合向量上给出的隐藏概率。
上层参数保持不变，解码仍使用联合底层。
"""

import numpy as np
from scipy.special import xlogy

from errors import DomainError, ModeError
from imaging import us_part
from numerics import RandomStream
from model.base import BaseTrainer
from model.rbm import Rbm, Velocity, hidden_probs
from model.stack import DeepAutoencoder, JOINT, TRANSLATIONAL, validation_error

INIT_MODES = ('joint', 'random')
_EPS = 1e-12


def cross_entropy(q, t):
    """目标概率 t 与预测概率 q 的平均二元交叉熵"""
    q = np.clip(q, _EPS, 1.0 - _EPS)
    return float(-np.mean(xlogy(t, q) + xlogy(1.0 - t, 1.0 - q)))


def target_entropy(t):
    """目标本身的平均二元熵，即交叉熵可达到的下界"""
    t = np.asarray(t, dtype=np.float64)
    return float(-np.mean(xlogy(t, t) + xlogy(1.0 - t, 1.0 - t)))


def trbm_loss(trbm, us, targets):
    return cross_entropy(hidden_probs(trbm, us), targets)


def init_trbm(bottom, cfg, rng, init='joint'):
    """
    初始化 tRBM
    joint: 复制联合底层中超声列和偏置列的权重
    random: 高斯初始化
    """
    split = (bottom.n_visible - 1) // 2
    if init == 'joint':
        W = np.concatenate([bottom.W[:, :split], bottom.W[:, -1:]], axis=1)
        b_visible = np.concatenate([bottom.b_visible[:split], bottom.b_visible[-1:]])
        return Rbm(W, bottom.b_hidden.copy(), b_visible, bias_unit=True)
    if init == 'random':
        W = rng.normal(cfg.init_sigma, (bottom.n_hidden, split + 1))
        return Rbm(W, np.zeros(bottom.n_hidden), np.zeros(split + 1), bias_unit=True)
    raise DomainError(f"未知的 tRBM 初始化方式: {init!r}")


class TranslationalTrainer(BaseTrainer):
    """在冻结的联合模型上训练 tRBM"""

    def __init__(self, cfg=None, logger_manager=None, progress=None, init='joint'):
        super().__init__(cfg, logger_manager, progress)
        if init not in INIT_MODES:
            raise DomainError(f"未知的 tRBM 初始化方式: {init!r}")
        self.init = init

    def train(self, joint_model, us_dataset, joint_dataset, validation=None):
        """
        :param us_dataset: 超声部分加偏置，与 joint_dataset 按行对齐
        :param validation: 验证用联合向量，给出时每轮记录完整重建误差
        :return: (translational 模式的 DeepAutoencoder, TrainReport)
        """
        if joint_model.first_layer_mode != JOINT:
            raise ModeError(f"tRBM 训练需要 joint 模式模型，实际为 {joint_model.first_layer_mode}")
        joint_model.validate()
        us = self._validate_data(us_dataset, "超声数据")
        joint = self._validate_data(joint_dataset, "联合数据")
        bottom = joint_model.layers[0]
        if joint.shape[1] != bottom.n_visible:
            raise DomainError(f"联合数据宽度应为 {bottom.n_visible}，实际为 {joint.shape[1]}")
        if us.shape[0] != joint.shape[0]:
            raise DomainError(f"超声数据 {us.shape[0]} 行与联合数据 {joint.shape[0]} 行不对齐")
        if us.shape != (joint.shape[0], joint_model.split + 1) or not np.array_equal(us, us_part(joint)):
            raise DomainError("超声数据与联合数据的超声部分不一致")

        targets = hidden_probs(bottom, joint)
        rng = RandomStream(self.cfg.seed)
        trbm = init_trbm(bottom, self.cfg, rng, self.init)
        velocity = Velocity(trbm)
        lr, decay = self.cfg.learning_rate, self.cfg.weight_decay
        report = self._start("translate", train_label='train_loss')
        upper = [layer.copy() for layer in joint_model.layers]

        self.logger.info(f"训练 tRBM: {trbm}，{us.shape[0]} 个样本，初始化 {self.init}，"
                         f"目标熵 {target_entropy(targets):.6f}")
        for epoch in range(self.cfg.epochs):
            momentum = self.cfg.momentum_at(epoch)
            for idx in self._batches(us.shape[0], rng):
                x, t = us[idx], targets[idx]
                err = hidden_probs(trbm, x) - t
                grad_W = err.T @ x / len(idx)
                grad_b = err.sum(axis=0) / len(idx)
                velocity.W = -lr * (grad_W + decay * trbm.W) + momentum * velocity.W
                velocity.b_hidden = -lr * grad_b + momentum * velocity.b_hidden
                trbm.W += velocity.W
                trbm.b_hidden += velocity.b_hidden
            loss = trbm_loss(trbm, us, targets)
            val = None
            if validation is not None:
                val = validation_error(DeepAutoencoder(upper, TRANSLATIONAL, trbm), validation)
            self._finish_epoch(report, epoch + 1, loss, val)

        model = DeepAutoencoder(upper, TRANSLATIONAL, trbm).validate()
        return model, report


def train_trbm(joint_model, us_dataset, joint_dataset, cfg=None, validation=None, init='joint',
               logger_manager=None, progress=None):
    """训练 tRBM，返回 (translational 模式模型, TrainReport)"""
    return TranslationalTrainer(cfg, logger_manager, progress, init).train(
        joint_model, us_dataset, joint_dataset, validation=validation)
