# -*- encoding: UTF-8 -*-
"""
深度自编码器：逐层贪心训练的 RBM 堆叠，解码使用转置权重（权重共享）
"""

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from errors import DomainError
from imaging import us_part
from numerics import derive_seed, rms_rows, as_matrix
from model.base import BaseTrainer
from model.rbm import Rbm, RbmTrainer, hidden_probs, visible_probs

JOINT = 'joint'
TRANSLATIONAL = 'translational'
MODES = (JOINT, TRANSLATIONAL)


@dataclass
class DeepAutoencoder:
    """RBM 堆叠（底层在前）；translational 模式下第一层编码由 trbm 代替"""
    layers: List[Rbm] = field(default_factory=list)
    first_layer_mode: str = JOINT
    trbm: Optional[Rbm] = None

    def validate(self):
        if not self.layers:
            raise DomainError("模型没有任何层")
        if self.first_layer_mode not in MODES:
            raise DomainError(f"未知模式: {self.first_layer_mode!r}")
        for k in range(1, len(self.layers)):
            below, above = self.layers[k - 1], self.layers[k]
            if below.n_hidden != above.n_visible:
                raise DomainError(f"第 {k} 层隐藏单元数 {below.n_hidden} 与第 {k + 1} 层可见单元数 "
                                  f"{above.n_visible} 不一致")
        if self.first_layer_mode == TRANSLATIONAL:
            if self.trbm is None:
                raise DomainError("translational 模式缺少 tRBM")
            bottom = self.layers[0]
            if self.trbm.n_hidden != bottom.n_hidden:
                raise DomainError(f"tRBM 隐藏单元数 {self.trbm.n_hidden} 与底层 {bottom.n_hidden} 不一致")
            if self.trbm.n_visible != self.split + 1:
                raise DomainError(f"tRBM 可见单元数应为 {self.split + 1}，实际为 {self.trbm.n_visible}")
        elif self.trbm is not None:
            raise DomainError("joint 模式不应包含 tRBM")
        return self

    @property
    def output_size(self):
        return self.layers[0].n_visible

    @property
    def split(self):
        """联合向量中超声部分的长度"""
        return (self.output_size - 1) // 2

    @property
    def input_size(self):
        return self.trbm.n_visible if self.first_layer_mode == TRANSLATIONAL else self.output_size

    @property
    def layer_sizes(self):
        return [layer.n_hidden for layer in self.layers]

    def copy(self):
        return DeepAutoencoder([layer.copy() for layer in self.layers], self.first_layer_mode,
                               None if self.trbm is None else self.trbm.copy())

    def params_equal(self, other):
        if self.first_layer_mode != other.first_layer_mode or len(self.layers) != len(other.layers):
            return False
        if (self.trbm is None) != (other.trbm is None):
            return False
        if self.trbm is not None and not self.trbm.params_equal(other.trbm):
            return False
        return all(a.params_equal(b) for a, b in zip(self.layers, other.layers))

    def __repr__(self):
        sizes = 'x'.join(str(s) for s in [self.input_size] + self.layer_sizes)
        return f"DeepAutoencoder({self.first_layer_mode}, {sizes})"


def encode(model, x):
    """编码到顶层（概率，不采样）"""
    first = model.trbm if model.first_layer_mode == TRANSLATIONAL else model.layers[0]
    h = hidden_probs(first, x)
    for layer in model.layers[1:]:
        h = hidden_probs(layer, h)
    return h


def decode(model, code):
    """用转置权重逐层解码回联合向量"""
    v = code
    for layer in reversed(model.layers):
        v = visible_probs(layer, v)
    return v


def autoencode(model, x):
    """
    编码再解码，输出长度为底层联合向量长度
    :param x: joint 模式为联合向量，translational 模式为超声部分加偏置；也可按行成批
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 0 or x.shape[-1] != model.input_size:
        got = x.shape[-1] if x.ndim else 0
        raise DomainError(f"{model.first_layer_mode} 模式输入长度应为 {model.input_size}，实际为 {got}")
    return decode(model, encode(model, x))


def model_inputs(model, joint_rows):
    """由联合向量得到模型输入：translational 模式只取超声部分和偏置"""
    if model.first_layer_mode == TRANSLATIONAL:
        return us_part(joint_rows)
    return joint_rows


def validation_error(model, dataset):
    """验证集上 输入(完整联合向量) 与重建之间 RMS 的均值"""
    joint = np.atleast_2d(np.asarray(dataset, dtype=np.float64))
    if joint.size == 0 or joint.shape[0] == 0:
        raise DomainError("验证集为空")
    joint = as_matrix(joint, model.output_size)
    recon = autoencode(model, model_inputs(model, joint))
    return float(np.mean(rms_rows(joint, recon)))


class StackTrainer(BaseTrainer):
    """逐层贪心训练联合模式的堆叠"""

    def train(self, data, layer_sizes, validation=None, bias_unit=True, expected_visible=None):
        """
        :param data: 联合向量，每行一个样本
        :param layer_sizes: 各层隐藏单元数，底层在前
        :param expected_visible: 底层可见单元数，给出时检查数据宽度
        :return: (DeepAutoencoder, 每层的 TrainReport 列表)
        """
        layer_sizes = list(layer_sizes)
        if not layer_sizes:
            raise DomainError("layer_sizes 不能为空")
        if any(int(size) <= 0 for size in layer_sizes):
            raise DomainError(f"层尺寸必须为正: {layer_sizes}")
        data = self._validate_data(data)
        if expected_visible is not None and data.shape[1] != expected_visible:
            raise DomainError(f"底层可见单元数应为 {expected_visible}，数据宽度为 {data.shape[1]}")
        if validation is not None:
            validation = self._validate_data(validation, "验证数据")
            if validation.shape[1] != data.shape[1]:
                raise DomainError(f"验证数据宽度 {validation.shape[1]} 与训练数据 {data.shape[1]} 不一致")

        layers, reports = [], []
        inputs = data
        for k, size in enumerate(layer_sizes):
            # 底层使用主种子，上层使用派生种子
            seed = self.cfg.seed if k == 0 else derive_seed(self.cfg.seed, k)
            evaluate = None
            if validation is not None:
                evaluate = self._partial_evaluator(list(layers), validation)
            trainer = RbmTrainer(self.cfg.with_seed(seed), self.logger_manager, self.progress,
                                 phase=f"joint.L{k + 1}", evaluate=evaluate)
            rbm, report = trainer.train(inputs, int(size), bias_unit=bias_unit and k == 0)
            layers.append(rbm)
            reports.append(report)
            inputs = hidden_probs(rbm, inputs)
            self.logger.info(f"第 {k + 1} 层训练完成: {rbm}，最终验证误差 {report.final_val}")

        model = DeepAutoencoder(layers, JOINT).validate()
        return model, reports

    @staticmethod
    def _partial_evaluator(trained, validation):
        def evaluate(rbm):
            return validation_error(DeepAutoencoder(trained + [rbm], JOINT), validation)
        return evaluate


def train_stack(data, layer_sizes, cfg=None, validation=None, bias_unit=True, expected_visible=None,
                logger_manager=None, progress=None):
    """训练联合模式堆叠，返回 (DeepAutoencoder, 每层 TrainReport)"""
    return StackTrainer(cfg, logger_manager, progress).train(
        data, layer_sizes, validation=validation, bias_unit=bias_unit, expected_visible=expected_visible)
