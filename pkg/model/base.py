# -*- encoding: UTF-8 -*-

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd

from errors import DomainError, NumericError
from logger_manager import LoggerManager


@dataclass
class TrainConfig:
    """训练超参数"""
    epochs: int = 20
    batch_size: int = 100
    learning_rate: float = 0.1
    momentum: float = 0.5
    final_momentum: float = 0.9
    momentum_switch_epoch: int = 5
    weight_decay: float = 0.0002
    init_sigma: float = 0.01
    seed: int = 0

    def validate(self):
        if self.epochs < 0:
            raise DomainError(f"epochs 不能为负: {self.epochs}")
        if self.batch_size < 1:
            raise DomainError(f"batch_size 必须 >= 1: {self.batch_size}")
        if self.learning_rate < 0:
            raise DomainError(f"learning_rate 不能为负: {self.learning_rate}")
        for name in ('momentum', 'final_momentum'):
            value = getattr(self, name)
            if not 0 <= value < 1:
                raise DomainError(f"{name} 超出 [0,1): {value}")
        if self.momentum_switch_epoch < 0:
            raise DomainError(f"momentum_switch_epoch 不能为负: {self.momentum_switch_epoch}")
        if self.weight_decay < 0:
            raise DomainError(f"weight_decay 不能为负: {self.weight_decay}")
        if self.init_sigma < 0:
            raise DomainError(f"init_sigma 不能为负: {self.init_sigma}")
        return self

    def momentum_at(self, epoch):
        """第 epoch 轮（从 0 开始）使用的动量"""
        return self.momentum if epoch < self.momentum_switch_epoch else self.final_momentum

    def with_seed(self, seed):
        return replace(self, seed=seed)

    @classmethod
    def from_pipeline(cls, config, section='train', seed=None):
        """由有效配置构造；translate 节沿用 train.init_sigma"""
        return cls.from_settings(config.section(section), config.seed if seed is None else seed,
                                 init_sigma=config['train.init_sigma']).validate()

    @classmethod
    def from_settings(cls, section, seed, init_sigma=None):
        """由配置节（train 或 translate）构造"""
        return cls(epochs=section['epochs'],
                   batch_size=section['batch_size'],
                   learning_rate=section['learning_rate'],
                   momentum=section['momentum'],
                   final_momentum=section['final_momentum'],
                   momentum_switch_epoch=section['momentum_switch_epoch'],
                   weight_decay=section['weight_decay'],
                   init_sigma=section.get('init_sigma', init_sigma if init_sigma is not None else 0.01),
                   seed=seed)


@dataclass
class TrainReport:
    """逐轮训练记录"""
    phase: str
    train_label: str = 'train_rms'
    val_label: str = 'val_rms'
    rows: list = field(default_factory=list)
    wall_time: float = 0.0

    def add(self, epoch, train_value, val_value=None):
        self.rows.append((epoch, train_value, val_value))

    @property
    def train_values(self):
        return [row[1] for row in self.rows]

    @property
    def val_values(self):
        return [row[2] for row in self.rows]

    @property
    def final_train(self):
        return self.rows[-1][1] if self.rows else None

    @property
    def final_val(self):
        return self.rows[-1][2] if self.rows else None

    def to_frame(self):
        df = pd.DataFrame(self.rows, columns=['epoch', self.train_label, self.val_label])
        df.insert(0, 'phase', self.phase)
        return df

    def __len__(self):
        return len(self.rows)

    def __eq__(self, other):
        """比较记录内容，不比较耗时"""
        if not isinstance(other, TrainReport):
            return NotImplemented
        return (self.phase, self.train_label, self.val_label, self.rows) == \
            (other.phase, other.train_label, other.val_label, other.rows)


def progress_line(phase, epoch, val_value):
    """标准输出上的结构化进度行"""
    shown = 'nan' if val_value is None else f"{val_value:.6f}"
    return f"phase={phase} epoch={epoch} val_rms={shown}"


class BaseTrainer:
    """训练器基类"""

    def __init__(self, cfg=None, logger_manager=None, progress=None):
        self.cfg = (cfg or TrainConfig()).validate()
        self.logger_manager = logger_manager or LoggerManager()
        self.logger = self.logger_manager.get_logger(self.__class__.__name__)
        # progress(phase, epoch, train_value, val_value)，用于进度行输出
        self.progress = progress

    def train(self, data, *args, **kwargs):
        """
        训练模型
        :param data: 二维数组，每行一个样本
        :return: (模型, TrainReport)
        """
        raise NotImplementedError("子类必须实现train方法")

    def _validate_data(self, data, what="训练数据"):
        """检查样本矩阵非空且数值有限"""
        data = np.atleast_2d(np.asarray(data, dtype=np.float64))
        if data.size == 0 or data.shape[0] == 0:
            raise DomainError(f"{what}为空")
        if not np.all(np.isfinite(data)):
            raise NumericError(f"{what}含有非有限数值")
        return data

    def _batches(self, n, rng):
        """每轮打乱一次，按 batch_size 切分下标"""
        order = rng.permutation(n)
        size = self.cfg.batch_size
        return [order[start:start + size] for start in range(0, n, size)]

    def _start(self, phase, train_label='train_rms', val_label='val_rms'):
        self._started = time.time()
        return TrainReport(phase, train_label, val_label)

    def _finish_epoch(self, report, epoch, train_value, val_value=None):
        if not math.isfinite(train_value):
            raise NumericError(f"{report.phase} 第 {epoch} 轮训练误差非有限: {train_value}")
        if val_value is not None and not math.isfinite(val_value):
            raise NumericError(f"{report.phase} 第 {epoch} 轮验证误差非有限: {val_value}")
        report.add(epoch, float(train_value), None if val_value is None else float(val_value))
        report.wall_time = time.time() - self._started
        shown = 'n/a' if val_value is None else f"{val_value:.6f}"
        self.logger.debug(f"{report.phase} epoch {epoch}: {report.train_label}={train_value:.6f} "
                          f"{report.val_label}={shown}")
        if self.progress is not None:
            self.progress(report.phase, epoch, train_value, val_value)
