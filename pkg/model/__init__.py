# 模型包初始化文件
# 训练器都继承 BaseTrainer，实现 train(self, data, ...) -> (模型, TrainReport)

from .base import TrainConfig, TrainReport, BaseTrainer, progress_line
from .rbm import (Rbm, RbmTrainer, init_rbm, hidden_probs, visible_probs, cd1_step,
                  positive_statistics, train_rbm)
from .stack import (DeepAutoencoder, StackTrainer, JOINT, TRANSLATIONAL, autoencode, encode,
                    validation_error, model_inputs, train_stack)
from .translational import TranslationalTrainer, train_trbm, trbm_loss, target_entropy
from .persistence import save_model, load_model

__all__ = [
    'TrainConfig',
    'TrainReport',
    'BaseTrainer',
    'Rbm',
    'RbmTrainer',
    'DeepAutoencoder',
    'StackTrainer',
    'TranslationalTrainer',
    'JOINT',
    'TRANSLATIONAL',
    'init_rbm',
    'hidden_probs',
    'visible_probs',
    'cd1_step',
    'positive_statistics',
    'train_rbm',
    'train_stack',
    'autoencode',
    'encode',
    'validation_error',
    'model_inputs',
    'train_trbm',
    'trbm_loss',
    'target_entropy',
    'save_model',
    'load_model',
    'progress_line',
]
