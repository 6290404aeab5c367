# -*- encoding: UTF-8 -*-
"""
超参数扫描：每次只改变一个轴（层数、每层单元数、批大小、轮数），每个取值训练一个模型
"""

import os
import time
import traceback
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from functools import partial
from typing import List

import pandas as pd
from colorama import Fore
from tqdm import tqdm

import utils
from errors import DomainError
from evaluation import PUBLISHED_VALIDATION_RMS
from imaging import joint_size
from logger_manager import LoggerManager
from model import TrainConfig, StackTrainer, validation_error, progress_line
from settings import PipelineConfig

STANDARD_GRIDS = {
    'depth': (2, 3, 4),
    'hidden_units': (500, 1000, 2000),
    'batch_size': (10, 50, 100, 200),
    'epochs': (5, 50, 250),
}
SWEEP_COLUMNS = ['axis', 'value', 'val_rms', 'train_rms', 'seconds']
FAILED = 'FAILED'


@dataclass
class SweepGrid:
    """单轴扫描网格，其余配置固定"""
    axis: str
    values: List[int] = field(default_factory=list)

    def __post_init__(self):
        if self.axis not in STANDARD_GRIDS:
            raise DomainError(f"未知扫描轴: {self.axis!r}，可选 {tuple(STANDARD_GRIDS)}")
        self.values = [int(v) for v in (self.values or STANDARD_GRIDS[self.axis])]
        if any(v <= 0 for v in self.values):
            raise DomainError(f"扫描取值必须为正: {self.values}")

    @classmethod
    def from_config(cls, config):
        return cls(config['sweep.axis'], list(config['sweep.values']))

    def leg_config(self, base, leg_index):
        """第 leg_index 个取值对应的完整配置，种子为 seed xor leg_index"""
        value = self.values[leg_index]
        layers = tuple(base['train.layer_sizes'])
        if self.axis == 'depth':
            overrides = {'train.layer_sizes': (layers[0],) * value}
        elif self.axis == 'hidden_units':
            overrides = {'train.layer_sizes': (value,) * len(layers)}
        elif self.axis == 'batch_size':
            overrides = {'train.batch_size': value}
        else:
            overrides = {'train.epochs': value}
        overrides['seed'] = base.seed ^ leg_index
        return base.replace(**{k.replace('.', '__'): v for k, v in overrides.items()})

    def __len__(self):
        return len(self.values)


def _leg_progress(prefix, phase, epoch, train_value, val_value):
    print(progress_line(f"{prefix}/{phase}", epoch, val_value), flush=True)


def run_leg(task):
    """
    训练一个扫描点（可在子进程中运行）
    :param task: (序号, 轴, 取值, 配置字典, 训练数据, 验证数据, 配置回显路径)
    :return: 一行扫描结果
    """
    leg_index, axis, value, values, train, val, echo_path = task
    config = PipelineConfig(values)
    config.write_echo(echo_path)
    start_time = time.time()
    progress = partial(_leg_progress, f"sweep.{axis}={value}")
    trainer = StackTrainer(TrainConfig.from_pipeline(config), LoggerManager(), progress)
    model, _ = trainer.train(train, config['train.layer_sizes'], validation=val,
                             expected_visible=joint_size(config.work_dims))
    val_rms = validation_error(model, val) if val is not None else float('nan')
    train_rms = validation_error(model, train)
    return {'axis': axis, 'value': value, 'val_rms': val_rms, 'train_rms': train_rms,
            'seconds': time.time() - start_time}


class SweepRunner:
    """扫描执行器：workers > 1 时各扫描点在独立进程中训练，结果按网格顺序合并"""

    def __init__(self, config, logger_manager=None, workers=None):
        self.config = config
        self.logger_manager = logger_manager or LoggerManager()
        self.logger = self.logger_manager.get_logger("sweep")
        self.workers = max(1, workers or config['sweep.workers'])

    def _tasks(self, grid, train, val, echo_dir):
        os.makedirs(echo_dir, exist_ok=True)
        tasks = []
        for leg_index, value in enumerate(grid.values):
            leg = grid.leg_config(self.config, leg_index)
            echo_path = os.path.join(echo_dir, f"leg_{leg_index:02d}_{grid.axis}_{value}.conf")
            tasks.append((leg_index, grid.axis, value, dict(leg.values), train, val, echo_path))
        return tasks

    def _failed_row(self, grid, leg_index, seconds):
        return {'axis': grid.axis, 'value': grid.values[leg_index], 'val_rms': FAILED,
                'train_rms': FAILED, 'seconds': seconds}

    def run(self, grid, train, val, out_dir):
        """
        :return: (按网格顺序的结果行, 失败数)
        """
        tasks = self._tasks(grid, train, val, os.path.join(out_dir, 'sweep'))
        results = [None] * len(tasks)
        self.logger.info(f"开始扫描 {grid.axis}: {grid.values}，{self.workers} 个进程")
        progress_bar = tqdm(total=len(tasks), desc=f"扫描 {grid.axis}", unit="点", ncols=100)

        if self.workers == 1:
            for task in tasks:
                results[task[0]] = self._run_one(grid, task)
                progress_bar.update(1)
        else:
            with ProcessPoolExecutor(max_workers=self.workers) as executor:
                future_to_leg = {executor.submit(run_leg, task): task[0] for task in tasks}
                started = time.time()
                for future in as_completed(future_to_leg):
                    leg_index = future_to_leg[future]
                    try:
                        results[leg_index] = future.result()
                    except Exception as e:
                        self.logger.error(f"扫描点 {grid.axis}={grid.values[leg_index]} 失败: {str(e)}")
                        self.logger.error(traceback.format_exc())
                        results[leg_index] = self._failed_row(grid, leg_index, time.time() - started)
                    progress_bar.update(1)
        progress_bar.close()

        failed = sum(1 for row in results if row['val_rms'] == FAILED)
        return results, failed

    def _run_one(self, grid, task):
        started = time.time()
        try:
            return run_leg(task)
        except Exception as e:
            self.logger.error(f"扫描点 {grid.axis}={task[2]} 失败: {str(e)}")
            self.logger.error(traceback.format_exc())
            return self._failed_row(grid, task[0], time.time() - started)

    def write_csv(self, rows, path):
        df = pd.DataFrame(rows, columns=SWEEP_COLUMNS)
        df['seconds'] = df['seconds'].map('{:.3f}'.format)
        df.to_csv(path, index=False, lineterminator='\n', na_rep='', encoding='utf-8')
        return path

    def print_summary(self, grid, rows):
        published = PUBLISHED_VALIDATION_RMS.get(grid.axis, {})
        items = []
        for row in rows:
            shown = row['val_rms'] if row['val_rms'] == FAILED else f"{row['val_rms']:.4f}"
            reference = published.get(row['value'])
            if reference is not None:
                shown += f"（文献 {reference}）"
            items.append((f"{grid.axis}={row['value']}", shown))
        color = Fore.RED if any(row['val_rms'] == FAILED for row in rows) else Fore.CYAN
        utils.print_summary(f"扫描结果 {grid.axis}", items, color)
