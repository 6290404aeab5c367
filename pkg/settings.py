# -*- encoding: UTF-8 -*-
"""
配置：默认值 <- 规模档案(desk/full) <- 配置文件 <- 命令行覆盖

配置文件格式为 UTF-8 文本，每行 `key = value`，# 开头为注释，
点号表示层级，例如 `train.batch_size = 100`。
"""

import logging
import math
import os
from collections import OrderedDict

from errors import ConfigError

logger = logging.getLogger("settings")

DEFAULT_CONFIG = OrderedDict([
    ('seed', 20150),
    ('profile', 'desk'),

    ('paths.data_dir', 'data'),
    ('paths.output_dir', 'output'),
    ('paths.model_path', ''),            # 空表示 <output_dir>/joint.trb
    ('paths.trbm_path', ''),             # 空表示 <output_dir>/translational.trb
    ('paths.hand_dir', ''),

    ('imaging.roi', ()),                 # x,y,w,h；空表示整帧
    ('imaging.work_width', 33),
    ('imaging.work_height', 30),
    ('imaging.contour_thickness', 1),
    ('imaging.stem', 'frame'),

    ('synth.frames', 2050),
    ('synth.width', 99),
    ('synth.height', 90),
    ('synth.band_sigma', 2.0),
    ('synth.drift_rate', 1.0),
    ('synth.rayleigh_scale', 1.0),
    ('synth.background_level', 0.1),
    ('synth.noise', True),
    ('synth.test_frames', 50),
    ('synth.validation_fraction', 0.1),

    ('label.binarize_threshold', 0.5),
    ('label.neighbor_radius', 3),
    ('label.column_window', 5),

    ('train.layer_sizes', (300, 300, 300)),
    ('train.epochs', 20),
    ('train.batch_size', 100),
    ('train.learning_rate', 0.1),
    ('train.momentum', 0.5),
    ('train.final_momentum', 0.9),
    ('train.momentum_switch_epoch', 5),
    ('train.weight_decay', 0.0002),
    ('train.init_sigma', 0.01),

    ('translate.epochs', 20),
    ('translate.batch_size', 100),
    ('translate.learning_rate', 0.1),
    ('translate.momentum', 0.5),
    ('translate.final_momentum', 0.9),
    ('translate.momentum_switch_epoch', 5),
    ('translate.weight_decay', 0.0002),
    ('translate.init', 'joint'),

    ('extract.mask_threshold', 0.3),
    ('extract.min_column_mass', 0.3),
    ('extract.overlay', False),

    ('eval.mm_per_px', 0.35),
    ('eval.extent_mm', 0.0),             # 原始帧宽度对应的物理尺寸（mm），大于 0 时按它换算 mm/px

    ('sweep.axis', 'epochs'),
    ('sweep.values', ()),                # 空表示使用该轴的标准网格
    ('sweep.workers', 1),
])

# 规模档案：desk 为工作站验收规模，full 为完整实验规模（17,000 帧，15,000/2,000 划分）
PROFILES = {
    'desk': {},
    'full': {
        'train.layer_sizes': (2000, 2000, 2000),
        'train.epochs': 50,
        'translate.epochs': 50,
        'synth.frames': 17050,
        'synth.validation_fraction': 2000 / 17000,
    },
}

CHOICES = {
    'profile': tuple(PROFILES),
    'translate.init': ('joint', 'random'),
    'sweep.axis': ('depth', 'hidden_units', 'batch_size', 'epochs'),
}

SEED_MAX = (1 << 64) - 1

# 取值范围（闭区间），None 表示不限；元组类型逐项检查
RANGES = {
    'seed': (0, SEED_MAX),
    'imaging.work_width': (1, None),
    'imaging.work_height': (1, None),
    'imaging.contour_thickness': (1, None),
    'synth.frames': (1, None),
    'synth.width': (1, None),
    'synth.height': (1, None),
    'synth.band_sigma': (0.0, None),
    'synth.drift_rate': (0.0, None),
    'synth.rayleigh_scale': (0.0, None),
    'synth.background_level': (0.0, 1.0),
    'synth.test_frames': (0, None),
    'synth.validation_fraction': (0.0, 1.0),
    'label.binarize_threshold': (0.0, 1.0),
    'label.neighbor_radius': (0, None),
    'label.column_window': (1, None),
    'train.layer_sizes': (1, None),
    'train.epochs': (0, None),
    'train.batch_size': (1, None),
    'train.learning_rate': (0.0, None),
    'train.momentum': (0.0, 1.0),
    'train.final_momentum': (0.0, 1.0),
    'train.momentum_switch_epoch': (0, None),
    'train.weight_decay': (0.0, None),
    'train.init_sigma': (0.0, None),
    'translate.epochs': (0, None),
    'translate.batch_size': (1, None),
    'translate.learning_rate': (0.0, None),
    'translate.momentum': (0.0, 1.0),
    'translate.final_momentum': (0.0, 1.0),
    'translate.momentum_switch_epoch': (0, None),
    'translate.weight_decay': (0.0, None),
    'extract.mask_threshold': (0.0, 1.0),
    'extract.min_column_mass': (0.0, None),
    'eval.extent_mm': (0.0, None),
    'sweep.values': (1, None),
    'sweep.workers': (1, None),
}
# 必须严格大于 0
POSITIVE = ('eval.mm_per_px',)
# 元组允许的长度
ARITY = {
    'imaging.roi': (0, 4),
}

_TRUE = ('true', 'yes', 'on', '1')
_FALSE = ('false', 'no', 'off', '0')


def check_value(key, value, line=None):
    """检查取值范围与元组长度，不合法时抛出 ConfigError"""
    if key in ARITY and len(value) not in ARITY[key]:
        raise ConfigError(f"{key} 应有 {' 或 '.join(str(n) for n in ARITY[key])} 个值: {value!r}", line)
    if key == 'imaging.roi' and value and (min(value[:2]) < 0 or min(value[2:]) < 1):
        raise ConfigError(f"imaging.roi 的 x,y 不能为负，w,h 必须为正: {value!r}", line)
    if key in POSITIVE and not value > 0:
        raise ConfigError(f"{key} 必须为正: {value!r}", line)
    if key in RANGES:
        low, high = RANGES[key]
        for item in (value if isinstance(value, tuple) else (value,)):
            if isinstance(item, float) and not math.isfinite(item):
                raise ConfigError(f"{key} 必须是有限数值: {value!r}", line)
            if (low is not None and item < low) or (high is not None and item > high):
                raise ConfigError(f"{key} 超出范围 [{low}, {'' if high is None else high}]: {value!r}", line)
    return value


def parse_value(key, raw, line=None):
    """按默认值的类型解析字符串"""
    default = DEFAULT_CONFIG[key]
    raw = raw.strip()
    try:
        if isinstance(default, bool):
            lowered = raw.lower()
            if lowered not in _TRUE + _FALSE:
                raise ValueError(f"不是布尔值: {raw!r}")
            value = lowered in _TRUE
        elif isinstance(default, int):
            value = int(raw, 0)
        elif isinstance(default, float):
            value = float(raw)
        elif isinstance(default, tuple):
            value = tuple(int(v) for v in raw.split(',')) if raw else ()
        else:
            value = raw
    except ValueError as e:
        raise ConfigError(f"{key} 的值无效: {e}", line)
    if key in CHOICES and value not in CHOICES[key]:
        raise ConfigError(f"{key} 必须是 {CHOICES[key]} 之一: {value!r}", line)
    return check_value(key, value, line)


def format_value(value):
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, tuple):
        return ','.join(str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_config_text(text):
    """解析配置文本，返回 {key: value}，保留文件中的顺序"""
    values = OrderedDict()
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith('#'):
            continue
        if '=' not in stripped:
            raise ConfigError(f"缺少 '=': {stripped!r}", lineno)
        key, raw = stripped.split('=', 1)
        key = key.strip()
        if key not in DEFAULT_CONFIG:
            raise ConfigError(f"未知配置项: {key!r}", lineno)
        values[key] = parse_value(key, raw, lineno)
    return values


class PipelineConfig:
    """流水线的有效配置"""

    def __init__(self, values=None):
        self.values = OrderedDict(DEFAULT_CONFIG)
        if values:
            for key, value in values.items():
                if key not in DEFAULT_CONFIG:
                    raise ConfigError(f"未知配置项: {key!r}")
                self.values[key] = value

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        return self.values.get(key, default)

    @property
    def seed(self):
        return self.values['seed']

    def section(self, name):
        """返回某一节的配置，键名去掉前缀"""
        prefix = name + '.'
        return {k[len(prefix):]: v for k, v in self.values.items() if k.startswith(prefix)}

    def replace(self, **overrides):
        """返回覆盖部分键后的新配置，键名中的点用双下划线表示"""
        values = OrderedDict(self.values)
        for key, value in overrides.items():
            key = key.replace('__', '.')
            if key not in DEFAULT_CONFIG:
                raise ConfigError(f"未知配置项: {key!r}")
            values[key] = value
        return PipelineConfig(values)

    @property
    def work_dims(self):
        return (self.values['imaging.work_width'], self.values['imaging.work_height'])

    def echo(self):
        """以配置文件格式输出全部有效配置"""
        lines = ["# effective configuration"]
        lines += [f"{key} = {format_value(value)}" for key, value in self.values.items()]
        return '\n'.join(lines) + '\n'

    def write_echo(self, path):
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, 'w', encoding='utf-8') as f:
            f.write(self.echo())
        return path

    def __eq__(self, other):
        return isinstance(other, PipelineConfig) and self.values == other.values

    def __repr__(self):
        return f"PipelineConfig(profile={self.values['profile']!r}, seed={self.values['seed']})"


def parse_override(text):
    """解析命令行覆盖 key=value"""
    if '=' not in text:
        raise ConfigError(f"覆盖项应为 key=value: {text!r}")
    key, raw = text.split('=', 1)
    key = key.strip()
    if key not in DEFAULT_CONFIG:
        raise ConfigError(f"未知配置项: {key!r}")
    return key, parse_value(key, raw)


def init(config_file=None, overrides=None):
    """初始化配置"""
    global config
    file_values = OrderedDict()
    if config_file:
        if not os.path.exists(config_file):
            raise ConfigError(f"配置文件不存在: {config_file}")
        with open(config_file, 'r', encoding='utf-8') as f:
            file_values = parse_config_text(f.read())

    overrides = OrderedDict(overrides or {})
    for key, value in overrides.items():
        check_value(key, value)
    profile = overrides.get('profile', file_values.get('profile', DEFAULT_CONFIG['profile']))

    values = OrderedDict(PROFILES[profile])
    values.update(file_values)
    values.update(overrides)
    values['profile'] = profile
    config = PipelineConfig(values)
    logger.debug(f"配置加载完成: {config}")
    return config


def get_config():
    """获取配置"""
    global config
    if 'config' not in globals():
        config = init()
    return config
