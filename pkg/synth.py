# -*- encoding: UTF-8 -*-
"""
合成超声序列：平滑单值曲线 + 不对称亮带 + 乘性 Rayleigh 斑点噪声，
附带已知真值轮廓，用于替代无法获得的真实录制数据。
"""

import math
import os
import time
from dataclasses import dataclass, asdict

import numpy as np
from tqdm import tqdm

from errors import DomainError
from imaging import (UltrasoundFrame, ContourPointSet, DEFAULT_MM_PER_PX,
                     WORK_WIDTH, WORK_HEIGHT, save_pgm, write_contour, frame_path, contour_path)
from logger_manager import LoggerManager
from numerics import RandomStream, derive_seed
from utils import write_manifest

SPLIT_SALT = 200


@dataclass
class SynthConfig:
    """合成序列参数"""
    frames: int = 2050
    width: int = 99
    height: int = 90
    band_sigma: float = 2.0       # 亮带上侧高斯宽度（像素），下侧为其 1/4
    drift_rate: float = 1.0       # 每帧每列最大位移（像素）
    rayleigh_scale: float = 1.0
    background_level: float = 0.1
    seed: int = 0
    noise: bool = True

    def validate(self):
        if self.frames < 1:
            raise DomainError(f"frames 必须 >= 1: {self.frames}")
        if self.width < WORK_WIDTH or self.height < WORK_HEIGHT:
            raise DomainError(f"图像尺寸至少为 {WORK_WIDTH}x{WORK_HEIGHT}: {self.width}x{self.height}")
        if self.drift_rate < 0:
            raise DomainError(f"drift_rate 不能为负: {self.drift_rate}")
        if self.rayleigh_scale <= 0:
            raise DomainError(f"rayleigh_scale 必须为正: {self.rayleigh_scale}")
        if self.band_sigma <= 0:
            raise DomainError(f"band_sigma 必须为正: {self.band_sigma}")
        if not 0 <= self.background_level < 1:
            raise DomainError(f"background_level 超出 [0,1): {self.background_level}")

    @classmethod
    def from_settings(cls, section, seed):
        return cls(frames=section["frames"], width=section["width"], height=section["height"],
                   band_sigma=section["band_sigma"], drift_rate=section["drift_rate"],
                   rayleigh_scale=section["rayleigh_scale"],
                   background_level=section["background_level"],
                   seed=seed, noise=section["noise"])


class _CurveFamily:
    """y(x) = a0 + a1*u + a2*u^2 + b*sin(2*pi*k*u + phase)，u 为归一化列坐标"""

    def __init__(self, cfg, rng):
        w, h = cfg.width, cfg.height
        amp = 0.2 * h
        self.u = np.arange(w, dtype=np.float64) / max(w - 1, 1) - 0.5
        self.a0 = h * (0.4 + 0.2 * rng.uniform())
        self.a1 = amp * (2.0 * rng.uniform() - 1.0)
        self.a2 = amp * (2.0 * rng.uniform() - 1.0)
        self.b = 0.25 * amp * rng.uniform()
        self.cycles = 0.5 + rng.uniform()
        self.phase = 2.0 * math.pi * rng.uniform()
        # 缓慢运动：整体升降 + 相位推进
        self.lift_amp = 0.1 * h * rng.uniform()
        self.lift_period = 20.0 + 40.0 * rng.uniform()
        self.lift_phase = 2.0 * math.pi * rng.uniform()
        self.phase_speed = 0.2 * rng.uniform()
        self.lo = max(3.0 * cfg.band_sigma, 1.0)
        self.hi = h - 1.0 - max(cfg.band_sigma, 1.0)

    def at(self, t):
        lift = self.lift_amp * math.sin(2.0 * math.pi * t / self.lift_period + self.lift_phase)
        y = (self.a0 + lift + self.a1 * self.u + self.a2 * self.u ** 2
             + self.b * np.sin(2.0 * math.pi * self.cycles * (self.u + 0.5) + self.phase + self.phase_speed * t))
        return np.clip(y, self.lo, self.hi)


def render_frame(y, cfg, rng=None):
    """按曲线渲染一帧：背景 + 亮带（下侧更陡），可选乘性斑点"""
    rows = np.arange(cfg.height, dtype=np.float64)[:, None]
    d = rows - y[None, :]
    sigma = np.where(d < 0, cfg.band_sigma, cfg.band_sigma / 4.0)
    band = (1.0 - cfg.background_level) * np.exp(-d ** 2 / (2.0 * sigma ** 2))
    clean = np.clip(cfg.background_level + band, 0.0, 1.0)
    if not cfg.noise:
        return clean
    # 斑点乘子按均值归一，图像期望亮度不变
    speckle = rng.rayleigh(cfg.rayleigh_scale, size=clean.shape)
    speckle /= cfg.rayleigh_scale * math.sqrt(math.pi / 2.0)
    return np.clip(clean * speckle, 0.0, 1.0)


def gen_sequence(cfg, mm_per_px=DEFAULT_MM_PER_PX):
    """
    生成合成序列
    :return: (帧列表, 真值轮廓列表)，真值每列一个点
    """
    cfg.validate()
    rng = RandomStream(cfg.seed)
    curve = _CurveFamily(cfg, rng)
    xs = np.arange(cfg.width, dtype=np.float64)

    frames, truths = [], []
    y = curve.at(0)
    for t in range(cfg.frames):
        if t > 0:
            step = np.clip(curve.at(t) - y, -cfg.drift_rate, cfg.drift_rate)
            y = y + step
        frames.append(UltrasoundFrame(render_frame(y, cfg, rng), mm_per_px=mm_per_px, frame_index=t))
        truths.append(ContourPointSet(np.column_stack([xs, y])))
    return frames, truths


def assign_splits(n, test_frames, validation_fraction, seed):
    """随机选出测试帧，再从其余帧中随机选出验证帧"""
    if test_frames < 0 or test_frames >= n:
        raise DomainError(f"测试帧数 {test_frames} 必须小于总帧数 {n}")
    if not 0 <= validation_fraction < 1:
        raise DomainError(f"validation_fraction 超出 [0,1): {validation_fraction}")
    rng = RandomStream(derive_seed(seed, SPLIT_SALT))
    splits = np.array(["train"] * n, dtype=object)
    test = rng.choice(n, test_frames) if test_frames else np.array([], dtype=np.int64)
    splits[test] = "test"
    rest = np.flatnonzero(splits == "train")
    n_val = int(round(validation_fraction * len(rest)))
    if n_val:
        splits[rest[rng.choice(len(rest), n_val)]] = "val"
    return list(splits)


class SequenceSynthesizer:
    """合成序列并写出 PGM、真值轮廓和清单文件"""

    def __init__(self, logger_manager=None):
        self.logger_manager = logger_manager or LoggerManager()
        self.logger = self.logger_manager.get_logger("synth")

    def write(self, cfg, data_dir, stem="frame", test_frames=50, validation_fraction=0.1,
              mm_per_px=DEFAULT_MM_PER_PX, echo=None):
        start_time = time.time()
        self.logger.info(f"开始生成合成序列: {cfg.frames} 帧 {cfg.width}x{cfg.height}, seed={cfg.seed}")
        frames, truths = gen_sequence(cfg, mm_per_px=mm_per_px)
        splits = assign_splits(len(frames), test_frames, validation_fraction, cfg.seed)

        frame_dir = os.path.join(data_dir, "frames")
        truth_dir = os.path.join(data_dir, "truth")
        os.makedirs(frame_dir, exist_ok=True)
        os.makedirs(truth_dir, exist_ok=True)

        rows = []
        for frame, truth, split in tqdm(zip(frames, truths, splits), total=len(frames),
                                        desc="写出合成帧", unit="帧", ncols=100):
            fpath = frame_path(frame_dir, stem, frame.frame_index)
            tpath = contour_path(truth_dir, stem, frame.frame_index)
            save_pgm(frame, fpath)
            write_contour(truth, tpath, comment=f"truth frame {frame.frame_index}")
            rows.append({
                'index': frame.frame_index,
                'frame': os.path.relpath(fpath, data_dir),
                'truth': os.path.relpath(tpath, data_dir),
                'split': split,
            })

        header = [f"seed = {cfg.seed}"]
        if echo:
            header += [line for line in echo.splitlines() if line and not line.startswith(("#", "seed "))]
        else:
            header += [f"synth.{k} = {v}" for k, v in asdict(cfg).items() if k != "seed"]
        manifest = write_manifest(rows, os.path.join(data_dir, "manifest.txt"), header)
        counts = {s: splits.count(s) for s in ("train", "val", "test")}
        self.logger.info(f"合成完成: {counts}，用时 {time.time() - start_time:.1f} 秒，清单 {manifest}")
        return manifest
