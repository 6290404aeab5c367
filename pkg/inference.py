# -*- encoding: UTF-8 -*-
"""
第二阶段：超声帧经 translational 模型重建轮廓图，再逐列取加权重心得到轮廓点
"""

import os
from dataclasses import dataclass

import numpy as np
from tqdm import tqdm

from errors import DomainError, ModeError
from imaging import (UltrasoundFrame, ContourPointSet, WORK_WIDTH, WORK_HEIGHT, crop_roi, downsample,
                     upscale_points, shift_points, burn_contour, save_pgm, write_contour,
                     contour_path, frame_path)
from logger_manager import LoggerManager
from model import TRANSLATIONAL, autoencode


@dataclass
class ExtractionConfig:
    """轮廓提取参数"""
    mask_threshold: float = 0.3
    min_column_mass: float = 0.3

    def validate(self):
        if not 0 <= self.mask_threshold <= 1:
            raise DomainError(f"mask_threshold 超出 [0,1]: {self.mask_threshold}")
        if self.min_column_mass < 0:
            raise DomainError(f"min_column_mass 不能为负: {self.min_column_mass}")
        return self

    @classmethod
    def from_settings(cls, section):
        return cls(mask_threshold=section['mask_threshold'], min_column_mass=section['min_column_mass'])


def working_frame(frame, roi=(), dims=(WORK_WIDTH, WORK_HEIGHT)):
    """裁剪 ROI 并降采样到工作分辨率"""
    if roi:
        frame = crop_roi(frame, roi)
    return downsample(frame, *dims)


def reconstruct_contour_image(model, us, dims=(WORK_WIDTH, WORK_HEIGHT)):
    """
    由工作分辨率超声图重建轮廓图
    :param us: (高, 宽) 数组或 UltrasoundFrame
    :return: (高, 宽) 实数图，取值在 (0,1)
    """
    if model.first_layer_mode != TRANSLATIONAL:
        raise ModeError(f"轮廓重建需要 translational 模式模型，实际为 {model.first_layer_mode}")
    image = us.intensities if isinstance(us, UltrasoundFrame) else np.asarray(us, dtype=np.float64)
    w, h = dims
    if image.shape != (h, w):
        raise DomainError(f"超声图应为 {w}x{h}，实际为 {image.shape}")
    split = w * h
    if model.split != split:
        raise DomainError(f"模型的超声部分长度 {model.split} 与工作尺寸 {w}x{h} 不一致")
    recon = autoencode(model, np.concatenate([image.ravel(), [1.0]]))
    return recon[split:2 * split].reshape(h, w)


def extract_contour(recon_image, cfg=None, original_dims=None):
    """
    逐列：低于 mask_threshold 的值置零，剩余质量不小于 min_column_mass 时输出加权平均行，
    最后放大到原始尺寸。没有任何列通过时返回空点集（无效）。
    """
    cfg = (cfg or ExtractionConfig()).validate()
    image = np.asarray(recon_image, dtype=np.float64)
    if image.ndim != 2:
        raise DomainError(f"重建图必须是二维数组: {image.shape}")
    masked = np.where(image >= cfg.mask_threshold, image, 0.0)
    mass = masked.sum(axis=0)
    columns = np.flatnonzero((mass >= cfg.min_column_mass) & (mass > 0))
    if columns.size == 0:
        return ContourPointSet()
    rows = np.arange(image.shape[0], dtype=np.float64)
    ys = (rows @ masked[:, columns]) / mass[columns]
    points = ContourPointSet(np.column_stack([columns.astype(np.float64), ys]))
    if original_dims is None:
        return points
    return upscale_points(points, (image.shape[1], image.shape[0]), original_dims)


class ContourExtractor:
    """批量提取轮廓并写出 .contour 文件"""

    def __init__(self, model, cfg=None, roi=(), dims=(WORK_WIDTH, WORK_HEIGHT), logger_manager=None):
        if model.first_layer_mode != TRANSLATIONAL:
            raise ModeError(f"轮廓提取需要 translational 模式模型，实际为 {model.first_layer_mode}")
        self.model = model
        self.cfg = (cfg or ExtractionConfig()).validate()
        self.roi = tuple(roi)
        self.dims = tuple(dims)
        self.logger_manager = logger_manager or LoggerManager()
        self.logger = self.logger_manager.get_logger("extract")

    def extract_frame(self, frame):
        """原始帧 -> 原始坐标系下的轮廓点"""
        work = working_frame(frame, self.roi, self.dims)
        recon = reconstruct_contour_image(self.model, work, self.dims)
        if self.roi:
            x, y, w, h = self.roi
            points = extract_contour(recon, self.cfg, (w, h))
            return shift_points(points, x, y) if points.valid else points
        return extract_contour(recon, self.cfg, frame.dims)

    def extract_frames(self, frames, out_dir, stem="frame", overlay_dir=None):
        """
        :return: {帧序号: 轮廓点集}，无效（空）轮廓也写出文件，只含注释行
        """
        results = {}
        empty = 0
        for frame in tqdm(frames, desc="提取轮廓", unit="帧", ncols=100):
            points = self.extract_frame(frame)
            results[frame.frame_index] = points
            if not points.valid:
                empty += 1
                self.logger.warning(f"帧 {frame.frame_index} 没有任何列通过阈值，轮廓为空")
            write_contour(points, contour_path(out_dir, stem, frame.frame_index),
                          comment=f"dl frame {frame.frame_index}" + ("" if points.valid else " empty"))
            if overlay_dir:
                os.makedirs(overlay_dir, exist_ok=True)
                save_pgm(burn_contour(frame, points), frame_path(overlay_dir, stem, frame.frame_index))
        self.logger.info(f"轮廓提取完成: {len(results)} 帧，空轮廓 {empty} 帧")
        return results
