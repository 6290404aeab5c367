# -*- encoding: UTF-8 -*-
"""
自动标注（Ref 算法）：逐列从上到下寻找"白像素后接黑像素"的候选点，
优先匹配上一帧轮廓，否则参考本帧左侧已选列。
"""

import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd
from tqdm import tqdm

from errors import DomainError
from imaging import ContourPointSet
from logger_manager import LoggerManager

logger = logging.getLogger("autolabel")


@dataclass
class LabelConfig:
    """标注参数，扫描顺序固定为从左到右"""
    binarize_threshold: float = 0.5
    neighbor_radius: int = 3
    column_window: int = 5

    def validate(self):
        if not 0 <= self.binarize_threshold <= 1:
            raise DomainError(f"binarize_threshold 超出 [0,1]: {self.binarize_threshold}")
        if self.neighbor_radius < 0:
            raise DomainError(f"neighbor_radius 不能为负: {self.neighbor_radius}")
        if self.column_window < 1:
            raise DomainError(f"column_window 必须 >= 1: {self.column_window}")

    @classmethod
    def from_settings(cls, section):
        return cls(binarize_threshold=section['binarize_threshold'],
                   neighbor_radius=section['neighbor_radius'],
                   column_window=section['column_window'])


def detect_candidates(column, threshold):
    """返回所有满足 白(>=阈值) 且下一行为黑 的行号"""
    column = np.asarray(column, dtype=np.float64)
    white = column >= threshold
    return [int(r) for r in np.flatnonzero(white[:-1] & ~white[1:])]


def _nearest(candidates, target):
    """离 target 最近的候选，距离相同取较小行号"""
    return min(candidates, key=lambda c: (abs(c - target), c))


def select_point(candidates, prev_point, left_neighbors, cfg, center=None):
    """
    在候选点中选出一个
    (a) 上一帧该列有点且存在候选在 neighbor_radius 内：取最近者
    (b) 否则取离本帧最近 column_window 个已选行中位数最近的候选；
        本帧尚无已选列时参考 center（图像垂直中心）
    (c) 无候选返回 None
    """
    if not candidates:
        return None
    if prev_point is not None and not np.isnan(prev_point):
        within = [c for c in candidates if abs(c - prev_point) <= cfg.neighbor_radius]
        if within:
            return int(_nearest(within, prev_point))
    recent = list(left_neighbors)[-cfg.column_window:]
    if recent:
        return int(_nearest(candidates, float(np.median(recent))))
    if center is not None:
        return int(_nearest(candidates, center))
    return int(min(candidates))


class RefLabeler:
    """序列自动标注器"""

    def __init__(self, cfg=None, logger_manager=None):
        self.cfg = cfg or LabelConfig()
        self.cfg.validate()
        self.logger_manager = logger_manager or LoggerManager()
        self.logger = self.logger_manager.get_logger("autolabel")
        self.coverage = None

    def label_frame(self, frame, prev_rows=None):
        """
        标注单帧
        :param prev_rows: 上一帧每列选中的行（NaN 表示空列），None 表示没有上一帧
        :return: (每列行号数组, 回退次数)
        """
        image = frame.intensities
        height, width = image.shape
        rows = np.full(width, np.nan)
        selected = []
        fallbacks = 0
        center = (height - 1) / 2.0
        for x in range(width):
            candidates = detect_candidates(image[:, x], self.cfg.binarize_threshold)
            if not candidates:
                continue
            prev = None if prev_rows is None else prev_rows[x]
            row = select_point(candidates, prev, selected, self.cfg, center=center)
            matched = prev is not None and not np.isnan(prev) and \
                any(abs(c - prev) <= self.cfg.neighbor_radius for c in candidates)
            if not matched:
                fallbacks += 1
            rows[x] = row
            selected.append(row)
        return rows, fallbacks

    def label_sequence(self, frames):
        """标注整个序列（按帧序号顺序），返回每帧的轮廓点集"""
        if not frames:
            raise DomainError("帧序列为空")
        dims = frames[0].intensities.shape
        contours, records = [], []
        prev_rows = None
        for frame in tqdm(frames, desc="自动标注", unit="帧", ncols=100):
            if frame.intensities.shape != dims:
                raise DomainError(f"帧 {frame.frame_index} 尺寸 {frame.intensities.shape} 与首帧 {dims} 不一致")
            rows, fallbacks = self.label_frame(frame, prev_rows)
            filled = np.flatnonzero(~np.isnan(rows))
            contours.append(ContourPointSet(np.column_stack([filled.astype(np.float64), rows[filled]])))
            records.append({
                'frame_index': frame.frame_index,
                'columns_filled': int(filled.size),
                'fallback_count': fallbacks,
                'coverage': filled.size / dims[1],
            })
            prev_rows = rows

        self.coverage = pd.DataFrame(records, columns=['frame_index', 'columns_filled',
                                                       'fallback_count', 'coverage'])
        self.logger.info(f"自动标注完成: {len(frames)} 帧，平均覆盖率 {self.coverage['coverage'].mean():.3f}")
        return contours


def label_sequence(frames, cfg=None, logger_manager=None):
    return RefLabeler(cfg, logger_manager).label_sequence(frames)
