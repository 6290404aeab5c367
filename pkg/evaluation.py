# -*- encoding: UTF-8 -*-
"""
轮廓比较：平均距离和（MSD）、像素到毫米换算、逐帧比较报告
"""

import logging
import os
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy.spatial import distance

from errors import DomainError
from imaging import ContourPointSet, DEFAULT_MM_PER_PX, LITERATURE_MM_PER_PX, read_contour, list_contours

logger = logging.getLogger("evaluation")

REPORT_COLUMNS = ['pair', 'frame', 'msd_px', 'msd_mm']

# 已发表的参考值，只用于汇总时对照显示
PUBLISHED_PAIR_MSD_MM = {
    'Hand vs Ref': 0.9,
    'Hand vs DL': 1.0,
    'Ref vs DL': 0.8,
}
PUBLISHED_LITERATURE_MSD_MM = {
    'expert vs expert': 0.85,
    'EdgeTrak vs expert': 0.67,
    'EdgeTrak (other study)': 0.86,
    'DBN cross-validated': 0.73,
}
# 各超参数网格上的验证误差
PUBLISHED_VALIDATION_RMS = {
    'depth': {2: 0.39, 3: 0.38, 4: 0.44},
    'hidden_units': {500: 0.41, 1000: 0.38, 2000: 0.37},
    'batch_size': {10: 0.65, 50: 0.53, 100: 0.38, 200: 0.40},
    'epochs': {5: 0.41, 50: 0.38, 250: 0.40},
}

# DL 与 Ref 质量相当的判定：MSD(DL, Truth) <= 1.5 * MSD(Ref, Truth) + 1.0 px
COMPARABLE_RATIO = 1.5
COMPARABLE_SLACK_PX = 1.0


@dataclass
class MsdResult:
    value_px: float
    value_mm: float
    mm_per_px: float
    n_points_u: int
    n_points_v: int


def _points(contour):
    pts = contour.points if isinstance(contour, ContourPointSet) else np.asarray(contour, dtype=np.float64)
    return np.asarray(pts, dtype=np.float64).reshape(-1, 2)


def msd(u, v):
    """
    平均距离和（L1）：两条曲线上每个点到另一条曲线最近点的距离之和，除以总点数 m+n
    """
    a, b = _points(u), _points(v)
    if len(a) == 0 or len(b) == 0:
        raise DomainError(f"轮廓为空: {len(a)} 点, {len(b)} 点")
    d = distance.cdist(a, b, 'cityblock')
    return float((d.min(axis=0).sum() + d.min(axis=1).sum()) / (len(a) + len(b)))


def px_to_mm(msd_px, mm_per_px=DEFAULT_MM_PER_PX):
    if mm_per_px <= 0:
        raise DomainError(f"mm_per_px 必须为正: {mm_per_px}")
    return msd_px * mm_per_px


def msd_result(u, v, mm_per_px=DEFAULT_MM_PER_PX):
    value = msd(u, v)
    return MsdResult(value, px_to_mm(value, mm_per_px), mm_per_px, len(_points(u)), len(_points(v)))


class ComparisonReport:
    """逐帧比较结果，附带每组的平均值与排除帧计数"""

    def __init__(self, mm_per_px=DEFAULT_MM_PER_PX):
        self.mm_per_px = mm_per_px
        self.rows = []
        self.excluded = {}
        self.pairs = []

    def add_pair(self, label):
        if label not in self.pairs:
            self.pairs.append(label)
            self.excluded.setdefault(label, 0)

    def add(self, label, frame, msd_px):
        self.add_pair(label)
        self.rows.append((label, int(frame), float(msd_px), px_to_mm(float(msd_px), self.mm_per_px)))

    def exclude(self, label, frame):
        self.add_pair(label)
        self.excluded[label] += 1
        logger.debug(f"{label}: 帧 {frame} 轮廓无效，已排除")

    def frame_rows(self, label=None):
        return [row for row in self.rows if label is None or row[0] == label]

    def average_px(self, label):
        values = [row[2] for row in self.frame_rows(label)]
        return float(np.mean(values)) if values else None

    def average_mm(self, label):
        values = [row[3] for row in self.frame_rows(label)]
        return float(np.mean(values)) if values else None

    def to_frame(self):
        return pd.DataFrame(self.rows, columns=REPORT_COLUMNS)

    def write_csv(self, path):
        """逐帧行之后是每组的汇总行 pair,AVERAGE,,mm"""
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        averages = pd.DataFrame(
            [(label, 'AVERAGE', np.nan, np.nan if self.average_mm(label) is None else self.average_mm(label))
             for label in self.pairs], columns=REPORT_COLUMNS)
        df = pd.concat([self.to_frame().astype({'frame': object}), averages], ignore_index=True)
        df.to_csv(path, index=False, lineterminator='\n', na_rep='', encoding='utf-8')
        return path

    def summary(self):
        """[(组, 平均 px, 平均 mm, 帧数, 排除数)]"""
        return [(label, self.average_px(label), self.average_mm(label),
                 len(self.frame_rows(label)), self.excluded.get(label, 0)) for label in self.pairs]


def _load_dir(directory, frames=None):
    contours = list_contours(directory)
    if frames is not None:
        wanted = set(frames)
        contours = {idx: path for idx, path in contours.items() if idx in wanted}
    return contours


def compare(comparison_pairs, mm_per_px=DEFAULT_MM_PER_PX, frames=None):
    """
    :param comparison_pairs: [(组名, 目录A, 目录B)]，目录中为按帧序号命名的 .contour 文件
    :param frames: 只比较这些帧序号，None 表示全部
    :return: ComparisonReport
    """
    px_to_mm(0.0, mm_per_px)
    report = ComparisonReport(mm_per_px)
    for label, dir_a, dir_b in comparison_pairs:
        a, b = _load_dir(dir_a, frames), _load_dir(dir_b, frames)
        aligned = sorted(set(a) & set(b))
        if not aligned:
            raise DomainError(f"{label}: {dir_a} 与 {dir_b} 没有对齐的帧")
        report.add_pair(label)
        for idx in aligned:
            u, v = read_contour(a[idx]), read_contour(b[idx])
            if not u.valid or not v.valid:
                report.exclude(label, idx)
                continue
            report.add(label, idx, msd(u, v))
        logger.info(f"{label}: {len(report.frame_rows(label))} 帧，排除 {report.excluded[label]} 帧，"
                    f"平均 {report.average_mm(label)} mm")
    return report


def comparable_quality(dl_truth_px, ref_truth_px):
    """DL 与 Ref 的质量是否相当"""
    return dl_truth_px <= COMPARABLE_RATIO * ref_truth_px + COMPARABLE_SLACK_PX


def literature_mm(msd_px):
    """按文献使用的 0.295 mm/px 换算，便于与文献值对照"""
    return px_to_mm(msd_px, LITERATURE_MM_PER_PX)
