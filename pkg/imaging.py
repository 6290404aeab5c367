# -*- encoding: UTF-8 -*-
"""
图像读写与预处理：PGM 读写、ROI 裁剪、面积加权降采样、
轮廓点集与二值轮廓图的相互转换、联合样本拼接。

坐标约定：x 为列，y 为行，图像数组形状为 (height, width)，
展平顺序为行优先（第0行在前），全流程共用。
"""

import logging
import os
import re
from dataclasses import dataclass, field

import numpy as np

from errors import DomainError, ParseError

logger = logging.getLogger("imaging")

WORK_WIDTH = 33
WORK_HEIGHT = 30
DEFAULT_MM_PER_PX = 0.35
LITERATURE_MM_PER_PX = 0.295

_WHITESPACE = b" \t\r\n\x0b\x0c"


@dataclass
class UltrasoundFrame:
    """灰度超声帧，强度归一化到 [0,1]"""
    intensities: np.ndarray
    mm_per_px: float = DEFAULT_MM_PER_PX
    frame_index: int = 0

    def __post_init__(self):
        self.intensities = np.asarray(self.intensities, dtype=np.float64)
        if self.intensities.ndim != 2:
            raise DomainError(f"图像必须是二维数组: {self.intensities.shape}")
        if self.mm_per_px <= 0:
            raise DomainError(f"mm_per_px 必须为正: {self.mm_per_px}")
        if self.intensities.size and (self.intensities.min() < 0 or self.intensities.max() > 1):
            raise DomainError("强度超出 [0,1]")

    @property
    def width(self):
        return self.intensities.shape[1]

    @property
    def height(self):
        return self.intensities.shape[0]

    @property
    def dims(self):
        return (self.width, self.height)


@dataclass
class RasterContour:
    """二值轮廓图；dropped 为越界而被丢弃的点数"""
    mask: np.ndarray
    dropped: int = 0

    @property
    def width(self):
        return self.mask.shape[1]

    @property
    def height(self):
        return self.mask.shape[0]


@dataclass
class ContourPointSet:
    """有序轮廓点 (x, y)，像素坐标"""
    points: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.size == 0:
            pts = np.zeros((0, 2))
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise DomainError(f"轮廓点必须是 (n, 2) 数组: {pts.shape}")
        self.points = pts

    @property
    def valid(self):
        return len(self.points) > 0

    def __len__(self):
        return len(self.points)

    @property
    def xs(self):
        return self.points[:, 0]

    @property
    def ys(self):
        return self.points[:, 1]


# ---------------------------------------------------------------- PGM

def _next_token(data, pos):
    """读取 PGM 头部的下一个字段，跳过空白和注释"""
    n = len(data)
    while pos < n:
        c = data[pos:pos + 1]
        if c in (b"#",):
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif c and c in _WHITESPACE:
            pos += 1
        else:
            break
    start = pos
    while pos < n and data[pos:pos + 1] not in (b"#",) and data[pos] not in _WHITESPACE:
        pos += 1
    if start == pos:
        raise ParseError("PGM 头部被截断", start)
    return data[start:pos], start, pos


def _header_int(data, pos, name):
    token, start, pos = _next_token(data, pos)
    if not token.isdigit():
        raise ParseError(f"PGM {name} 不是整数: {token!r}", start)
    return int(token), pos


def load_pgm(path, mm_per_px=DEFAULT_MM_PER_PX, frame_index=0):
    """读取 P5/P2 格式 PGM，强度 = 原始值 / maxval"""
    with open(path, "rb") as f:
        data = f.read()

    magic, start, pos = _next_token(data, 0)
    if magic not in (b"P5", b"P2"):
        raise ParseError(f"不支持的 PGM 类型: {magic!r}", start)
    width, pos = _header_int(data, pos, "width")
    height, pos = _header_int(data, pos, "height")
    maxval, pos = _header_int(data, pos, "maxval")
    if width <= 0 or height <= 0:
        raise ParseError(f"PGM 尺寸无效: {width}x{height}", pos)
    if not 0 < maxval <= 65535:
        raise ParseError(f"PGM maxval 无效: {maxval}", pos)
    count = width * height

    if magic == b"P5":
        # 头部之后恰好一个空白字符
        pos += 1
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        need = count * dtype.itemsize
        if len(data) - pos < need:
            raise ParseError(f"PGM 像素数据被截断: 需要 {need} 字节，剩余 {len(data) - pos}", len(data))
        raw = np.frombuffer(data, dtype=dtype, count=count, offset=pos).astype(np.float64)
    else:
        body = data[pos:]
        body = re.sub(rb"#[^\r\n]*", b"", body)
        tokens = body.split()
        if len(tokens) < count:
            raise ParseError(f"PGM 像素数据被截断: 需要 {count} 个值，实际 {len(tokens)}", len(data))
        try:
            raw = np.array([int(t) for t in tokens[:count]], dtype=np.float64)
        except ValueError as e:
            raise ParseError(f"PGM 像素值无效: {e}", pos)

    if raw.max(initial=0) > maxval:
        raise ParseError(f"像素值超过 maxval {maxval}", pos)
    intensities = (raw / maxval).reshape(height, width)
    return UltrasoundFrame(intensities, mm_per_px=mm_per_px, frame_index=frame_index)


def save_pgm(frame, path, maxval=255, binary=True):
    """保存为 PGM（默认 P5）"""
    if not 0 < maxval <= 65535:
        raise DomainError(f"maxval 无效: {maxval}")
    raw = np.floor(np.clip(frame.intensities, 0.0, 1.0) * maxval + 0.5).astype(np.int64)
    height, width = raw.shape
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "wb") as f:
        if binary:
            f.write(f"P5\n{width} {height}\n{maxval}\n".encode("ascii"))
            dtype = ">u2" if maxval > 255 else "u1"
            f.write(raw.astype(dtype).tobytes())
        else:
            f.write(f"P2\n{width} {height}\n{maxval}\n".encode("ascii"))
            for row in raw:
                f.write((" ".join(str(v) for v in row) + "\n").encode("ascii"))


# ---------------------------------------------------------------- 几何处理

def crop_roi(frame, rect):
    """裁剪感兴趣区域，rect = (x, y, w, h)"""
    x, y, w, h = (int(v) for v in rect)
    if w <= 0 or h <= 0 or x < 0 or y < 0 or x + w > frame.width or y + h > frame.height:
        raise DomainError(f"ROI {rect} 超出图像范围 {frame.width}x{frame.height}")
    return UltrasoundFrame(frame.intensities[y:y + h, x:x + w].copy(),
                           mm_per_px=frame.mm_per_px, frame_index=frame.frame_index)


def _area_weights(n_in, n_out):
    """一维面积权重矩阵 (n_out, n_in)，每行之和为 1"""
    scale = n_in / n_out
    lo = np.arange(n_out)[:, None] * scale
    hi = lo + scale
    k = np.arange(n_in)[None, :]
    overlap = np.minimum(hi, k + 1) - np.maximum(lo, k)
    return np.clip(overlap, 0.0, None) / scale


def downsample(frame, out_w=WORK_WIDTH, out_h=WORK_HEIGHT):
    """面积加权平均降采样到 out_w x out_h"""
    if frame.width < out_w or frame.height < out_h:
        raise DomainError(f"图像 {frame.width}x{frame.height} 小于目标尺寸 {out_w}x{out_h}")
    rows = _area_weights(frame.height, out_h)
    cols = _area_weights(frame.width, out_w)
    out = rows @ frame.intensities @ cols.T
    return UltrasoundFrame(np.clip(out, 0.0, 1.0), mm_per_px=frame.mm_per_px,
                           frame_index=frame.frame_index)


def _round_half_up(values):
    return np.floor(np.asarray(values, dtype=np.float64) + 0.5).astype(np.int64)


def scale_points(points, from_dims, to_dims):
    """按轴缩放坐标：x * to_w/from_w, y * to_h/from_h"""
    (fw, fh), (tw, th) = from_dims, to_dims
    if min(fw, fh, tw, th) <= 0:
        raise DomainError(f"尺寸必须为正: {from_dims} -> {to_dims}")
    pts = points.points if isinstance(points, ContourPointSet) else np.asarray(points, dtype=np.float64)
    pts = np.asarray(pts, dtype=np.float64).reshape(-1, 2)
    factors = np.array([tw / fw, th / fh])
    return ContourPointSet(pts * factors)


def upscale_points(points, from_dims, to_dims):
    """工作分辨率坐标映射回原始分辨率"""
    return scale_points(points, from_dims, to_dims)


def shift_points(points, dx, dy):
    pts = points.points if isinstance(points, ContourPointSet) else np.asarray(points, dtype=np.float64)
    return ContourPointSet(np.asarray(pts, dtype=np.float64).reshape(-1, 2) + np.array([dx, dy]))


def rasterize_contour(points, w, h, from_dims=None, thickness=1):
    """
    轮廓点集 -> 二值轮廓图
    :param from_dims: 点坐标所在的 (宽, 高)，给出时先缩放到 (w, h)
    :param thickness: 线宽（行数），1 表示每列至多一个像素
    """
    if from_dims is not None:
        points = scale_points(points, from_dims, (w, h))
    elif not isinstance(points, ContourPointSet):
        points = ContourPointSet(points)

    mask = np.zeros((h, w), dtype=np.uint8)
    if not points.valid:
        return RasterContour(mask, 0)

    cols = _round_half_up(points.xs)
    inside = (cols >= 0) & (cols < w)
    dropped = int(np.count_nonzero(~inside))

    # 同一列多个点时取 y 均值
    for col in np.unique(cols[inside]):
        ys = points.ys[inside][cols[inside] == col]
        row = int(_round_half_up(ys.mean()))
        if not 0 <= row < h:
            dropped += len(ys)
            continue
        top = max(0, row - (thickness - 1) // 2)
        bottom = min(h, row + thickness // 2 + 1)
        mask[top:bottom, col] = 1

    if dropped:
        logger.debug(f"栅格化时丢弃 {dropped} 个越界点")
    return RasterContour(mask, dropped)


def vectorize_contour(raster):
    """二值（或灰度）轮廓图 -> 每列强度加权平均行"""
    mask = raster.mask if isinstance(raster, RasterContour) else np.asarray(raster)
    mask = np.asarray(mask, dtype=np.float64)
    mass = mask.sum(axis=0)
    occupied = np.flatnonzero(mass > 0)
    if occupied.size == 0:
        return ContourPointSet()
    rows = np.arange(mask.shape[0], dtype=np.float64)
    ys = (rows @ mask[:, occupied]) / mass[occupied]
    return ContourPointSet(np.column_stack([occupied.astype(np.float64), ys]))


def assemble_joint(us, contour, dims=(WORK_WIDTH, WORK_HEIGHT)):
    """拼接联合样本：超声 | 轮廓 | 常数 1.0"""
    us_arr = us.intensities if isinstance(us, UltrasoundFrame) else np.asarray(us, dtype=np.float64)
    ct_arr = contour.mask if isinstance(contour, RasterContour) else np.asarray(contour)
    w, h = dims
    if us_arr.shape != (h, w) or ct_arr.shape != (h, w):
        raise DomainError(f"联合样本要求两幅 {w}x{h} 图像，实际为 {us_arr.shape} 和 {ct_arr.shape}")
    return np.concatenate([us_arr.ravel(), np.asarray(ct_arr, dtype=np.float64).ravel(), [1.0]])


def joint_size(dims=(WORK_WIDTH, WORK_HEIGHT)):
    return 2 * dims[0] * dims[1] + 1


def us_part(joint):
    """从联合样本中取出超声部分和常数位（translational 模型的输入）"""
    joint = np.atleast_2d(np.asarray(joint, dtype=np.float64))
    split = (joint.shape[1] - 1) // 2
    return np.concatenate([joint[:, :split], joint[:, -1:]], axis=1)


def mm_per_px_from_extent(extent_mm, n_px):
    """由图像物理尺寸换算像素标定"""
    if extent_mm <= 0 or n_px <= 0:
        raise DomainError(f"物理尺寸和像素数必须为正: {extent_mm}, {n_px}")
    return extent_mm / n_px


def burn_contour(frame, points):
    """将轮廓点以最大强度烧录进图像，用于人工检查"""
    out = frame.intensities.copy()
    pts = points.points if isinstance(points, ContourPointSet) else np.asarray(points)
    if len(pts):
        cols = _round_half_up(pts[:, 0])
        rows = _round_half_up(pts[:, 1])
        keep = (cols >= 0) & (cols < frame.width) & (rows >= 0) & (rows < frame.height)
        out[rows[keep], cols[keep]] = 1.0
    return UltrasoundFrame(out, mm_per_px=frame.mm_per_px, frame_index=frame.frame_index)


# ---------------------------------------------------------------- 轮廓文件

def contour_path(directory, stem, index):
    return os.path.join(directory, f"{stem}_{int(index):05d}.contour")


def frame_path(directory, stem, index):
    return os.path.join(directory, f"{stem}_{int(index):05d}.pgm")


def write_contour(points, path, comment=None):
    """写出轮廓文件：每行 x<TAB>y，# 开头为注释"""
    pts = points.points if isinstance(points, ContourPointSet) else np.asarray(points)
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        if comment:
            f.write(f"# {comment}\n")
        for x, y in pts:
            f.write(f"{float(x)!r}\t{float(y)!r}\n")


def read_contour(path):
    """读取轮廓文件"""
    points = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                parts = line.split()
            if len(parts) != 2:
                raise ParseError(f"{path} 第 {lineno} 行格式错误: {line!r}")
            try:
                points.append((float(parts[0]), float(parts[1])))
            except ValueError:
                raise ParseError(f"{path} 第 {lineno} 行不是数字: {line!r}")
    return ContourPointSet(np.array(points).reshape(-1, 2))


_CONTOUR_NAME = re.compile(r"^(?P<stem>.+)_(?P<index>\d{5})\.contour$")


def list_contours(directory):
    """返回 {帧序号: 路径}"""
    result = {}
    if not os.path.isdir(directory):
        return result
    for name in sorted(os.listdir(directory)):
        match = _CONTOUR_NAME.match(name)
        if match:
            result[int(match.group("index"))] = os.path.join(directory, name)
    return result
