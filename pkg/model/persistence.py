# -*- encoding: UTF-8 -*-
"""
模型文件读写

格式（小端）：
    "TRB1" | 版本 u32 | 模式 u8 (0 joint, 1 translational) | 层数 u32
    每层: n_visible u32, n_hidden u32, W (行优先 f64), b_hidden f64, b_visible f64
    只有第一层和 tRBM 的最后一个可见分量是常数偏置，读取时按此还原 bias_unit
    translational 模式在最后追加 tRBM，编码相同
    末尾 u64: 之前所有字节的 FNV-1a 校验和
"""

import logging
import os
import struct

import numpy as np

from errors import DomainError, ParseError
from model.rbm import Rbm
from model.stack import DeepAutoencoder, JOINT, TRANSLATIONAL
from utils import fnv1a_64

logger = logging.getLogger("persistence")

MAGIC = b"TRB1"
FORMAT_VERSION = 1
MODE_CODES = {JOINT: 0, TRANSLATIONAL: 1}
_F8 = np.dtype('<f8')


def _encode_layer(rbm):
    return b"".join([
        struct.pack("<II", rbm.n_visible, rbm.n_hidden),
        rbm.W.astype(_F8).tobytes(order='C'),
        rbm.b_hidden.astype(_F8).tobytes(),
        rbm.b_visible.astype(_F8).tobytes(),
    ])


def encode_model(model):
    """序列化为字节串；文件中不存 bias_unit，只接受第一层和 tRBM 带常数偏置分量的模型"""
    model.validate()
    flags = [layer.bias_unit for layer in model.layers]
    if flags != [k == 0 for k in range(len(flags))] or (model.trbm is not None and not model.trbm.bias_unit):
        raise DomainError(f"模型文件要求只有第一层（及 tRBM）带常数偏置分量，实际为 {flags}")
    body = bytearray(MAGIC)
    body += struct.pack("<I", FORMAT_VERSION)
    body += struct.pack("<B", MODE_CODES[model.first_layer_mode])
    body += struct.pack("<I", len(model.layers))
    for layer in model.layers:
        body += _encode_layer(layer)
    if model.first_layer_mode == TRANSLATIONAL:
        body += _encode_layer(model.trbm)
    body += struct.pack("<Q", fnv1a_64(body))
    return bytes(body)


def save_model(model, path):
    data = encode_model(model)
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "wb") as f:
        f.write(data)
    logger.info(f"模型已保存: {path} ({model}, {len(data)} 字节)")
    return path


class _Reader:
    def __init__(self, data):
        self.data = data
        self.pos = 0
        # 校验和之前的有效负载
        self.end = len(data) - 8

    def take(self, n, what):
        if n > self.end - self.pos:
            raise ParseError(f"{what} 超出文件末尾（需要 {n} 字节，剩余 {self.end - self.pos}）", self.pos)
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt, what):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))

    def array(self, count, what):
        return np.frombuffer(self.take(count * _F8.itemsize, what), dtype=_F8).astype(np.float64)

    def layer(self, index, bias_unit):
        offset = self.pos
        n_visible, n_hidden = self.unpack("<II", f"第 {index} 层尺寸")
        if n_visible == 0 or n_hidden == 0:
            raise ParseError(f"第 {index} 层尺寸为零: {n_visible}x{n_hidden}", offset)
        needed = (n_visible * n_hidden + n_visible + n_hidden) * _F8.itemsize
        if needed > self.end - self.pos:
            raise ParseError(f"第 {index} 层尺寸 {n_visible}x{n_hidden} 超出文件长度", offset)
        W = self.array(n_visible * n_hidden, f"第 {index} 层权重").reshape(n_hidden, n_visible)
        b_hidden = self.array(n_hidden, f"第 {index} 层隐藏偏置")
        b_visible = self.array(n_visible, f"第 {index} 层可见偏置")
        try:
            return Rbm(W, b_hidden, b_visible, bias_unit=bias_unit)
        except DomainError as e:
            raise ParseError(f"第 {index} 层参数无效: {e}", offset)


def decode_model(data):
    """由字节串还原模型"""
    if len(data) < len(MAGIC) or data[:len(MAGIC)] != MAGIC:
        raise ParseError("文件头不是 TRB1", 0)
    if len(data) < len(MAGIC) + 4 + 1 + 4 + 8:
        raise ParseError(f"文件过短: {len(data)} 字节", len(data))
    reader = _Reader(data)
    reader.take(len(MAGIC), "文件头")
    version, = reader.unpack("<I", "版本")
    if version != FORMAT_VERSION:
        raise ParseError(f"不支持的版本: {version}", 4)
    mode_code, = reader.unpack("<B", "模式")
    modes = {code: mode for mode, code in MODE_CODES.items()}
    if mode_code not in modes:
        raise ParseError(f"未知模式字节: {mode_code}", 8)
    mode = modes[mode_code]
    count, = reader.unpack("<I", "层数")
    if count == 0:
        raise ParseError("层数为零", 9)

    layers = [reader.layer(k + 1, bias_unit=(k == 0)) for k in range(count)]
    trbm = reader.layer("tRBM", bias_unit=True) if mode == TRANSLATIONAL else None
    if reader.pos != reader.end:
        raise ParseError(f"层数据之后有 {reader.end - reader.pos} 字节多余数据", reader.pos)

    stored, = struct.unpack("<Q", data[reader.end:])
    actual = fnv1a_64(data[:reader.end])
    if stored != actual:
        raise ParseError(f"校验和不一致: 文件 {stored:#018x}，计算 {actual:#018x}", reader.end)

    model = DeepAutoencoder(layers, mode, trbm)
    try:
        return model.validate()
    except DomainError as e:
        raise ParseError(f"层链不一致: {e}")


def load_model(path):
    with open(path, "rb") as f:
        data = f.read()
    try:
        model = decode_model(data)
    except ParseError as e:
        error = ParseError(f"{path}: {e.args[0]}")
        error.offset = e.offset
        raise error from e
    logger.debug(f"模型已加载: {path} ({model})")
    return model
