# -*- coding: UTF-8 -*-
import os

import pandas as pd
from colorama import Fore, Style

from errors import MissingArtifactError, ParseError

FNV_OFFSET_64 = 0xCBF29CE484222325
FNV_PRIME_64 = 0x100000001B3
MASK64 = (1 << 64) - 1

MANIFEST_COLUMNS = ['index', 'frame', 'truth', 'split']


def fnv1a_64(data):
    """64位 FNV-1a 校验和"""
    h = FNV_OFFSET_64
    for byte in data:
        h = ((h ^ byte) * FNV_PRIME_64) & MASK64
    return h


def write_manifest(rows, path, header_lines=()):
    """写出清单：# 注释头 + TSV（index, frame, truth, split）"""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    df = pd.DataFrame(rows, columns=MANIFEST_COLUMNS)
    with open(path, 'w', encoding='utf-8', newline='') as f:
        f.write("# manifest\n")
        for line in header_lines:
            f.write(f"# {line}\n")
        df.to_csv(f, sep='\t', index=False, lineterminator='\n')
    return path


def read_manifest(path):
    """读取清单，路径解析为绝对路径，按帧序号排序"""
    if not os.path.exists(path):
        raise MissingArtifactError("manifest", path)
    try:
        df = pd.read_csv(path, sep='\t', comment='#', dtype={'frame': str, 'truth': str, 'split': str})
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ParseError(f"清单 {path} 解析失败: {e}")
    missing = [col for col in MANIFEST_COLUMNS if col not in df.columns]
    if missing:
        raise ParseError(f"清单 {path} 缺少列: {missing}")
    base = os.path.dirname(os.path.abspath(path))

    def resolve(p):
        if not isinstance(p, str) or p == '-':
            return None
        return p if os.path.isabs(p) else os.path.join(base, p)

    df['frame'] = df['frame'].map(resolve)
    df['truth'] = df['truth'].map(resolve)
    df['index'] = df['index'].astype(int)
    return df.sort_values('index').reset_index(drop=True)


def require(path, artifact):
    """检查前置产物是否存在"""
    if path is None or not os.path.exists(path):
        raise MissingArtifactError(artifact, path)
    return path


def print_summary(title, items, color=Fore.CYAN):
    """彩色打印汇总信息"""
    print(f"\n{color}{'=' * 50}")
    print(f"{title}:")
    for key, value in items:
        print(f"{Fore.WHITE}- {key}: {Fore.GREEN}{value}")
    print(f"{color}{'=' * 50}{Style.RESET_ALL}")
