# 二进制容器模块
#
# 数据集与模型检查点共用的文件布局:
#
#   偏移 0        8 字节魔数 (例如 b'KAEDATA1', b'KAECKPT1')
#   偏移 8        4 字节无符号整数, 小端序, JSON 头部的字节长度 H
#   偏移 12       H 字节 UTF-8 JSON 头部, 其中 'blocks' 为 [{'name', 'shape'}] 列表
#   偏移 12+H     按 'blocks' 顺序依次存放的数据块, 每块为行主序的 float64 小端序数值
#
# 文件长度必须恰好等于 12 + H + 8 * Σ prod(shape)。

import json
import logging
import os
import struct
from typing import Dict, List, Tuple

import numpy as np

from .errors import DatasetIOError

logger = logging.getLogger(__name__)

_LENGTH = struct.Struct('<I')
_DTYPE = np.dtype('<f8')


def write_container(path: str, magic: bytes, header: Dict, blocks: List[Tuple[str, np.ndarray]]) -> None:
    """
    写入二进制容器

    参数:
        path: 文件路径
        magic: 8 字节魔数
        header: 可 JSON 序列化的头部信息
        blocks: (名称, 数组) 列表, 数组按行主序写出
    """
    if len(magic) != 8:
        raise ValueError("魔数必须为 8 字节")

    header = dict(header)
    header['blocks'] = [{'name': name, 'shape': list(np.shape(array))} for name, array in blocks]
    header_bytes = json.dumps(header, sort_keys=True, ensure_ascii=False).encode('utf-8')

    try:
        directory = os.path.dirname(os.path.abspath(path))
        os.makedirs(directory, exist_ok=True)
        with open(path, 'wb') as f:
            f.write(magic)
            f.write(_LENGTH.pack(len(header_bytes)))
            f.write(header_bytes)
            for _, array in blocks:
                f.write(np.ascontiguousarray(array, dtype=_DTYPE).tobytes(order='C'))
    except OSError as e:
        logger.error(f"写入文件失败: {path}, {e}")
        raise DatasetIOError(f"写入文件失败 ({e.strerror})", path) from e


def read_container(path: str, magic: bytes) -> Tuple[Dict, Dict[str, np.ndarray]]:
    """
    读取二进制容器

    参数:
        path: 文件路径
        magic: 期望的 8 字节魔数

    返回:
        (头部字典, {块名称: 数组})
    """
    try:
        with open(path, 'rb') as f:
            raw = f.read()
    except OSError as e:
        logger.error(f"读取文件失败: {path}, {e}")
        raise DatasetIOError(f"读取文件失败 ({e.strerror})", path) from e

    if raw[:8] != magic:
        raise DatasetIOError(f"文件魔数不匹配, 期望 {magic!r}", path)
    if len(raw) < 12:
        raise DatasetIOError("文件被截断", path)

    (header_length,) = _LENGTH.unpack(raw[8:12])
    try:
        header = json.loads(raw[12:12 + header_length].decode('utf-8'))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise DatasetIOError("头部无法解析", path) from e

    offset = 12 + header_length
    blocks = {}
    for block in header.get('blocks', []):
        shape = tuple(block['shape'])
        count = int(np.prod(shape)) if shape else 1
        end = offset + count * _DTYPE.itemsize
        if end > len(raw):
            raise DatasetIOError(f"数据块 {block['name']} 被截断", path)
        blocks[block['name']] = np.frombuffer(raw[offset:end], dtype=_DTYPE).reshape(shape).astype(np.float64)
        offset = end

    if offset != len(raw):
        raise DatasetIOError("文件尾部存在多余字节", path)

    return header, blocks
