# -*- coding: utf-8 -*-

"""
检查点的字节级编解码
"""

"""
版权所有 © 2025 TNAFLib 开发者
Copyright © 2025 TNAFLib developers

开源相关声明请见 仓库根目录下的 License.md
Terms & Conditions: License.md in the root directory
"""

import hashlib
import json
import math
from typing import Any, Dict, List, Tuple

import numpy as np

from ..types import Tensor
from .constants import (
    CKPT_BLOB_DTYPE,
    CKPT_FORMAT_VERSION,
    CKPT_HEADER_KEYS,
    CKPT_HEADER_LENGTH,
    CKPT_MAGIC,
)
from .exceptions import CheckpointCorruptError


def dump_header(header: Dict[str, Any]) -> bytes:
    """紧凑、键序固定的 UTF-8 JSON"""
    return json.dumps(header, ensure_ascii=False, separators=(",", ":")).encode("utf-8")


def encode_checkpoint(header: Dict[str, Any], arrays: Dict[str, Tensor]) -> bytes:
    """
    把文件头与按顺序排列的参数编码为检查点字节串

    header 中的 manifest 与 blob_sha256 由本函数填写

    Returns
    -------
    bytes
        魔数 + 头长度 + JSON 头 + 小端 f32 参数块
    """
    manifest: List[Dict[str, Any]] = []
    chunks: List[bytes] = []
    offset = 0
    for name, value in arrays.items():
        chunk = np.ascontiguousarray(value, dtype=CKPT_BLOB_DTYPE).tobytes()
        manifest.append({"name": name, "shape": list(np.shape(value)), "offset": offset})
        chunks.append(chunk)
        offset += len(chunk)
    blob = b"".join(chunks)

    full: Dict[str, Any] = {"format_version": CKPT_FORMAT_VERSION}
    full.update((key, value) for key, value in header.items() if key != "format_version")
    full["manifest"] = manifest
    full["blob_sha256"] = hashlib.sha256(blob).hexdigest()
    text = dump_header(full)
    return CKPT_MAGIC + CKPT_HEADER_LENGTH.pack(len(text)) + text + blob


def _check_manifest(manifest: Any, blob_length: int) -> List[Tuple[str, Tuple[int, ...], int, int]]:
    """偏移必须从 0 开始首尾相接并恰好用完参数块"""
    if not isinstance(manifest, list):
        raise CheckpointCorruptError("manifest 不是列表")
    entries = []
    names = set()
    expected_offset = 0
    for index, entry in enumerate(manifest):
        try:
            name = entry["name"]
            shape = tuple(int(n) for n in entry["shape"])
            offset = int(entry["offset"])
        except (KeyError, TypeError, ValueError):
            raise CheckpointCorruptError("manifest 第 {} 项格式错误".format(index))
        if name in names:
            raise CheckpointCorruptError("参数名重复：{}".format(name))
        if any(n < 0 for n in shape):
            raise CheckpointCorruptError("参数 {} 的形状非法：{}".format(name, shape))
        if offset != expected_offset:
            raise CheckpointCorruptError(
                "参数 {} 的偏移为 {}，应为 {}".format(name, offset, expected_offset)
            )
        length = math.prod(shape) * CKPT_BLOB_DTYPE.itemsize
        names.add(name)
        entries.append((name, shape, offset, length))
        expected_offset += length
    if expected_offset != blob_length:
        raise CheckpointCorruptError(
            "参数块应有 {} 字节，实际 {} 字节".format(expected_offset, blob_length)
        )
    return entries


def decode_checkpoint(data: bytes) -> Tuple[Dict[str, Any], Dict[str, Tensor]]:
    """
    解析检查点字节串

    Returns
    -------
    (header, arrays)
        JSON 文件头，以及按 manifest 顺序排列、已扩展为 float64 的参数

    Raises
    ------
    CheckpointCorruptError
        魔数、长度、JSON、版本、manifest 或校验和任何一处不符
    """
    prefix = len(CKPT_MAGIC) + CKPT_HEADER_LENGTH.size
    if len(data) < prefix:
        raise CheckpointCorruptError("文件过短：{} 字节".format(len(data)))
    if data[: len(CKPT_MAGIC)] != CKPT_MAGIC:
        raise CheckpointCorruptError("魔数不符")
    (header_length,) = CKPT_HEADER_LENGTH.unpack_from(data, len(CKPT_MAGIC))
    if len(data) < prefix + header_length:
        raise CheckpointCorruptError("文件头被截断")

    try:
        header = json.loads(data[prefix : prefix + header_length].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as error:
        raise CheckpointCorruptError("文件头不是合法的 JSON", str(error)) from error
    if not isinstance(header, dict) or any(key not in header for key in CKPT_HEADER_KEYS):
        raise CheckpointCorruptError("文件头缺少必要的键")
    if header["format_version"] != CKPT_FORMAT_VERSION:
        raise CheckpointCorruptError("不支持的格式版本：{}".format(header["format_version"]))

    blob = data[prefix + header_length :]
    entries = _check_manifest(header["manifest"], len(blob))
    if hashlib.sha256(blob).hexdigest() != header["blob_sha256"]:
        raise CheckpointCorruptError("参数块校验和不符")

    arrays: Dict[str, Tensor] = {}
    for name, shape, offset, length in entries:
        if length == 0:
            arrays[name] = np.zeros(shape)
            continue
        values = np.frombuffer(
            blob, dtype=CKPT_BLOB_DTYPE, count=length // CKPT_BLOB_DTYPE.itemsize, offset=offset
        )
        arrays[name] = values.astype(np.float64).reshape(shape)
    return header, arrays
