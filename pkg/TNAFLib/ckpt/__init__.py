# -*- coding: utf-8 -*-

"""
模型检查点文件的读写
"""

"""
版权所有 © 2025 TNAFLib 开发者
Copyright © 2025 TNAFLib developers

开源相关声明请见 仓库根目录下的 License.md
Terms & Conditions: License.md in the root directory
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Union

from ..config import RunConfig
from ..data import StandardizationStats
from ..exceptions import TNAFBaseException
from ..main import FlowModel
from .constants import CKPT_FORMAT_VERSION, CKPT_MAGIC
from .exceptions import CheckpointCorruptError
from .utils import decode_checkpoint, dump_header, encode_checkpoint

logger = logging.getLogger(__name__)

__all__ = [
    "Checkpoint",
    "save_checkpoint",
    "load_checkpoint",
    "checkpoint_bytes",
    "encode_checkpoint",
    "decode_checkpoint",
    "dump_header",
    "CheckpointCorruptError",
    "CKPT_FORMAT_VERSION",
    "CKPT_MAGIC",
]


@dataclass
class Checkpoint:
    """读回的检查点"""

    model: FlowModel
    config: RunConfig
    stats: Optional[StandardizationStats]
    """训练时使用的标准化参数，数据未经标准化时为 None"""
    header: Dict[str, Any]


def checkpoint_bytes(
    model: FlowModel,
    config: RunConfig,
    stats: Optional[StandardizationStats] = None,
) -> bytes:
    """检查点的完整字节内容；伪参数不是参数，不会写入"""
    header = {
        "D": model.D,
        "config": config.to_dict(),
        "stats": None if stats is None else stats.to_dict(),
    }
    return encode_checkpoint(
        header, {name: node.value for name, node in model.params.items()}
    )


def save_checkpoint(
    path: Union[str, Path],
    model: FlowModel,
    config: RunConfig,
    stats: Optional[StandardizationStats] = None,
) -> int:
    """写出检查点，返回写入的字节数"""
    data = checkpoint_bytes(model, config, stats)
    Path(path).write_bytes(data)
    logger.debug("检查点已写入 %s：%d 字节，%d 个参数", path, len(data), model.param_count)
    return len(data)


def load_checkpoint(path: Union[str, Path]) -> Checkpoint:
    """
    读取检查点并重建模型

    Raises
    ------
    CheckpointCorruptError
        文件无法读取、格式不符，或文件头与参数对不上
    """
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as error:
        raise CheckpointCorruptError("无法读取 {}".format(path), str(error)) from error

    header, arrays = decode_checkpoint(data)
    try:
        config = RunConfig.from_dict(header["config"])
        model = config.model.build(D=int(header["D"]))
        model.copy_params_from(arrays)
        stats = None if header["stats"] is None else StandardizationStats.from_dict(header["stats"])
        if stats is not None and stats.D != model.D:
            raise CheckpointCorruptError(
                "标准化参数为 {} 维，模型为 {} 维".format(stats.D, model.D)
            )
    except (TNAFBaseException, KeyError, TypeError, ValueError) as error:
        if isinstance(error, CheckpointCorruptError):
            raise
        raise CheckpointCorruptError("文件头与参数不一致", str(error)) from error
    logger.debug("已读取检查点 %s：%d 字节", path, len(data))
    return Checkpoint(model=model, config=config, stats=stats, header=header)
