# -*- coding: utf-8 -*-

"""
工具函数
"""

"""
版权所有 © 2025 TNAFLib 开发者
Copyright © 2025 TNAFLib developers

开源相关声明请见 仓库根目录下的 License.md
Terms & Conditions: License.md in the root directory
"""

import logging
from typing import Optional

import numpy as np
from rich.console import Console
from rich.logging import RichHandler

from .constants import CLI_HANDLER_NAME, METRICS_LOGGER_NAME
from .exceptions import DimensionError
from .types import Tensor

_stderr_console: Optional[Console] = None


def get_console(stderr: bool = False) -> Console:
    """取得命令行输出所用的控制台"""
    global _stderr_console
    if stderr:
        if _stderr_console is None:
            _stderr_console = Console(stderr=True)
        return _stderr_console
    # 标准输出上的结果行需要保持原样，不做高亮也不折行
    return Console(highlight=False, soft_wrap=True)


def _install_handler(logger: logging.Logger, handler: logging.Handler) -> None:
    """替换此前由命令行装上的处理器，其他处理器保持不动，重复调用不会叠加"""
    for old in [h for h in logger.handlers if h.get_name() == CLI_HANDLER_NAME]:
        logger.removeHandler(old)
    handler.set_name(CLI_HANDLER_NAME)
    logger.addHandler(handler)


def setup_logging(verbosity: int = 0) -> None:
    """
    为命令行配置日志

    Parameters
    ----------
    verbosity: int
        正数更详细（DEBUG），负数更安静（WARNING），0 为 INFO
    """
    level = logging.INFO
    if verbosity > 0:
        level = logging.DEBUG
    elif verbosity < 0:
        level = logging.WARNING

    package_logger = logging.getLogger("TNAFLib")
    _install_handler(
        package_logger,
        RichHandler(console=get_console(stderr=True), show_path=False, markup=False),
    )
    package_logger.setLevel(level)

    # 指标行是给机器读的，不经过 rich 的排版
    metrics_logger = logging.getLogger(METRICS_LOGGER_NAME)
    plain = logging.StreamHandler()
    plain.setFormatter(logging.Formatter("%(message)s"))
    _install_handler(metrics_logger, plain)
    metrics_logger.setLevel(logging.INFO if verbosity >= 0 else logging.WARNING)
    metrics_logger.propagate = False


def as_rows(x, dims: Optional[int] = None) -> Tensor:
    """将 [D] 或 [N, D] 的输入统一为 [N, D] 的 float64 数组"""
    rows = np.asarray(x, dtype=np.float64)
    if rows.ndim == 1:
        rows = rows[None, :]
    if rows.ndim != 2:
        raise DimensionError("输入应为 [D] 或 [N, D]，实际形状 {}".format(rows.shape))
    if dims is not None and rows.shape[1] != dims:
        raise DimensionError(
            "输入维度 {} 与模型维度 {} 不符".format(rows.shape[1], dims)
        )
    return rows


def relative_error(analytic: Tensor, reference: Tensor, floor: float = 1e-6) -> float:
    """
    逐元素相对误差的最大值 |a - r| / max(|a|, |r|, floor)

    floor 防止真值接近零时相对误差被舍入噪声放大
    """
    a = np.asarray(analytic, dtype=np.float64)
    r = np.asarray(reference, dtype=np.float64)
    if a.size == 0:
        return 0.0
    scale = np.maximum(np.maximum(np.abs(a), np.abs(r)), floor)
    return float(np.max(np.abs(a - r) / scale))
