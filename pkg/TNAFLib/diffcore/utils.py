# -*- coding: utf-8 -*-

"""
自动微分核心的工具函数：有限差分梯度
"""

"""
版权所有 © 2025 TNAFLib 开发者
Copyright © 2025 TNAFLib developers

开源相关声明请见 仓库根目录下的 License.md
Terms & Conditions: License.md in the root directory
"""

from typing import Callable, Dict, Optional

import numpy as np

from ..exceptions import ContractViolationError
from ..types import Tensor
from .constants import FD_STEP
from .node import Node, ParamSet, no_grad


def fd_gradient(
    f: Callable[[ParamSet], Node],
    params: ParamSet,
    step: float = FD_STEP,
    coordinates: Optional[Dict[str, Tensor]] = None,
) -> Dict[str, Tensor]:
    """
    以中心差分 (f(p+h) - f(p-h)) / 2h 逐坐标估计梯度

    Parameters
    ----------
    f: Callable[[ParamSet], Node]
        以参数集为输入、返回标量节点的函数
    params: ParamSet
        被扰动的参数集，函数返回前所有值都会复原
    step: float
        差分步长 h
    coordinates: Dict[str, Tensor], optional
        只估计每个参数中这些扁平下标处的梯度，其余位置为 0；默认全部

    Returns
    -------
    Dict[str, Tensor]
        与各参数同形的梯度估计
    """
    if step <= 0:
        raise ContractViolationError("差分步长必须为正")

    def evaluate() -> float:
        with no_grad():
            return f(params).item()

    estimates: Dict[str, Tensor] = {}
    for name, node in params.items():
        flat = node.value.reshape(-1)
        estimate = np.zeros(flat.size, dtype=np.float64)
        indices = (
            range(flat.size)
            if coordinates is None
            else coordinates.get(name, np.zeros(0, dtype=np.int64))
        )
        for k in indices:
            original = flat[k]
            flat[k] = original + step
            upper = evaluate()
            flat[k] = original - step
            lower = evaluate()
            flat[k] = original
            estimate[k] = (upper - lower) / (2.0 * step)
        estimates[name] = estimate.reshape(node.shape)
    return estimates
