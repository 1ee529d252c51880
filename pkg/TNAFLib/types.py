# -*- coding: utf-8 -*-

"""
类型定义
"""

"""
版权所有 © 2025 TNAFLib 开发者
Copyright © 2025 TNAFLib developers

开源相关声明请见 仓库根目录下的 License.md
Terms & Conditions: License.md in the root directory
"""


from typing import Any, Dict, Tuple, Protocol, runtime_checkable

import numpy as np
import numpy.typing as npt

Tensor = npt.NDArray[np.float64]
"""带形状的 64 位浮点数组，全部计算的基本单元"""


@runtime_checkable
class InvertibleHead(Protocol):
    """逐维可逆变换头所需实现的接口"""

    name: str
    base_kind: str

    def psi_dim(self) -> int: ...
    def init_params(self, params: Any, rng: np.random.Generator) -> None: ...
    def forward(self, x: Any, psi: Any, params: Any) -> Tuple[Any, Any]: ...
    def begin_inverse(self, y: Tensor, params: Any) -> Dict[str, Any]: ...
    def invert_position(
        self, state: Dict[str, Any], i: int, psi_i: Tensor, params: Any
    ) -> Tensor: ...
