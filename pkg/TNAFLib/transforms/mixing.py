# -*- coding: utf-8 -*-

"""
单位下三角线性混合 z' = Lz，行列式恒为 1，保持自回归结构
"""

"""
版权所有 © 2025 TNAFLib 开发者
Copyright © 2025 TNAFLib developers

开源相关声明请见 仓库根目录下的 License.md
Terms & Conditions: License.md in the root directory
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ..diffcore import Node, as_node, ops
from ..exceptions import DimensionError
from ..types import Tensor


def lower_free_count(D: int) -> int:
    """严格下三角自由元个数"""
    return D * (D - 1) // 2


@dataclass
class LowerMixL:
    """以严格下三角自由元表示、对角线隐含为 1 的矩阵 L"""

    free: Node
    """[D(D-1)/2]，按 np.tril_indices(D, -1) 的顺序"""
    D: int

    def __post_init__(self):
        self.free = as_node(self.free)
        if self.free.shape != (lower_free_count(self.D),):
            raise DimensionError(
                "D={} 的下三角自由元应有 {} 个，实际形状 {}".format(
                    self.D, lower_free_count(self.D), self.free.shape
                )
            )

    @classmethod
    def identity(cls, D: int) -> "LowerMixL":
        return cls(free=Node(np.zeros(lower_free_count(D))), D=D)

    def matrix(self) -> Node:
        """完整的 D×D 矩阵"""
        strict = ops.scatter(self.free, (self.D, self.D), np.tril_indices(self.D, -1))
        return strict + np.eye(self.D)


def mix_fwd(z, mixing: LowerMixL) -> Tuple[Node, float]:
    """z' = Lz，作用在最后一轴；对数行列式恒为 0"""
    z = as_node(z)
    if z.shape[-1] != mixing.D:
        raise DimensionError("混合维数 {} 与输入 {} 不符".format(mixing.D, z.shape))
    if z.ndim == 1:
        mixed = ops.reshape(z, (1, mixing.D)) @ ops.transpose(mixing.matrix())
        return ops.reshape(mixed, (mixing.D,)), 0.0
    return z @ ops.transpose(mixing.matrix()), 0.0


def mix_inv(z_mixed, mixing: LowerMixL) -> Tensor:
    """前代法：z_i = z'_i - Σ_{j<i} L_ij z_j"""
    z_mixed = np.asarray(z_mixed, dtype=np.float64)
    lower = mixing.matrix().value
    z = np.empty_like(z_mixed)
    for i in range(mixing.D):
        z[..., i] = z_mixed[..., i] - z[..., :i] @ lower[i, :i]
    return z
