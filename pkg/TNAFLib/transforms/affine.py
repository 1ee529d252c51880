# -*- coding: utf-8 -*-

"""
仿射变换 y = μ + σx
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
from ..types import Tensor

AFFINE_PSI_DIM = 2


@dataclass
class AffinePsi:
    """仿射变换的伪参数，σ = exp(log_sigma) 恒为正"""

    mu: Node
    log_sigma: Node

    @classmethod
    def from_flat(cls, psi) -> "AffinePsi":
        """由最后一轴为 [μ, log σ] 的张量拆出"""
        psi = as_node(psi)
        return cls(mu=psi[..., 0], log_sigma=psi[..., 1])


def affine_fwd(x, psi: AffinePsi) -> Tuple[Node, Node]:
    """返回 (y, log|dy/dx|) = (μ + σx, log σ)"""
    y = psi.mu + ops.exp(psi.log_sigma) * as_node(x)
    return y, psi.log_sigma


def affine_inv(y, psi: AffinePsi) -> Tensor:
    """x = (y - μ) / σ"""
    mu = as_node(psi.mu).value
    sigma = np.exp(as_node(psi.log_sigma).value)
    return (np.asarray(y, dtype=np.float64) - mu) / sigma
