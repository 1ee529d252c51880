# -*- coding: utf-8 -*-

"""
正权重单隐层网络构成的神经累积分布函数，及其共享参数的条件版本
"""

"""
版权所有 © 2025 TNAFLib 开发者
Copyright © 2025 TNAFLib developers

开源相关声明请见 仓库根目录下的 License.md
Terms & Conditions: License.md in the root directory
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np

from ..constants import DEFAULT_BISECTION_TOL, POSITIVITY_EXP, POSITIVITY_SOFTPLUS
from ..diffcore import Node, as_node, no_grad, ops
from ..exceptions import ContractViolationError, DomainError
from ..types import Tensor
from .constants import BRACKET_MAX_DOUBLINGS, BRACKET_START
from .exceptions import BracketNotFoundError

logger = logging.getLogger(__name__)

LOG_2 = math.log(2.0)

MAX_BISECTION_STEPS = 200
"""二分次数上限；区间宽度到达浮点分辨率后不再缩小"""

BISECTION_REFINEMENT = 1e-6
"""二分持续到区间宽度小于 tol × BISECTION_REFINEMENT"""


def cdf_psi_dim(hidden: int) -> int:
    """CDF 头每一维的伪参数个数 3H + 1"""
    return 3 * hidden + 1


@dataclass
class CdfPsi:
    """CDF 网络的原始（取正之前的）权重与偏置"""

    w1: Node
    b1: Node
    w2: Node
    b2: Node

    @classmethod
    def from_flat(cls, psi) -> "CdfPsi":
        """最后一轴按 [w1(H), b1(H), w2(H), b2(1)] 排列"""
        psi = as_node(psi)
        hidden = (psi.shape[-1] - 1) // 3
        if psi.shape[-1] != cdf_psi_dim(hidden):
            raise ContractViolationError(
                "CDF 伪参数宽度 {} 不是 3H+1 的形式".format(psi.shape[-1])
            )
        return cls(
            w1=psi[..., :hidden],
            b1=psi[..., hidden : 2 * hidden],
            w2=psi[..., 2 * hidden : 3 * hidden],
            b2=psi[..., 3 * hidden],
        )


@dataclass
class SharedCdfPhi:
    """共享 CDF 的全局参数：与输入相关的正权重，以及与条件嵌入相关的无约束权重"""

    w1: Node
    """[H]"""
    b1: Node
    """[H]"""
    w2: Node
    """[H]"""
    b2: Node
    """标量"""
    W1_hat: Node
    """[H × E]"""
    w2_hat: Node
    """[1 × E]"""


def _positive(raw: Node, positivity: str) -> Tuple[Node, Node]:
    """返回 (正权重, 其对数)"""
    if positivity == POSITIVITY_EXP:
        return ops.exp(raw), raw
    if positivity == POSITIVITY_SOFTPLUS:
        weight = ops.softplus(raw)
        return weight, ops.log(weight)
    raise ContractViolationError("未知的取正方式：{}".format(positivity))


def _monotone_logit(x, w1, b1, w2, b2, positivity: str) -> Tuple[Node, Node]:
    """u = tanh(w1⁺ x + b1)ᵀ w2⁺ + b2 及 log(du/dx)"""
    x = as_node(x)
    pw1, log_w1 = _positive(as_node(w1), positivity)
    pw2, log_w2 = _positive(as_node(w2), positivity)
    a = pw1 * ops.reshape(x, x.shape + (1,)) + b1
    u = ops.sum_(ops.tanh(a) * pw2, axis=-1) + b2
    # log(1 - tanh²(a)) = 2(log 2 - a - softplus(-2a))
    log_dtanh = 2.0 * (LOG_2 - a - ops.softplus(-2.0 * a))
    return u, ops.logsumexp(log_w2 + log_dtanh + log_w1, axis=-1)


def _monotone_cdf(x, w1, b1, w2, b2, positivity: str) -> Tuple[Node, Node]:
    """
    y = sig(u)，对数导数全程在对数空间计算
    """
    u, log_du = _monotone_logit(x, w1, b1, w2, b2, positivity)
    return ops.sigmoid(u), ops.log_sigmoid(u) + ops.log_sigmoid(-u) + log_du


def cdf_fwd(x, psi: CdfPsi, positivity: str = POSITIVITY_EXP) -> Tuple[Node, Node]:
    """CDF 变换，返回 (y ∈ (0, 1), log|dy/dx|)"""
    return _monotone_cdf(x, psi.w1, psi.b1, psi.w2, psi.b2, positivity)


def cdf_logit(x, psi: CdfPsi, positivity: str = POSITIVITY_EXP) -> Node:
    """CDF 变换在 sigmoid 之前的值 u = logit(y)"""
    return _monotone_logit(x, psi.w1, psi.b1, psi.w2, psi.b2, positivity)[0]


def _shared_biases(h, phi: SharedCdfPhi) -> Tuple[Node, Node]:
    h = as_node(h)
    b1 = h @ ops.transpose(phi.W1_hat) + phi.b1
    conditioning = h @ ops.transpose(phi.w2_hat)
    return b1, ops.reshape(conditioning, conditioning.shape[:-1]) + phi.b2


def shared_cdf_fwd(
    x, h, phi: SharedCdfPhi, positivity: str = POSITIVITY_EXP
) -> Tuple[Node, Node]:
    """
    条件 CDF：嵌入 h 通过无约束权重加到两层的偏置上，对 x 的单调性不受影响

    h = 0 时与同参数的 cdf_fwd 完全一致
    """
    b1, b2 = _shared_biases(h, phi)
    return _monotone_cdf(x, phi.w1, b1, phi.w2, b2, positivity)


def shared_cdf_logit(x, h, phi: SharedCdfPhi, positivity: str = POSITIVITY_EXP) -> Node:
    """条件 CDF 在 sigmoid 之前的值"""
    b1, b2 = _shared_biases(h, phi)
    return _monotone_logit(x, phi.w1, b1, phi.w2, b2, positivity)[0]


def bisect_increasing(
    f: Callable[[Tensor], Tensor], y: Tensor, tol: float = DEFAULT_BISECTION_TOL
) -> Tensor:
    """
    对严格单调递增的 f 逐元素求解 f(x) = y

    从 [-1, 1] 起向外加倍扩张区间（至多 64 次）直到包住 y，
    再二分到宽度小于 tol × BISECTION_REFINEMENT 或相邻浮点数，返回区间中点

    Raises
    ------
    BracketNotFoundError
        扩张次数用尽仍未包住 y，附带第一个出错元素的下标
    """
    if tol <= 0:
        raise ContractViolationError("二分容差必须为正")
    y = np.asarray(y, dtype=np.float64)
    lo = np.full(y.shape, -BRACKET_START)
    hi = np.full(y.shape, BRACKET_START)

    for doubling in range(BRACKET_MAX_DOUBLINGS + 1):
        low_short = f(lo) > y
        high_short = f(hi) < y
        if not (np.any(low_short) or np.any(high_short)):
            break
        if doubling == BRACKET_MAX_DOUBLINGS:
            bad = np.flatnonzero((low_short | high_short).reshape(-1))
            raise BracketNotFoundError(
                "目标值 {:.17g}".format(float(y.reshape(-1)[bad[0]])),
                sample_index=int(bad[0]),
            )
        lo = np.where(low_short, lo * 2.0, lo)
        hi = np.where(high_short, hi * 2.0, hi)

    logger.debug("二分区间已确定，最大宽度 %.3g", float(np.max(hi - lo)) if y.size else 0.0)
    width = tol * BISECTION_REFINEMENT
    for _ in range(MAX_BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        active = (hi - lo >= width) & (mid > lo) & (mid < hi)
        if not np.any(active):
            break
        below = f(mid) < y
        lo = np.where(active & below, mid, lo)
        hi = np.where(active & ~below, mid, hi)
    return 0.5 * (lo + hi)


def _check_unit_interval(y: Tensor) -> Tensor:
    y = np.asarray(y, dtype=np.float64)
    if np.any(~((y > 0.0) & (y < 1.0))):
        raise DomainError("CDF 逆变换要求 0 < y < 1")
    return y


def _logit(y: Tensor) -> Tensor:
    return np.log(y) - np.log1p(-y)


def cdf_inv(
    y, psi: CdfPsi, tol: float = DEFAULT_BISECTION_TOL, positivity: str = POSITIVITY_EXP
) -> Tensor:
    """
    以二分法求 CDF 变换的逆

    在 logit 空间比较 u(x) 与 logit(y)，y 靠近 0 或 1 时 sigmoid 的饱和不影响二分
    """
    target = _logit(_check_unit_interval(y))

    def f(x: Tensor) -> Tensor:
        with no_grad():
            return cdf_logit(x, psi, positivity).value

    return bisect_increasing(f, target, tol)


def shared_cdf_inv(
    y,
    h,
    phi: SharedCdfPhi,
    tol: float = DEFAULT_BISECTION_TOL,
    positivity: str = POSITIVITY_EXP,
) -> Tensor:
    """以二分法求条件 CDF 的逆，同样在 logit 空间比较"""
    target = _logit(_check_unit_interval(y))

    def f(x: Tensor) -> Tensor:
        with no_grad():
            return shared_cdf_logit(x, h, phi, positivity).value

    return bisect_increasing(f, target, tol)
