# -*- coding: utf-8 -*-

"""
单调有理二次样条，区间 [-B, B] 之外为恒等映射
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

from ..constants import DEFAULT_SPLINE_BOUND
from ..diffcore import Node, as_node, no_grad, ops
from ..exceptions import ContractViolationError
from ..types import Tensor
from .constants import (
    BOUNDARY_DERIVATIVE,
    MIN_BIN_HEIGHT,
    MIN_BIN_WIDTH,
    MIN_DERIVATIVE,
    XI_TOLERANCE,
)
from .exceptions import SplineRootError


def spline_psi_dim(bins: int) -> int:
    """每个样条块的伪参数个数 3K - 1"""
    return 3 * bins - 1


@dataclass
class SplinePsi:
    """样条的原始参数，激活后得到节点"""

    raw_widths: Node
    """[..., K]"""
    raw_heights: Node
    """[..., K]"""
    raw_derivs: Node
    """[..., K-1]"""
    bound: float = DEFAULT_SPLINE_BOUND
    """区间半宽 B"""

    @property
    def bins(self) -> int:
        return self.raw_widths.shape[-1]

    @classmethod
    def from_flat(cls, psi, bound: float = DEFAULT_SPLINE_BOUND) -> "SplinePsi":
        """最后一轴按 [宽度(K), 高度(K), 导数(K-1)] 排列"""
        psi = as_node(psi)
        bins = (psi.shape[-1] + 1) // 3
        if bins < 1 or psi.shape[-1] != spline_psi_dim(bins):
            raise ContractViolationError(
                "样条伪参数宽度 {} 不是 3K-1 的形式".format(psi.shape[-1])
            )
        return cls(
            raw_widths=psi[..., :bins],
            raw_heights=psi[..., bins : 2 * bins],
            raw_derivs=psi[..., 2 * bins :],
            bound=bound,
        )


@dataclass
class SplineKnots:
    """激活后的样条节点"""

    x: Node
    """[..., K+1]，严格递增，两端为 ±B"""
    y: Node
    """[..., K+1]"""
    derivs: Node
    """[..., K+1]，两端为 1"""


def _knots(raw: Node, minimum: float, bound: float) -> Node:
    bins = raw.shape[-1]
    fractions = minimum + (1.0 - minimum * bins) * ops.softmax(raw, axis=-1)
    cumulative = ops.cumsum(fractions * (2.0 * bound), axis=-1)
    edge = raw.shape[:-1] + (1,)
    # 两端节点直接取 ±B，避免累加误差
    return ops.concat(
        [
            np.full(edge, -bound),
            cumulative[..., : bins - 1] - bound,
            np.full(edge, bound),
        ],
        axis=-1,
    )


def spline_activate(psi: SplinePsi) -> SplineKnots:
    """
    把原始参数变为节点

    宽度与高度经 softmax 并设下限后归一化到总长 2B，内部导数为 softplus(·) + 1e-3，两端导数固定为 1
    """
    if psi.bins < 1 or psi.bound <= 0:
        raise ContractViolationError("样条要求 K ≥ 1 且 B > 0")
    raw_derivs = as_node(psi.raw_derivs)
    edge = raw_derivs.shape[:-1] + (1,)
    derivs = ops.concat(
        [
            np.full(edge, BOUNDARY_DERIVATIVE),
            ops.softplus(raw_derivs) + MIN_DERIVATIVE,
            np.full(edge, BOUNDARY_DERIVATIVE),
        ],
        axis=-1,
    )
    return SplineKnots(
        x=_knots(as_node(psi.raw_widths), MIN_BIN_WIDTH, psi.bound),
        y=_knots(as_node(psi.raw_heights), MIN_BIN_HEIGHT, psi.bound),
        derivs=derivs,
    )


def _locate(values: Tensor, knots: Tensor) -> Tensor:
    """以内部节点定位分箱下标，范围 [0, K-1]"""
    return np.sum(values[..., None] >= knots[..., 1:-1], axis=-1)


def _one_hot(index: Tensor, width: int) -> Tensor:
    return (np.arange(width) == index[..., None]).astype(np.float64)


def spline_fwd(x, psi: SplinePsi) -> Tuple[Node, Node]:
    """
    样条正变换，返回 (y, log|dy/dx|)；|x| ≥ B 时 y = x 且对数导数为 0
    """
    x = as_node(x)
    knots = spline_activate(psi)
    bound = psi.bound
    inside = np.abs(x.value) < bound
    x_in = ops.where(inside, x, 0.0)

    width = psi.bins + 1
    index = _locate(x_in.value, knots.x.value)
    left, right = _one_hot(index, width), _one_hot(index + 1, width)

    def pick(t: Node, hot: Tensor) -> Node:
        return ops.sum_(t * hot, axis=-1)

    xk, xk1 = pick(knots.x, left), pick(knots.x, right)
    yk, yk1 = pick(knots.y, left), pick(knots.y, right)
    dk, dk1 = pick(knots.derivs, left), pick(knots.derivs, right)

    bin_width = xk1 - xk
    bin_height = yk1 - yk
    slope = bin_height / bin_width
    xi = (x_in - xk) / bin_width
    xi_rest = 1.0 - xi
    cross = xi * xi_rest

    denominator = slope + (dk1 + dk - 2.0 * slope) * cross
    y_in = yk + bin_height * (slope * ops.square(xi) + dk * cross) / denominator
    numerator = dk1 * ops.square(xi) + 2.0 * slope * cross + dk * ops.square(xi_rest)
    log_deriv = (
        2.0 * ops.log(slope) + ops.log(numerator) - 2.0 * ops.log(denominator)
    )

    y = ops.where(inside, y_in, x)
    logdet = ops.where(inside, log_deriv, np.zeros(x.shape))
    return y, logdet


def spline_inv(y, psi: SplinePsi) -> Tensor:
    """
    样条逆变换：在分箱内解关于 ξ 的二次方程，取单调分支的根

    Raises
    ------
    SplineRootError
        [0, 1] 内无根
    """
    y = np.asarray(y, dtype=np.float64)
    with no_grad():
        knots = spline_activate(psi)
    xs, ys, ds = knots.x.value, knots.y.value, knots.derivs.value
    inside = np.abs(y) < psi.bound
    y_in = np.where(inside, y, 0.0)

    index = _locate(y_in, ys)[..., None]

    def take(t: Tensor, offset: int) -> Tensor:
        t = np.broadcast_to(t, index.shape[:-1] + t.shape[-1:])
        return np.take_along_axis(t, index + offset, axis=-1)[..., 0]

    xk, xk1 = take(xs, 0), take(xs, 1)
    yk, yk1 = take(ys, 0), take(ys, 1)
    dk, dk1 = take(ds, 0), take(ds, 1)

    bin_width = xk1 - xk
    bin_height = yk1 - yk
    slope = bin_height / bin_width
    offset = y_in - yk
    curvature = dk1 + dk - 2.0 * slope

    a = bin_height * (slope - dk) + offset * curvature
    b = bin_height * dk - offset * curvature
    c = -slope * offset
    discriminant = b * b - 4.0 * a * c
    if np.any(discriminant < -XI_TOLERANCE * np.maximum(b * b, 1.0)):
        raise SplineRootError("判别式为负")
    xi = (2.0 * c) / (-b - np.sqrt(np.maximum(discriminant, 0.0)))
    if np.any((xi < -XI_TOLERANCE) | (xi > 1.0 + XI_TOLERANCE)):
        raise SplineRootError("ξ 超出 [0, 1]")
    x = xk + np.clip(xi, 0.0, 1.0) * bin_width
    return np.where(inside, x, y)
