# -*- coding: utf-8 -*-

"""
可微运算
"""

"""
版权所有 © 2025 TNAFLib 开发者
Copyright © 2025 TNAFLib developers

开源相关声明请见 仓库根目录下的 License.md
Terms & Conditions: License.md in the root directory
"""

from typing import Optional, Sequence, Tuple, Union

import numpy as np

from ..exceptions import ContractViolationError, DimensionError, DomainError
from ..types import Tensor
from .constants import ELEMENTWISE_OPS, MASKED_THRESHOLD
from .node import Node, as_node, is_checked, make_node

Axis = Optional[Union[int, Tuple[int, ...]]]


def _check_broadcast(a: Node, b: Node, what: str) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise DimensionError("{} 的操作数形状不可广播：{} 与 {}".format(what, a.shape, b.shape))


# 二元算术


def add(a, b) -> Node:
    a, b = as_node(a), as_node(b)
    _check_broadcast(a, b, "add")
    return make_node(a.value + b.value, (a, b), lambda g: (g, g))


def sub(a, b) -> Node:
    a, b = as_node(a), as_node(b)
    _check_broadcast(a, b, "sub")
    return make_node(a.value - b.value, (a, b), lambda g: (g, -g))


def mul(a, b) -> Node:
    a, b = as_node(a), as_node(b)
    _check_broadcast(a, b, "mul")
    return make_node(
        a.value * b.value, (a, b), lambda g: (g * b.value, g * a.value)
    )


def div(a, b) -> Node:
    a, b = as_node(a), as_node(b)
    _check_broadcast(a, b, "div")
    out = a.value / b.value
    return make_node(out, (a, b), lambda g: (g / b.value, -g * out / b.value))


def neg(a) -> Node:
    a = as_node(a)
    return make_node(-a.value, (a,), lambda g: (-g,))


def square(a) -> Node:
    a = as_node(a)
    return make_node(a.value * a.value, (a,), lambda g: (2.0 * a.value * g,))


def sqrt(a) -> Node:
    a = as_node(a)
    if is_checked() and np.any(a.value < 0):
        raise DomainError("sqrt 的自变量含负数")
    out = np.sqrt(a.value)
    return make_node(out, (a,), lambda g: (0.5 * g / out,))


# 逐元素函数


def exp(a) -> Node:
    a = as_node(a)
    out = np.exp(a.value)
    return make_node(out, (a,), lambda g: (g * out,))


def log(a) -> Node:
    a = as_node(a)
    if is_checked() and np.any(a.value <= 0):
        raise DomainError("log 的自变量含非正数")
    return make_node(np.log(a.value), (a,), lambda g: (g / a.value,))


def tanh(a) -> Node:
    a = as_node(a)
    out = np.tanh(a.value)
    return make_node(out, (a,), lambda g: (g * (1.0 - out * out),))


def _sigmoid(v: Tensor) -> Tensor:
    # 只对 -|v| 取指数，两侧都不溢出且保留小值的相对精度
    e = np.exp(-np.abs(v))
    return np.where(v >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def sigmoid(a) -> Node:
    a = as_node(a)
    out = _sigmoid(a.value)
    return make_node(out, (a,), lambda g: (g * out * (1.0 - out),))


def softplus(a) -> Node:
    """log(1 + e^x)，对大 |x| 稳定"""
    a = as_node(a)
    return make_node(
        np.logaddexp(0.0, a.value), (a,), lambda g: (g * _sigmoid(a.value),)
    )


def log_sigmoid(a) -> Node:
    """log sigmoid(x) = -softplus(-x)"""
    a = as_node(a)
    return make_node(
        -np.logaddexp(0.0, -a.value), (a,), lambda g: (g * _sigmoid(-a.value),)
    )


_UNARY = {
    "tanh": tanh,
    "sigmoid": sigmoid,
    "exp": exp,
    "log": log,
    "softplus": softplus,
    "neg": neg,
}


def elementwise(op: str, *args) -> Node:
    """
    按名称调用逐元素运算

    Parameters
    ----------
    op: str
        add, mul, tanh, sigmoid, exp, log, softplus, neg 之一
    args:
        一元运算一个操作数，add/mul 两个
    """
    if op not in ELEMENTWISE_OPS:
        raise ContractViolationError("未知的逐元素运算：{}".format(op))
    if op == "add":
        return add(*args)
    if op == "mul":
        return mul(*args)
    return _UNARY[op](*args)


# 选择与形状


def where(condition, a, b) -> Node:
    """condition 为真处取 a，否则取 b；condition 不参与求导"""
    cond = np.asarray(condition, dtype=bool)
    a, b = as_node(a), as_node(b)
    out = np.where(cond, a.value, b.value)
    return make_node(
        out, (a, b), lambda g: (np.where(cond, g, 0.0), np.where(cond, 0.0, g))
    )


def reshape(a, shape: Tuple[int, ...]) -> Node:
    a = as_node(a)
    return make_node(a.value.reshape(shape), (a,), lambda g: (g.reshape(a.shape),))


def transpose(a, axes: Optional[Sequence[int]] = None) -> Node:
    a = as_node(a)
    if axes is None:
        axes = tuple(reversed(range(a.ndim)))
    inverse = tuple(np.argsort(axes))
    return make_node(
        np.transpose(a.value, axes), (a,), lambda g: (np.transpose(g, inverse),)
    )


def getitem(a, index) -> Node:
    a = as_node(a)
    parts = index if isinstance(index, tuple) else (index,)
    advanced = any(isinstance(p, (np.ndarray, list)) for p in parts)

    def rule(g):
        full = np.zeros_like(a.value)
        if advanced:
            # 花式索引可能重复取同一位置，需用 add.at 累加
            np.add.at(full, index, g)
        else:
            full[index] += g
        return (full,)

    return make_node(a.value[index], (a,), rule)


def scatter(a, shape: Tuple[int, ...], index) -> Node:
    """新建形状为 shape 的零张量，并把 a 写入 index 处"""
    a = as_node(a)
    out = np.zeros(shape, dtype=np.float64)
    out[index] = a.value
    return make_node(out, (a,), lambda g: (g[index],))


def concat(nodes: Sequence, axis: int = -1) -> Node:
    parts = [as_node(n) for n in nodes]
    values = [p.value for p in parts]
    try:
        out = np.concatenate(values, axis=axis)
    except ValueError:
        raise DimensionError("concat 形状不一致：{}".format([v.shape for v in values]))
    splits = np.cumsum([v.shape[axis] for v in values])[:-1]
    return make_node(out, parts, lambda g: tuple(np.split(g, splits, axis=axis)))


def cumsum(a, axis: int = -1) -> Node:
    a = as_node(a)

    def rule(g):
        return (np.flip(np.cumsum(np.flip(g, axis=axis), axis=axis), axis=axis),)

    return make_node(np.cumsum(a.value, axis=axis), (a,), rule)


# 归约


def _expand_like(g: Tensor, shape: Tuple[int, ...], axis: Axis, keepdims: bool) -> Tensor:
    if axis is not None and not keepdims:
        axes = (axis,) if isinstance(axis, int) else axis
        axes = tuple(ax % len(shape) for ax in axes)
        for ax in sorted(axes):
            g = np.expand_dims(g, ax)
    return np.broadcast_to(g, shape)


def sum_(a, axis: Axis = None, keepdims: bool = False) -> Node:
    a = as_node(a)
    return make_node(
        np.sum(a.value, axis=axis, keepdims=keepdims),
        (a,),
        lambda g: (_expand_like(g, a.shape, axis, keepdims),),
    )


def mean(a, axis: Axis = None, keepdims: bool = False) -> Node:
    a = as_node(a)
    out = np.mean(a.value, axis=axis, keepdims=keepdims)
    count = a.value.size // max(np.size(out), 1)
    return make_node(
        out,
        (a,),
        lambda g: (_expand_like(g, a.shape, axis, keepdims) / count,),
    )


def logsumexp(v, axis: int = -1, keepdims: bool = False) -> Node:
    """
    减去最大值后计算 log Σ exp，常数向量时精确

    Raises
    ------
    DimensionError
        归约轴长度为 0
    """
    v = as_node(v)
    if v.ndim == 0 or v.shape[axis] == 0:
        raise DimensionError("logsumexp 的归约轴为空，形状 {}".format(v.shape))
    shift = np.max(v.value, axis=axis, keepdims=True)
    shifted = np.exp(v.value - shift)
    total = np.sum(shifted, axis=axis, keepdims=True)
    out = np.log(total) + shift
    weights = shifted / total
    if not keepdims:
        out = np.squeeze(out, axis=axis)

    def rule(g):
        if not keepdims:
            g = np.expand_dims(g, axis)
        return (g * weights,)

    return make_node(out, (v,), rule)


def softmax(a, axis: int = -1) -> Node:
    a = as_node(a)
    shifted = np.exp(a.value - np.max(a.value, axis=axis, keepdims=True))
    out = shifted / np.sum(shifted, axis=axis, keepdims=True)

    def rule(g):
        return (out * (g - np.sum(g * out, axis=axis, keepdims=True)),)

    return make_node(out, (a,), rule)


# 线性代数与网络层


def matmul(a, b) -> Node:
    """
    矩阵乘法，支持前导批次维

    Raises
    ------
    DimensionError
        内侧维度不一致，报错信息包含两侧形状
    """
    a, b = as_node(a), as_node(b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise DimensionError("matmul 形状不匹配：{} × {}".format(a.shape, b.shape))
    try:
        out = np.matmul(a.value, b.value)
    except ValueError:
        raise DimensionError("matmul 批次维不可广播：{} × {}".format(a.shape, b.shape))

    def rule(g):
        return (
            np.matmul(g, np.swapaxes(b.value, -1, -2)),
            np.matmul(np.swapaxes(a.value, -1, -2), g),
        )

    return make_node(out, (a, b), rule)


def layer_norm(x, gain, bias, eps: float) -> Node:
    """
    沿最后一轴标准化（有偏方差 + eps），再做逐元素仿射

    Parameters
    ----------
    x: Node[..., E]
    gain, bias: Node[E]
    eps: float
        加在方差上的正数
    """
    x, gain, bias = as_node(x), as_node(gain), as_node(bias)
    if eps <= 0:
        raise ContractViolationError("layer_norm 的 eps 必须为正")
    width = x.shape[-1]
    if gain.shape != (width,) or bias.shape != (width,):
        raise DimensionError(
            "layer_norm 形状不匹配：x {}，gain {}，bias {}".format(
                x.shape, gain.shape, bias.shape
            )
        )
    centred = x.value - np.mean(x.value, axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(np.mean(centred * centred, axis=-1, keepdims=True) + eps)
    normed = centred * inv_std
    out = normed * gain.value + bias.value

    def rule(g):
        dn = g * gain.value
        dx = inv_std * (
            dn
            - np.mean(dn, axis=-1, keepdims=True)
            - normed * np.mean(dn * normed, axis=-1, keepdims=True)
        )
        return (dx, g * normed, g)

    return make_node(out, (x, gain, bias), rule)


def masked_softmax(scores, mask: Tensor) -> Node:
    """
    对 scores + mask 沿最后一轴做 softmax，被遮蔽的位置输出严格为 0

    Parameters
    ----------
    scores: Node[..., n, n]
    mask: Tensor[n, n]
        元素为 0 或代替 -∞ 的大负数

    Raises
    ------
    ContractViolationError
        某一行全部被遮蔽
    """
    scores = as_node(scores)
    mask = np.asarray(mask, dtype=np.float64)
    if scores.shape[-mask.ndim :] != mask.shape:
        raise DimensionError(
            "masked_softmax 形状不匹配：scores {}，mask {}".format(scores.shape, mask.shape)
        )
    blocked = mask <= MASKED_THRESHOLD
    if np.any(np.all(blocked, axis=-1)):
        raise ContractViolationError("掩码中存在全部被遮蔽的行")
    shifted = scores.value + mask
    shifted = np.exp(shifted - np.max(shifted, axis=-1, keepdims=True))
    shifted = np.where(blocked, 0.0, shifted)
    out = shifted / np.sum(shifted, axis=-1, keepdims=True)

    def rule(g):
        return (out * (g - np.sum(g * out, axis=-1, keepdims=True)),)

    return make_node(out, (scores,), rule)
