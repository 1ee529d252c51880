# -*- coding: utf-8 -*-

"""
极简的反向模式自动微分，作为各模块训练的基础
"""

"""
版权所有 © 2025 TNAFLib 开发者
Copyright © 2025 TNAFLib developers

开源相关声明请见 仓库根目录下的 License.md
Terms & Conditions: License.md in the root directory
"""

from .node import (
    Node,
    ParamSet,
    as_node,
    backward,
    check_finite,
    checked,
    is_checked,
    is_grad_enabled,
    no_grad,
)
from .ops import (
    add,
    concat,
    cumsum,
    div,
    elementwise,
    exp,
    getitem,
    layer_norm,
    log,
    log_sigmoid,
    logsumexp,
    masked_softmax,
    matmul,
    mean,
    mul,
    neg,
    reshape,
    scatter,
    sigmoid,
    softmax,
    softplus,
    sqrt,
    square,
    sub,
    sum_,
    tanh,
    transpose,
    where,
)
from .utils import fd_gradient
from .constants import MASK_SURROGATE

__all__ = [
    # 图与参数
    "Node",
    "ParamSet",
    "as_node",
    "backward",
    "check_finite",
    "checked",
    "is_checked",
    "is_grad_enabled",
    "no_grad",
    # 运算
    "add",
    "concat",
    "cumsum",
    "div",
    "elementwise",
    "exp",
    "getitem",
    "layer_norm",
    "log",
    "log_sigmoid",
    "logsumexp",
    "masked_softmax",
    "matmul",
    "mean",
    "mul",
    "neg",
    "reshape",
    "scatter",
    "sigmoid",
    "softmax",
    "softplus",
    "sqrt",
    "square",
    "sub",
    "sum_",
    "tanh",
    "transpose",
    "where",
    # 测试用
    "fd_gradient",
    "MASK_SURROGATE",
]
