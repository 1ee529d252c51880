# -*- coding: utf-8 -*-

"""
变换器条件网络：在因果掩码下由 x₁…x_{D-1} 生成各维的伪参数
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
from typing import Optional

import numpy as np

from .constants import (
    DEFAULT_EMBEDDING,
    DEFAULT_HEADS,
    DEFAULT_LAYERS,
    DEFAULT_MLP_HIDDEN,
    INIT_EMBEDDING_STD,
    LAYER_NORM_EPS,
)
from .diffcore import MASK_SURROGATE, Node, ParamSet, as_node, ops
from .exceptions import ConfigError, DimensionError
from .types import Tensor

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConditionerConfig:
    """条件网络的结构参数"""

    D: int
    """输入维数"""

    E: int = DEFAULT_EMBEDDING
    """嵌入宽度"""

    heads: int = DEFAULT_HEADS
    """注意力头数"""

    layers: int = DEFAULT_LAYERS
    """编码器层数"""

    mlp_hidden: int = DEFAULT_MLP_HIDDEN
    """编码器 MLP 隐藏宽度"""

    psi_dim: int = 1
    """每个位置输出的伪参数宽度，由变换头决定"""

    identity_head: bool = False
    """投影头为恒等映射（共享 CDF 头），此时 psi_dim == E"""

    def __post_init__(self):
        for field_name in ("D", "E", "heads", "layers", "mlp_hidden", "psi_dim"):
            if getattr(self, field_name) < 1:
                raise ConfigError("{} 必须不小于 1".format(field_name))
        if self.E % self.heads:
            raise ConfigError("嵌入宽度 E={} 不能被头数 {} 整除".format(self.E, self.heads))
        if self.identity_head and self.psi_dim != self.E:
            raise ConfigError("恒等投影头要求 psi_dim == E")

    @property
    def head_width(self) -> int:
        """每个注意力头的宽度"""
        return self.E // self.heads


def conditioner_param_count(config: ConditionerConfig) -> int:
    """
    条件网络参数个数的闭式表达，关于 D 是斜率为 E 的仿射函数
    """
    E, m = config.E, config.mlp_hidden
    per_layer = 2 * E + 4 * (E * E + E) + 2 * E + E * m + m + m * E + E
    head = 0 if config.identity_head else E * config.psi_dim + config.psi_dim
    return 2 * E + E + config.D * E + config.layers * per_layer + head


def init_conditioner_params(
    config: ConditionerConfig,
    rng: np.random.Generator,
    params: Optional[ParamSet] = None,
) -> ParamSet:
    """
    按固定顺序登记并初始化条件网络参数

    权重 ~ U(±1/√fan_in)，偏置为 0，位置嵌入与起始嵌入 ~ N(0, 0.02²)
    """
    params = ParamSet() if params is None else params
    E, m = config.E, config.mlp_hidden

    def weight(name: str, fan_in: int, fan_out: int) -> None:
        bound = 1.0 / math.sqrt(fan_in)
        params.add(name, rng.uniform(-bound, bound, size=(fan_in, fan_out)))

    weight("input_proj.weight", 1, E)
    params.add("input_proj.bias", np.zeros(E))
    params.add("bos", rng.normal(0.0, INIT_EMBEDDING_STD, size=E))
    params.add("positional", rng.normal(0.0, INIT_EMBEDDING_STD, size=(config.D, E)))

    for layer in range(config.layers):
        prefix = "layers.{}.".format(layer)
        params.add(prefix + "ln1.gain", np.ones(E))
        params.add(prefix + "ln1.bias", np.zeros(E))
        for proj in ("q", "k", "v", "o"):
            weight(prefix + "attn.{}.weight".format(proj), E, E)
            params.add(prefix + "attn.{}.bias".format(proj), np.zeros(E))
        params.add(prefix + "ln2.gain", np.ones(E))
        params.add(prefix + "ln2.bias", np.zeros(E))
        weight(prefix + "mlp.w1", E, m)
        params.add(prefix + "mlp.b1", np.zeros(m))
        weight(prefix + "mlp.w2", m, E)
        params.add(prefix + "mlp.b2", np.zeros(E))

    if not config.identity_head:
        weight("head.weight", E, config.psi_dim)
        params.add("head.bias", np.zeros(config.psi_dim))

    logger.debug(
        "条件网络参数已初始化：D=%d E=%d L=%d psi_dim=%d，共 %d 个",
        config.D,
        config.E,
        config.layers,
        config.psi_dim,
        conditioner_param_count(config),
    )
    return params


def causal_mask(D: int) -> Tensor:
    """第 r 行只能看到 c ≤ r 的位置；其余位置为代替 -∞ 的大负数"""
    if D < 1:
        raise DimensionError("掩码尺寸必须不小于 1")
    return np.triu(np.full((D, D), MASK_SURROGATE), k=1)


def embed_sequence(x, params: ParamSet, config: ConditionerConfig) -> Node:
    """
    构造长度为 D 的输入序列 [BoS, e(x₁), …, e(x_{D-1})] 并加上位置嵌入

    x_D 不参与任何条件，因此不被嵌入

    Parameters
    ----------
    x: [N, D]
        输入
    Returns
    -------
    Node[N, D, E]
    """
    x = as_node(x)
    if x.ndim != 2 or x.shape[1] != config.D:
        raise DimensionError(
            "输入形状 {} 与维数 D={} 不符".format(x.shape, config.D)
        )
    n = x.shape[0]
    # 第 0 个位置的输入占位为 0，随后被 BoS 替换
    shifted = ops.concat([np.zeros((n, 1)), x[:, : config.D - 1]], axis=1)
    tokens = ops.reshape(shifted, (n, config.D, 1)) @ params["input_proj.weight"]
    tokens = tokens + params["input_proj.bias"]
    is_first = (np.arange(config.D) == 0)[None, :, None]
    tokens = ops.where(is_first, params["bos"], tokens)
    return tokens + params["positional"]


def _split_heads(a: Node, config: ConditionerConfig) -> Node:
    n = a.shape[0]
    a = ops.reshape(a, (n, config.D, config.heads, config.head_width))
    return ops.transpose(a, (0, 2, 1, 3))


def encoder_layer(
    seq: Node, params: ParamSet, layer: int, config: ConditionerConfig, mask: Tensor
) -> Node:
    """
    前置归一化的编码器层

    u = seq + MHA(ln1(seq))；out = u + MLP(ln2(u))，MLP 隐藏层使用 tanh
    """
    p = "layers.{}.".format(layer)
    n = seq.shape[0]

    normed = ops.layer_norm(seq, params[p + "ln1.gain"], params[p + "ln1.bias"], LAYER_NORM_EPS)
    q = _split_heads(normed @ params[p + "attn.q.weight"] + params[p + "attn.q.bias"], config)
    k = _split_heads(normed @ params[p + "attn.k.weight"] + params[p + "attn.k.bias"], config)
    v = _split_heads(normed @ params[p + "attn.v.weight"] + params[p + "attn.v.bias"], config)

    scores = (q @ ops.transpose(k, (0, 1, 3, 2))) * (1.0 / math.sqrt(config.head_width))
    attended = ops.masked_softmax(scores, mask) @ v
    attended = ops.reshape(ops.transpose(attended, (0, 2, 1, 3)), (n, config.D, config.E))
    u = seq + (attended @ params[p + "attn.o.weight"] + params[p + "attn.o.bias"])

    normed = ops.layer_norm(u, params[p + "ln2.gain"], params[p + "ln2.bias"], LAYER_NORM_EPS)
    hidden = ops.tanh(normed @ params[p + "mlp.w1"] + params[p + "mlp.b1"])
    return u + (hidden @ params[p + "mlp.w2"] + params[p + "mlp.b2"])


def condition(x, params: ParamSet, config: ConditionerConfig) -> Node:
    """
    得到隐藏嵌入 h₁…h_D，第 i 行只依赖 x₁…x_{i-1}

    Returns
    -------
    Node[N, D, E]
    """
    seq = embed_sequence(x, params, config)
    mask = causal_mask(config.D)
    for layer in range(config.layers):
        seq = encoder_layer(seq, params, layer, config, mask)
    return seq


def project_head(hidden: Node, params: ParamSet, config: ConditionerConfig) -> Node:
    """所有位置共用的线性投影头；共享 CDF 头时为恒等映射"""
    if config.identity_head:
        return hidden
    return hidden @ params["head.weight"] + params["head.bias"]
