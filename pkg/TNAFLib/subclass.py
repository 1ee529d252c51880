# -*- coding: utf-8 -*-

"""
流模型库下属子类：基分布、结果、变换头
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
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from .constants import (
    BASE_STANDARD_NORMAL,
    BASE_UNIT_UNIFORM,
    DEFAULT_AFFINE_BLOCKS,
    DEFAULT_BISECTION_TOL,
    DEFAULT_CDF_HIDDEN,
    DEFAULT_SPLINE_BINS,
    DEFAULT_SPLINE_BLOCKS,
    DEFAULT_SPLINE_BOUND,
    HEAD_AFFINE,
    HEAD_CDF,
    HEAD_SHARED_CDF,
    HEAD_SPLINE,
    HEAD_TYPES,
    POSITIVITY_EXP,
    POSITIVITY_SOFTPLUS,
)
from .diffcore import Node, ParamSet, ops
from .exceptions import ConfigError, InternalInvariantError
from .transforms import (
    AFFINE_PSI_DIM,
    AffinePsi,
    CdfPsi,
    LowerMixL,
    SharedCdfPhi,
    SplinePsi,
    affine_fwd,
    affine_inv,
    cdf_fwd,
    cdf_inv,
    cdf_logit,
    cdf_psi_dim,
    lower_free_count,
    mix_fwd,
    shared_cdf_fwd,
    shared_cdf_inv,
    shared_cdf_logit,
    spline_fwd,
    spline_inv,
    spline_psi_dim,
)
from .types import Tensor

logger = logging.getLogger(__name__)

LOG_2PI = math.log(2.0 * math.pi)

CDF_INITIAL_OUTPUT_MASS = 12.0
"""CDF 头输出层正权重之和在伪参数为零时的取值，决定初始时 y 的可达范围"""

CDF_INITIAL_BIAS_SPREAD = 3.0
"""伪参数为零时隐藏单元的偏置均匀铺开在 [-3, 3]，各单元在不同的 x 处过渡"""


def _spread_biases(hidden: int) -> Tensor:
    if hidden == 1:
        return np.zeros(1)
    return np.linspace(-CDF_INITIAL_BIAS_SPREAD, CDF_INITIAL_BIAS_SPREAD, hidden)


@dataclass(init=False)
class BaseDistribution:
    """基分布：标准正态或单位超立方体上的均匀分布"""

    kind: str

    def __init__(self, kind: str):
        if kind not in (BASE_STANDARD_NORMAL, BASE_UNIT_UNIFORM):
            raise ConfigError("未知的基分布：{}".format(kind))
        self.kind = kind

    def log_density(self, y) -> Node:
        """
        逐行的对数密度

        Raises
        ------
        InternalInvariantError
            均匀分布下 y 落在 [0, 1] 之外
        """
        y = y if isinstance(y, Node) else Node(y)
        if self.kind == BASE_STANDARD_NORMAL:
            return -0.5 * ops.sum_(ops.square(y) + LOG_2PI, axis=-1)
        # sigmoid 在浮点下会饱和到恰好 0 或 1，因此支撑集按闭区间检查
        if np.any(~((y.value >= 0.0) & (y.value <= 1.0))):
            raise InternalInvariantError("均匀基分布下 y 超出 [0, 1]")
        return Node(np.zeros(y.shape[:-1]))

    def sample(self, rng: np.random.Generator, n: int, D: int) -> Tensor:
        if self.kind == BASE_STANDARD_NORMAL:
            return rng.standard_normal((n, D))
        # 取开区间 (0, 1)
        tiny = np.finfo(np.float64).tiny
        return np.clip(rng.random((n, D)), tiny, 1.0 - np.finfo(np.float64).epsneg)


@dataclass
class LogProbResult:
    """对数似然的计算结果，logp == base.log_density(y) + logdet"""

    y: Tensor
    """[N, D] 或 [D]"""
    logdet: Tensor
    """[N] 或标量"""
    logp: Tensor
    """[N] 或标量"""


@dataclass(frozen=True)
class HeadConfig:
    """变换头的超参数"""

    head_type: str = HEAD_CDF
    hidden: int = DEFAULT_CDF_HIDDEN
    """CDF 网络隐藏宽度 H"""
    bins: int = DEFAULT_SPLINE_BINS
    """样条分箱数 K"""
    bound: float = DEFAULT_SPLINE_BOUND
    """样条区间半宽 B"""
    blocks: Optional[int] = None
    """块数：样条默认 2，仿射默认 1，CDF 类头恒为 1"""
    positivity: str = POSITIVITY_EXP
    """CDF 类头的取正方式"""
    bisection_tol: float = DEFAULT_BISECTION_TOL

    def __post_init__(self):
        if self.head_type not in HEAD_TYPES:
            raise ConfigError("未知的头部类型：{}".format(self.head_type))
        if self.positivity not in (POSITIVITY_EXP, POSITIVITY_SOFTPLUS):
            raise ConfigError("未知的取正方式：{}".format(self.positivity))
        if self.hidden < 1 or self.bins < 1 or self.bound <= 0 or self.bisection_tol <= 0:
            raise ConfigError("头部超参数必须为正")
        if self.blocks is not None and self.blocks < 1:
            raise ConfigError("块数必须不小于 1")
        if self.blocks not in (None, 1) and self.head_type in (HEAD_CDF, HEAD_SHARED_CDF):
            raise ConfigError("CDF 类头只支持单块")

    @property
    def resolved_blocks(self) -> int:
        if self.blocks is not None:
            return self.blocks
        if self.head_type == HEAD_SPLINE:
            return DEFAULT_SPLINE_BLOCKS
        return DEFAULT_AFFINE_BLOCKS


class AffineHead:
    """仿射头；多块时逐块复合，每块有各自的投影输出"""

    name = HEAD_AFFINE
    base_kind = BASE_STANDARD_NORMAL

    def __init__(self, config: HeadConfig, D: int, E: int):
        self.blocks = config.resolved_blocks
        self.D = D

    def psi_dim(self) -> int:
        return AFFINE_PSI_DIM * self.blocks

    def init_params(self, params: ParamSet, rng: np.random.Generator) -> None:
        """仿射头没有共享参数"""

    def _block_psi(self, psi, block: int) -> AffinePsi:
        return AffinePsi.from_flat(psi[..., AFFINE_PSI_DIM * block : AFFINE_PSI_DIM * (block + 1)])

    def forward(self, x, psi: Node, params: ParamSet) -> Tuple[Node, Node]:
        z, total = x, None
        for block in range(self.blocks):
            z, logdet = affine_fwd(z, self._block_psi(psi, block))
            total = logdet if total is None else total + logdet
        return z, ops.sum_(total, axis=-1)

    def begin_inverse(self, y: Tensor, params: ParamSet) -> Dict[str, Any]:
        return {"y": y}

    def invert_position(
        self, state: Dict[str, Any], i: int, psi_i: Tensor, params: ParamSet
    ) -> Tensor:
        z = state["y"][:, i]
        for block in reversed(range(self.blocks)):
            z = affine_inv(z, self._block_psi(Node(psi_i), block))
        return z


class CdfHead:
    """CDF 头：投影头为每一维生成整个单隐层 CDF 网络的权重"""

    name = HEAD_CDF
    base_kind = BASE_UNIT_UNIFORM

    def __init__(self, config: HeadConfig, D: int, E: int):
        self.hidden = config.hidden
        self.positivity = config.positivity
        self.tol = config.bisection_tol
        self.D = D
        # 对原始伪参数的固定平移：伪参数为零时 Σ w2⁺ = CDF_INITIAL_OUTPUT_MASS，
        # 第一层偏置铺开，y 在数据的主要范围内不饱和
        if self.positivity == POSITIVITY_EXP:
            self.w2_shift = math.log(CDF_INITIAL_OUTPUT_MASS / self.hidden)
        else:
            self.w2_shift = math.log(math.expm1(CDF_INITIAL_OUTPUT_MASS / self.hidden))
        self.b1_shift = _spread_biases(self.hidden)

    def psi_dim(self) -> int:
        return cdf_psi_dim(self.hidden)

    def init_params(self, params: ParamSet, rng: np.random.Generator) -> None:
        """CDF 头没有共享参数"""

    def _psi(self, psi) -> CdfPsi:
        raw = CdfPsi.from_flat(psi)
        raw.b1 = raw.b1 + self.b1_shift
        raw.w2 = raw.w2 + self.w2_shift
        return raw

    def forward(self, x, psi: Node, params: ParamSet) -> Tuple[Node, Node]:
        y, logdet = cdf_fwd(x, self._psi(psi), self.positivity)
        return y, ops.sum_(logdet, axis=-1)

    def logit(self, x, psi: Node, params: ParamSet) -> Node:
        """sigmoid 之前的 u，y = sig(u)"""
        return cdf_logit(x, self._psi(psi), self.positivity)

    def begin_inverse(self, y: Tensor, params: ParamSet) -> Dict[str, Any]:
        return {"y": y}

    def invert_position(
        self, state: Dict[str, Any], i: int, psi_i: Tensor, params: ParamSet
    ) -> Tensor:
        return cdf_inv(state["y"][:, i], self._psi(Node(psi_i)), self.tol, self.positivity)


class SharedCdfHead:
    """共享 CDF 头：一套全局 CDF 网络，变换器嵌入经无约束权重加入偏置"""

    name = HEAD_SHARED_CDF
    base_kind = BASE_UNIT_UNIFORM

    def __init__(self, config: HeadConfig, D: int, E: int):
        self.hidden = config.hidden
        self.positivity = config.positivity
        self.tol = config.bisection_tol
        self.D = D
        self.E = E

    def psi_dim(self) -> int:
        return self.E

    def init_params(self, params: ParamSet, rng: np.random.Generator) -> None:
        H, E = self.hidden, self.E
        bound = 1.0 / math.sqrt(E)
        target = CDF_INITIAL_OUTPUT_MASS / H
        w2 = math.log(target) if self.positivity == POSITIVITY_EXP else math.log(math.expm1(target))
        params.add("phi.w1", np.zeros(H))
        params.add("phi.b1", rng.normal(0.0, 1.0, size=H))
        params.add("phi.w2", np.full(H, w2))
        params.add("phi.b2", np.zeros(()))
        params.add("phi.W1_hat", rng.uniform(-bound, bound, size=(H, E)))
        params.add("phi.w2_hat", rng.uniform(-bound, bound, size=(1, E)))

    @staticmethod
    def phi(params: ParamSet) -> SharedCdfPhi:
        return SharedCdfPhi(
            w1=params["phi.w1"],
            b1=params["phi.b1"],
            w2=params["phi.w2"],
            b2=params["phi.b2"],
            W1_hat=params["phi.W1_hat"],
            w2_hat=params["phi.w2_hat"],
        )

    def forward(self, x, psi: Node, params: ParamSet) -> Tuple[Node, Node]:
        y, logdet = shared_cdf_fwd(x, psi, self.phi(params), self.positivity)
        return y, ops.sum_(logdet, axis=-1)

    def logit(self, x, psi: Node, params: ParamSet) -> Node:
        return shared_cdf_logit(x, psi, self.phi(params), self.positivity)

    def begin_inverse(self, y: Tensor, params: ParamSet) -> Dict[str, Any]:
        return {"y": y}

    def invert_position(
        self, state: Dict[str, Any], i: int, psi_i: Tensor, params: ParamSet
    ) -> Tensor:
        return shared_cdf_inv(
            state["y"][:, i], psi_i, self.phi(params), self.tol, self.positivity
        )


class SplineHead:
    """
    样条块堆叠：每块为逐元素有理二次样条后接单位下三角混合

    各块的伪参数都由同一次变换器前向、只依赖原始 x_{<i} 生成，
    因此整体对角导数是各块样条导数之积，混合的行列式为 1
    """

    name = HEAD_SPLINE
    base_kind = BASE_STANDARD_NORMAL

    def __init__(self, config: HeadConfig, D: int, E: int):
        self.bins = config.bins
        self.bound = config.bound
        self.blocks = config.resolved_blocks
        self.D = D

    def psi_dim(self) -> int:
        return spline_psi_dim(self.bins) * self.blocks

    def init_params(self, params: ParamSet, rng: np.random.Generator) -> None:
        for block in range(self.blocks):
            params.add(
                "mix.{}.lower".format(block),
                rng.normal(0.0, 0.1, size=lower_free_count(self.D)),
            )

    def _block_psi(self, psi, block: int) -> SplinePsi:
        width = spline_psi_dim(self.bins)
        return SplinePsi.from_flat(psi[..., width * block : width * (block + 1)], self.bound)

    def mixing(self, params: ParamSet, block: int) -> LowerMixL:
        return LowerMixL(free=params["mix.{}.lower".format(block)], D=self.D)

    def forward(self, x, psi: Node, params: ParamSet) -> Tuple[Node, Node]:
        z, total = x, None
        for block in range(self.blocks):
            z, logdet = spline_fwd(z, self._block_psi(psi, block))
            z, _ = mix_fwd(z, self.mixing(params, block))
            total = logdet if total is None else total + logdet
        return z, ops.sum_(total, axis=-1)

    def begin_inverse(self, y: Tensor, params: ParamSet) -> Dict[str, Any]:
        return {
            "y": y,
            "lower": [self.mixing(params, b).matrix().value for b in range(self.blocks)],
            "spline_out": [np.zeros_like(y) for _ in range(self.blocks)],
        }

    def invert_position(
        self, state: Dict[str, Any], i: int, psi_i: Tensor, params: ParamSet
    ) -> Tensor:
        # 混合矩阵与 x 无关，逐块反向时前 i-1 维的样条输出都已知
        t = state["y"][:, i]
        spline_out: List[Tensor] = state["spline_out"]
        for block in reversed(range(self.blocks)):
            lower = state["lower"][block]
            s = t - spline_out[block][:, :i] @ lower[i, :i]
            spline_out[block][:, i] = s
            t = spline_inv(s, self._block_psi(Node(psi_i), block))
        return t


_HEADS = {
    HEAD_AFFINE: AffineHead,
    HEAD_CDF: CdfHead,
    HEAD_SHARED_CDF: SharedCdfHead,
    HEAD_SPLINE: SplineHead,
}


def make_head(config: HeadConfig, D: int, E: int):
    """按配置构造变换头"""
    head = _HEADS[config.head_type](config, D, E)
    logger.debug("变换头 %s：psi_dim=%d", head.name, head.psi_dim())
    return head

