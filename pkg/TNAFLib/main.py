# -*- coding: utf-8 -*-

"""
流模型的主类：由变换器条件网络与逐维变换头组成的单个自回归流
"""

"""
版权所有 © 2025 TNAFLib 开发者
Copyright © 2025 TNAFLib developers

开源相关声明请见 仓库根目录下的 License.md
Terms & Conditions: License.md in the root directory
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .conditioner import (
    ConditionerConfig,
    condition,
    conditioner_param_count,
    init_conditioner_params,
    project_head,
)
from .constants import (
    BASE_UNIT_UNIFORM,
    DEFAULT_EMBEDDING,
    DEFAULT_HEADS,
    DEFAULT_LAYERS,
    DEFAULT_MLP_HIDDEN,
    DEFAULT_SEED,
    HEAD_SHARED_CDF,
)
from .diffcore import Node, ParamSet, no_grad, ops
from .diffcore.constants import FD_STEP
from .exceptions import ContractViolationError, DimensionError, InversionError
from .subclass import BaseDistribution, HeadConfig, LogProbResult, make_head
from .types import InvertibleHead, Tensor
from .utils import as_rows

logger = logging.getLogger(__name__)


@dataclass(init=False)
class FlowModel:
    """单个变换器自回归流：密度计算、训练损失与逐维求逆采样"""

    config: ConditionerConfig
    """条件网络结构，其中 psi_dim 由变换头决定"""

    head_config: HeadConfig
    """变换头超参数"""

    head: InvertibleHead
    """逐维变换头"""

    params: ParamSet
    """全部可训练参数：条件网络、投影头以及共享变换参数"""

    base: BaseDistribution
    """基分布，CDF 类头为均匀分布，其余为标准正态"""

    def __init__(
        self,
        D: int,
        E: int = DEFAULT_EMBEDDING,
        heads: int = DEFAULT_HEADS,
        layers: int = DEFAULT_LAYERS,
        mlp_hidden: int = DEFAULT_MLP_HIDDEN,
        head_config: HeadConfig = HeadConfig(),
        seed: int = DEFAULT_SEED,
    ):
        """
        建立一个随机初始化的流模型

        Parameters
        ----------
        D: int
            数据维数
        E, heads, layers, mlp_hidden: int
            变换器的嵌入宽度、注意力头数、层数与 MLP 隐藏宽度
        head_config: HeadConfig
            变换头类型及其超参数
        seed: int
            初始化随机种子
        """
        self.head_config = head_config
        self.head = make_head(head_config, D, E)
        self.config = ConditionerConfig(
            D=D,
            E=E,
            heads=heads,
            layers=layers,
            mlp_hidden=mlp_hidden,
            psi_dim=self.head.psi_dim(),
            identity_head=head_config.head_type == HEAD_SHARED_CDF,
        )

        rng = np.random.default_rng(seed)
        self.params = init_conditioner_params(self.config, rng)
        self.head.init_params(self.params, rng)
        self.base = BaseDistribution(self.head.base_kind)

        logger.debug(
            "流模型已建立：头部 %s，参数 %d 个，伪参数 %d 个",
            self.head.name,
            self.param_count,
            self.psi_count,
        )

    @property
    def D(self) -> int:
        return self.config.D

    @property
    def head_type(self) -> str:
        return self.head.name

    @property
    def param_count(self) -> int:
        """持久化参数的个数（不含伪参数）"""
        return self.params.count()

    @property
    def psi_count(self) -> int:
        """每个样本的伪参数个数 D·psi_dim"""
        return self.config.D * self.config.psi_dim

    def expected_param_count(self) -> int:
        """条件网络闭式参数个数加上变换头自身的共享参数"""
        head_own = sum(
            node.value.size
            for name, node in self.params.items()
            if name.startswith(("phi.", "mix."))
        )
        return conditioner_param_count(self.config) + head_own

    def pseudo_parameters(self, x) -> Node:
        """
        由条件网络生成每一维的伪参数

        Returns
        -------
        Node[N, D, psi_dim]
        """
        rows = as_rows(x, self.D)
        return project_head(condition(rows, self.params, self.config), self.params, self.config)

    def _forward(self, rows: Tensor) -> Tuple[Node, Node]:
        psi = project_head(condition(rows, self.params, self.config), self.params, self.config)
        return self.head.forward(Node(rows), psi, self.params)

    def _logit(self, rows: Tensor) -> Tensor:
        """均匀基分布的头在 sigmoid 之前的值 u"""
        psi = project_head(condition(rows, self.params, self.config), self.params, self.config)
        return self.head.logit(Node(rows), psi, self.params).value

    def log_prob_node(self, x) -> Node:
        """逐行对数似然的可微版本，形状 [N]"""
        y, logdet = self._forward(as_rows(x, self.D))
        return self.base.log_density(y) + logdet

    def log_prob(self, x) -> LogProbResult:
        """
        精确对数似然 log p(x) = log p_Y(y) + Σ log|∂y_i/∂x_i|

        Parameters
        ----------
        x: [D] 或 [N, D]
            输入

        Returns
        -------
        LogProbResult
            与输入同批次形状的 y、logdet 与 logp

        Raises
        ------
        InternalInvariantError
            均匀基分布下 y 超出 [0, 1]
        """
        single = np.ndim(x) == 1
        with no_grad():
            y, logdet = self._forward(as_rows(x, self.D))
            logp = self.base.log_density(y) + logdet
        if single:
            return LogProbResult(y=y.value[0], logdet=logdet.value[0], logp=logp.value[0])
        return LogProbResult(y=y.value, logdet=logdet.value, logp=logp.value)

    def nll_loss(self, batch) -> Node:
        """批次的平均负对数似然，对全部参数可微"""
        rows = as_rows(batch, self.D)
        if rows.shape[0] < 1:
            raise ContractViolationError("批次至少需要一行")
        return -ops.mean(self.log_prob_node(rows))

    def inverse(self, y) -> Tensor:
        """
        逐维求逆：第 i 维用已求得的 x₁…x_{i-1} 重新跑一遍条件网络，再由变换头解出 x_i

        Raises
        ------
        InversionError
            某一维求逆失败，附带出错样本的序号
        """
        y = as_rows(y, self.D)
        x = np.zeros_like(y)
        with no_grad():
            state = self.head.begin_inverse(y, self.params)
            for i in range(self.D):
                # 因果掩码保证第 i 位之后的占位值不影响 ψ_i
                psi_i = self.pseudo_parameters(x).value[:, i, :]
                try:
                    x[:, i] = self.head.invert_position(state, i, psi_i, self.params)
                except InversionError as error:
                    logger.debug("第 %d 维求逆失败：%s", i, error.describe())
                    raise InversionError(
                        "第 {} 维".format(i),
                        sample_index=error.sample_index,
                    ) from error
        return x

    def sample(self, n: int, seed: Optional[int] = DEFAULT_SEED) -> Tensor:
        """
        逆变换采样：从基分布抽取 y，再逐维求逆

        相同的种子给出完全相同的样本

        Returns
        -------
        Tensor[n, D]
        """
        if n < 1:
            raise ContractViolationError("采样个数必须不小于 1")
        rng = np.random.default_rng(seed)
        return self.inverse(self.base.sample(rng, n, self.D))

    def numerical_jacobian(self, x, step: float = FD_STEP) -> Tensor:
        """
        x → y 的中心差分雅可比矩阵 J[i, j] = ∂y_i/∂x_j，使用四阶精度的五点格式

        Parameters
        ----------
        x: [D]
            求导点
        step: float
            差分步长
        """
        if step <= 0:
            raise ContractViolationError("差分步长必须为正")
        point = as_rows(x, self.D)[0]
        offsets = np.eye(self.D) * step
        shifted = np.concatenate(
            [point + 2.0 * offsets, point + offsets, point - offsets, point - 2.0 * offsets],
            axis=0,
        )
        rows = np.concatenate([point[None, :], shifted], axis=0)
        with no_grad():
            if self.base.kind == BASE_UNIT_UNIFORM:
                u = self._logit(rows)
                # 中心点 y 靠近 1 的坐标改用 y - 1 = -sig(-u) 做差分，两者导数相同
                upper = u[0] > 0.0
                out = np.where(upper, -ops.sigmoid(Node(-u)).value, ops.sigmoid(Node(u)).value)
            else:
                out = self._forward(rows)[0].value
        far_up, up, down, far_down = np.split(out[1:], 4, axis=0)
        # 第 j 行是对 x_j 的扰动，转置后按 ∂y_i/∂x_j 排列
        return ((8.0 * (up - down) - (far_up - far_down)) / (12.0 * step)).T

    def copy_params_from(self, values) -> None:
        """用 名称 → 数组 的映射覆盖当前参数，名称与形状必须完全一致"""
        missing = set(self.params.keys()) ^ set(values.keys())
        if missing:
            raise ContractViolationError("参数名称不一致：{}".format(sorted(missing)))
        for name, node in self.params.items():
            if np.shape(values[name]) != node.shape:
                raise DimensionError(
                    "参数 {} 的形状应为 {}，实际 {}".format(name, node.shape, np.shape(values[name]))
                )
        self.params.restore(
            {name: np.asarray(values[name], dtype=np.float64) for name in self.params}
        )
