# -*- coding: utf-8 -*-

"""
数值校验：三角性、对数行列式、梯度与求逆往返
"""

"""
版权所有 © 2025 TNAFLib 开发者
Copyright © 2025 TNAFLib developers

开源相关声明请见 仓库根目录下的 License.md
Terms & Conditions: License.md in the root directory
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np

from .constants import HEAD_CDF, HEAD_SHARED_CDF
from .diffcore import backward, fd_gradient
from .exceptions import TNAFBaseException
from .main import FlowModel
from .types import Tensor
from .utils import as_rows, relative_error

logger = logging.getLogger(__name__)

TRIANGULARITY_TOL = 1e-8
LOGDET_TOL = 1e-6
LOGDET_ERROR_FLOOR = 1e-2
"""对数行列式接近零时改按绝对误差比较，差分的舍入误差约为 1e-11 量级"""
GRADIENT_TOL = 1e-4
GRADIENT_ERROR_FLOOR = 1e-3
"""梯度相对误差分母的下限，差分的截断误差约为 1e-8 量级"""
ANALYTIC_INVERSION_TOL = 1e-9
BISECTION_INVERSION_FACTOR = 2.0
"""二分法求逆的往返阈值为二分容差的倍数"""


@dataclass
class OracleResult:
    """一项校验的结果"""

    name: str
    passed: bool
    measure: float
    """实测的误差量"""
    threshold: float
    """通过的阈值"""
    detail: str = ""


def triangularity_oracle(model: FlowModel, x, tol: float = TRIANGULARITY_TOL) -> OracleResult:
    """数值雅可比矩阵严格上三角部分为零、对角线为正"""
    worst, diagonal_ok = 0.0, True
    for point in as_rows(x, model.D):
        jacobian = model.numerical_jacobian(point)
        upper = np.abs(jacobian[np.triu_indices(model.D, 1)])
        worst = max(worst, float(upper.max()) if upper.size else 0.0)
        diagonal_ok = diagonal_ok and bool(np.all(np.diag(jacobian) > 0))
    return OracleResult(
        name="triangularity",
        passed=worst < tol and diagonal_ok,
        measure=worst,
        threshold=tol,
        detail="" if diagonal_ok else "对角线出现非正元素",
    )


def logdet_oracle(model: FlowModel, x, tol: float = LOGDET_TOL) -> OracleResult:
    """Σ 逐维对数导数与 log|det J| 的相对误差"""
    rows = as_rows(x, model.D)
    analytic = np.atleast_1d(model.log_prob(rows).logdet)
    reference = np.empty_like(analytic)
    sign_ok = True
    for k, point in enumerate(rows):
        sign, logabsdet = np.linalg.slogdet(model.numerical_jacobian(point))
        sign_ok = sign_ok and sign > 0
        reference[k] = logabsdet
    error = relative_error(analytic, reference, floor=LOGDET_ERROR_FLOOR)
    return OracleResult(
        name="logdet",
        passed=error < tol and sign_ok,
        measure=error,
        threshold=tol,
        detail="" if sign_ok else "行列式非正",
    )


def _sample_coordinates(
    model: FlowModel, per_param: Optional[int], rng: np.random.Generator
) -> Optional[Dict[str, Tensor]]:
    if per_param is None:
        return None
    return {
        name: rng.choice(node.value.size, size=min(per_param, node.value.size), replace=False)
        for name, node in model.params.items()
    }


def gradient_oracle(
    model: FlowModel,
    batch,
    tol: float = GRADIENT_TOL,
    per_param: Optional[int] = None,
    seed: int = 0,
) -> OracleResult:
    """
    nll_loss 的反向传播梯度与中心差分的最大相对误差

    Parameters
    ----------
    per_param: int, optional
        每个参数只随机检查这么多个坐标；默认检查全部
    """
    rows = as_rows(batch, model.D)
    params = model.params
    params.zero_grad()
    backward(model.nll_loss(rows))
    analytic = {name: grad.copy() for name, grad in params.gradients().items()}
    params.zero_grad()

    coordinates = _sample_coordinates(model, per_param, np.random.default_rng(seed))
    numeric = fd_gradient(lambda _: model.nll_loss(rows), params, coordinates=coordinates)

    worst, worst_name = 0.0, ""
    for name in params:
        index = (
            np.arange(analytic[name].size) if coordinates is None else coordinates[name]
        )
        error = relative_error(
            analytic[name].reshape(-1)[index],
            numeric[name].reshape(-1)[index],
            floor=GRADIENT_ERROR_FLOOR,
        )
        if error > worst:
            worst, worst_name = error, name
    return OracleResult(
        name="gradient",
        passed=worst < tol,
        measure=worst,
        threshold=tol,
        detail=worst_name,
    )


def inversion_oracle(model: FlowModel, x, tol: Optional[float] = None) -> OracleResult:
    """x → y → x 往返误差；二分法求逆的头部按其容差放宽"""
    if tol is None:
        if model.head_type in (HEAD_CDF, HEAD_SHARED_CDF):
            tol = BISECTION_INVERSION_FACTOR * model.head_config.bisection_tol
        else:
            tol = ANALYTIC_INVERSION_TOL
    rows = as_rows(x, model.D)
    try:
        recovered = model.inverse(model.log_prob(rows).y)
    except TNAFBaseException as error:
        return OracleResult("inversion", False, float("inf"), tol, error.describe())
    error = float(np.max(np.abs(recovered - rows)))
    return OracleResult(name="inversion", passed=error < tol, measure=error, threshold=tol)


def run_oracles(
    model: FlowModel,
    seed: int = 0,
    points: int = 3,
    inversion_rows: int = 64,
    gradient_rows: int = 4,
    per_param: Optional[int] = 8,
) -> List[OracleResult]:
    """在标准正态的随机点上依次运行全部校验"""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((points, model.D))
    results = [
        triangularity_oracle(model, x),
        logdet_oracle(model, x),
        gradient_oracle(
            model, rng.standard_normal((gradient_rows, model.D)), per_param=per_param, seed=seed
        ),
        inversion_oracle(model, rng.standard_normal((inversion_rows, model.D))),
    ]
    for result in results:
        logger.debug(
            "校验 %s：%s（%.3g / %.3g）",
            result.name,
            "通过" if result.passed else "未通过",
            result.measure,
            result.threshold,
        )
    return results
