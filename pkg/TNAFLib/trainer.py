# -*- coding: utf-8 -*-

"""
训练：自适应矩估计优化、全局梯度裁剪、以验证集为准的早停
"""

"""
版权所有 © 2025 TNAFLib 开发者
Copyright © 2025 TNAFLib developers

开源相关声明请见 仓库根目录下的 License.md
Terms & Conditions: License.md in the root directory
"""

import contextlib
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from .constants import (
    ADAM_BETA1,
    ADAM_BETA2,
    ADAM_EPS,
    DEFAULT_BATCH_SIZE,
    DEFAULT_CLIP_NORM,
    DEFAULT_EVAL_EVERY,
    DEFAULT_LEARNING_RATE,
    DEFAULT_MAX_STEPS,
    DEFAULT_PATIENCE,
    DEFAULT_SEED,
    EVAL_CHUNK_ROWS,
    METRIC_LINE_FORMAT,
    METRICS_LOGGER_NAME,
)
from .data import DatasetMatrix, Splits, batches
from .diffcore import ParamSet, backward, checked
from .exceptions import (
    ConfigError,
    DomainError,
    EmptyDatasetError,
    NonFiniteError,
    TrainingFaultError,
)
from .main import FlowModel
from .types import Tensor

logger = logging.getLogger(__name__)
metrics_logger = logging.getLogger(METRICS_LOGGER_NAME)


@dataclass(frozen=True)
class TrainConfig:
    """训练超参数"""

    learning_rate: float = DEFAULT_LEARNING_RATE
    batch_size: int = DEFAULT_BATCH_SIZE
    max_steps: int = DEFAULT_MAX_STEPS
    clip_norm: float = DEFAULT_CLIP_NORM
    patience: int = DEFAULT_PATIENCE
    """连续多少次验证没有改进后停止"""
    eval_every: int = DEFAULT_EVAL_EVERY
    """两次验证之间的步数"""
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        for name in ("learning_rate", "batch_size", "clip_norm", "patience", "eval_every"):
            if not getattr(self, name) > 0:
                raise ConfigError("train.{} 必须为正".format(name))
        if self.max_steps < 0:
            raise ConfigError("train.max_steps 不能为负")


@dataclass
class OptimizerState:
    """一阶、二阶矩缓冲区与步数"""

    first_moment: Dict[str, Tensor]
    second_moment: Dict[str, Tensor]
    step: int = 0
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps: float = ADAM_EPS

    @classmethod
    def for_params(cls, params: ParamSet) -> "OptimizerState":
        return cls(
            first_moment={name: np.zeros_like(node.value) for name, node in params.items()},
            second_moment={name: np.zeros_like(node.value) for name, node in params.items()},
        )


@dataclass
class EvalRecord:
    step: int
    train_nll: float
    """自上次验证以来各批次损失的均值"""
    val_nll: float


@dataclass
class TrainReport:
    """训练记录"""

    history: List[EvalRecord] = field(default_factory=list)
    best_step: Optional[int] = None
    best_val_nll: float = math.inf
    stopped_early: bool = False
    steps: int = 0
    seconds: float = field(default=0.0, compare=False)
    """墙钟时间，不参与比较"""


def clip_gradients(params: ParamSet, clip_norm: float, step: int = 0) -> float:
    """
    全局 L2 范数裁剪：范数超过 clip_norm 时所有梯度按同一比例缩小

    Returns
    -------
    float
        裁剪之前的全局范数

    Raises
    ------
    TrainingFaultError
        梯度中出现 NaN 或 Inf
    """
    total = 0.0
    for node in params.values():
        if node.grad is not None:
            total += float(np.sum(node.grad * node.grad))
    norm = math.sqrt(total)
    if not math.isfinite(norm):
        raise TrainingFaultError(step, "梯度出现 NaN 或 Inf")
    if norm > clip_norm:
        scale = clip_norm / norm
        for node in params.values():
            if node.grad is not None:
                node.grad *= scale
    return norm


def optimizer_step(params: ParamSet, state: OptimizerState, lr: float) -> None:
    """带偏差修正的自适应矩估计更新，之后清空梯度"""
    state.step += 1
    correction1 = 1.0 - state.beta1**state.step
    correction2 = 1.0 - state.beta2**state.step
    for name, node in params.items():
        if node.grad is None:
            continue
        m = state.first_moment[name]
        v = state.second_moment[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * node.grad
        v *= state.beta2
        v += (1.0 - state.beta2) * node.grad * node.grad
        node.value -= lr * (m / correction1) / (np.sqrt(v / correction2) + state.eps)
    params.zero_grad()


def evaluate(model: FlowModel, matrix) -> Tuple[float, float]:
    """
    逐行对数似然的均值及其标准误差，分块在无梯度模式下计算

    只有一行时标准误差记为 0
    """
    values = matrix.values if isinstance(matrix, DatasetMatrix) else np.asarray(matrix)
    if values.shape[0] < 1:
        raise EmptyDatasetError("评估数据为空")
    logp = np.concatenate(
        [
            np.atleast_1d(model.log_prob(values[start : start + EVAL_CHUNK_ROWS]).logp)
            for start in range(0, values.shape[0], EVAL_CHUNK_ROWS)
        ]
    )
    n = logp.size
    std_err = float(np.std(logp, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return float(np.mean(logp)), std_err


def train(
    model: FlowModel,
    splits: Splits,
    config: TrainConfig = TrainConfig(),
    on_step: Optional[Callable[[int], None]] = None,
    checked_mode: bool = False,
) -> TrainReport:
    """
    训练模型并把验证集上最好的参数写回模型

    Parameters
    ----------
    model: FlowModel
        被训练的模型，参数原地更新
    splits: Splits
        已标准化的数据划分
    config: TrainConfig
        训练超参数
    on_step: Callable[[int], None], optional
        每步结束后以当前步数调用，用于进度显示
    checked_mode: bool
        是否在检查模式下运行，检查每个运算的输出是否有限

    Raises
    ------
    TrainingFaultError
        损失或梯度出现 NaN/Inf；抛出前模型已恢复为最近一次的最佳参数
    """
    report = TrainReport()
    started = time.perf_counter()
    if config.max_steps == 0:
        logger.info("max_steps 为 0，不做任何训练")
        return report

    params = model.params
    state = OptimizerState.for_params(params)
    best_snapshot = params.snapshot()
    since_improvement = 0
    window: List[float] = []
    step = 0
    epoch = 0

    guard = checked() if checked_mode else contextlib.nullcontext()
    with guard:
        while step < config.max_steps and not report.stopped_early:
            for batch in batches(splits.train, config.batch_size, config.seed, epoch):
                try:
                    loss = model.nll_loss(batch)
                    if not math.isfinite(loss.item()):
                        raise TrainingFaultError(step + 1, "损失为 {}".format(loss.item()))
                    backward(loss)
                    clip_gradients(params, config.clip_norm, step + 1)
                    optimizer_step(params, state, config.learning_rate)
                except (NonFiniteError, DomainError, TrainingFaultError) as error:
                    params.restore(best_snapshot)
                    params.zero_grad()
                    if isinstance(error, TrainingFaultError):
                        raise
                    raise TrainingFaultError(step + 1, error.describe()) from error

                step += 1
                window.append(loss.item())
                if on_step is not None:
                    on_step(step)

                if step % config.eval_every == 0 or step == config.max_steps:
                    val_nll = -evaluate(model, splits.val)[0]
                    record = EvalRecord(
                        step=step, train_nll=float(np.mean(window)), val_nll=val_nll
                    )
                    window.clear()
                    report.history.append(record)
                    metrics_logger.info(
                        METRIC_LINE_FORMAT.format(
                            step=record.step,
                            train_nll=record.train_nll,
                            val_nll=record.val_nll,
                        )
                    )
                    if val_nll < report.best_val_nll:
                        report.best_val_nll = val_nll
                        report.best_step = step
                        best_snapshot = params.snapshot()
                        since_improvement = 0
                    else:
                        since_improvement += 1
                        logger.debug(
                            "第 %d 步验证未改进（连续 %d 次）", step, since_improvement
                        )
                        if since_improvement >= config.patience:
                            logger.info("验证集连续 %d 次未改进，提前停止", since_improvement)
                            report.stopped_early = True

                if step >= config.max_steps or report.stopped_early:
                    break
            epoch += 1

    params.restore(best_snapshot)
    report.steps = step
    report.seconds = time.perf_counter() - started
    logger.info(
        "训练结束：%d 步，最佳验证 NLL %.6f（第 %s 步）",
        step,
        report.best_val_nll,
        report.best_step,
    )
    return report
