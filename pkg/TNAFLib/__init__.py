# -*- coding: utf-8 -*-
"""
变换器自回归流的密度估计库
A library of transformer-conditioned autoregressive normalizing flows


版权所有 © 2025 TNAFLib 开发者
Copyright © 2025 TNAFLib developers

开源相关声明请见 仓库根目录下的 License.md
Terms & Conditions: License.md in the root directory
"""

from .main import FlowModel
from .subclass import BaseDistribution, HeadConfig, LogProbResult, make_head
from .conditioner import ConditionerConfig, conditioner_param_count
from .config import AblationSection, DataSection, ModelSection, RunConfig
from .data import (
    DatasetMatrix,
    Splits,
    StandardizationStats,
    batches,
    load_matrix,
    make_splits,
    save_matrix,
    standardize,
    toy_generate,
)
from .trainer import TrainConfig, TrainReport, evaluate, train
from .ckpt import Checkpoint, load_checkpoint, save_checkpoint
from .oracles import OracleResult, run_oracles
from .constants import HEAD_AFFINE, HEAD_CDF, HEAD_SHARED_CDF, HEAD_SPLINE, HEAD_TYPES

__version__ = "0.1.0"
__all__ = [
    #
    # 主类
    "FlowModel",
    #
    # 副类
    "BaseDistribution",
    "HeadConfig",
    "LogProbResult",
    "make_head",
    "ConditionerConfig",
    "conditioner_param_count",
    #
    # 配置
    "RunConfig",
    "ModelSection",
    "DataSection",
    "AblationSection",
    "TrainConfig",
    #
    # 数据
    "DatasetMatrix",
    "Splits",
    "StandardizationStats",
    "batches",
    "load_matrix",
    "make_splits",
    "save_matrix",
    "standardize",
    "toy_generate",
    #
    # 训练与评估
    "TrainReport",
    "evaluate",
    "train",
    #
    # 检查点与校验
    "Checkpoint",
    "load_checkpoint",
    "save_checkpoint",
    "OracleResult",
    "run_oracles",
    #
    # 常量
    "HEAD_AFFINE",
    "HEAD_CDF",
    "HEAD_SHARED_CDF",
    "HEAD_SPLINE",
    "HEAD_TYPES",
]
