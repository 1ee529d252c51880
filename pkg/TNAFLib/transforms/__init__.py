# -*- coding: utf-8 -*-

"""
逐维可逆变换：仿射、CDF、共享 CDF、有理二次样条，以及样条块之间的下三角混合
"""

"""
版权所有 © 2025 TNAFLib 开发者
Copyright © 2025 TNAFLib developers

开源相关声明请见 仓库根目录下的 License.md
Terms & Conditions: License.md in the root directory
"""

from .affine import AFFINE_PSI_DIM, AffinePsi, affine_fwd, affine_inv
from .cdf import (
    CdfPsi,
    SharedCdfPhi,
    bisect_increasing,
    cdf_fwd,
    cdf_inv,
    cdf_logit,
    cdf_psi_dim,
    shared_cdf_fwd,
    shared_cdf_inv,
    shared_cdf_logit,
)
from .spline import (
    SplineKnots,
    SplinePsi,
    spline_activate,
    spline_fwd,
    spline_inv,
    spline_psi_dim,
)
from .mixing import LowerMixL, lower_free_count, mix_fwd, mix_inv
from .exceptions import BracketNotFoundError, SplineRootError

__all__ = [
    # 仿射
    "AFFINE_PSI_DIM",
    "AffinePsi",
    "affine_fwd",
    "affine_inv",
    # CDF
    "CdfPsi",
    "SharedCdfPhi",
    "bisect_increasing",
    "cdf_fwd",
    "cdf_inv",
    "cdf_logit",
    "cdf_psi_dim",
    "shared_cdf_fwd",
    "shared_cdf_inv",
    "shared_cdf_logit",
    # 样条
    "SplineKnots",
    "SplinePsi",
    "spline_activate",
    "spline_fwd",
    "spline_inv",
    "spline_psi_dim",
    # 混合
    "LowerMixL",
    "lower_free_count",
    "mix_fwd",
    "mix_inv",
    # 报错
    "BracketNotFoundError",
    "SplineRootError",
]
