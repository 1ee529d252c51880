# -*- coding: utf-8 -*-

"""
逐维可逆变换的报错类型
"""

"""
版权所有 © 2025 TNAFLib 开发者
Copyright © 2025 TNAFLib developers

开源相关声明请见 仓库根目录下的 License.md
Terms & Conditions: License.md in the root directory
"""


from ..exceptions import InversionError, InternalInvariantError


class BracketNotFoundError(InversionError):
    """二分法找不到包含目标值的区间"""

    def __init__(self, *args, sample_index=None):
        """区间扩张次数用尽仍未包住目标值"""
        super().__init__("找不到二分区间 bracket not found", *args, sample_index=sample_index)


class SplineRootError(InternalInvariantError):
    """样条求逆时二次方程在 [0, 1] 内无根"""

    def __init__(self, *args):
        """样条求逆时二次方程在 [0, 1] 内无根"""
        super().__init__("样条逆变换无根 no root in [0, 1]", *args)
