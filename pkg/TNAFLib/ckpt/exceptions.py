# -*- coding: utf-8 -*-

"""
检查点文件的报错类型
"""

"""
版权所有 © 2025 TNAFLib 开发者
Copyright © 2025 TNAFLib developers

开源相关声明请见 仓库根目录下的 License.md
Terms & Conditions: License.md in the root directory
"""

from ..exceptions import InvalidFileError


class CheckpointCorruptError(InvalidFileError):
    """检查点文件损坏"""

    exit_code = 4

    def __init__(self, *args):
        """检查点文件损坏"""
        super().__init__("检查点 checkpoint corrupt", *args)
