# -*- coding: utf-8 -*-

"""
报错类型
"""

"""
版权所有 © 2025 TNAFLib 开发者
Copyright © 2025 TNAFLib developers

开源相关声明请见 仓库根目录下的 License.md
Terms & Conditions: License.md in the root directory
"""

from typing import Optional


class TNAFBaseException(Exception):
    """流模型库的所有错误均继承于此"""

    exit_code: int = 1
    """命令行退出码"""

    def __init__(self, *args):
        """流模型库的所有错误均继承于此"""
        super().__init__("流模型", *args)

    def describe(self) -> str:
        """以一行文字给出错误描述"""
        return "：".join(str(i) for i in self.args)


class InnerlyError(TNAFBaseException):
    """内部错误"""

    def __init__(self, *args):
        """内部错误"""
        super().__init__("内部错误", *args)


class OuterlyError(TNAFBaseException):
    """外部错误"""

    def __init__(self, *args):
        """外部错误"""
        super().__init__("外部错误", *args)


class ParseError(TNAFBaseException):
    """解析错误"""

    exit_code = 2

    def __init__(self, *args):
        """解析错误"""
        super().__init__("解析错误", *args)


class InvalidFileError(OuterlyError):
    """文件损坏"""

    def __init__(self, *args):
        """文件损坏"""
        super().__init__("文件损坏", *args)


# 内部错误


class DimensionError(InnerlyError, ValueError):
    """维度不匹配"""

    def __init__(self, *args):
        """维度不匹配"""
        super().__init__("维度不匹配 dimension error", *args)


class ContractViolationError(InnerlyError):
    """调用约定被违反"""

    def __init__(self, *args):
        """调用约定被违反"""
        super().__init__("违反调用约定 contract violation", *args)


class DomainError(InnerlyError, ValueError):
    """自变量超出定义域"""

    def __init__(self, *args):
        """自变量超出定义域"""
        super().__init__("超出定义域 domain error", *args)


class NonFiniteError(InnerlyError, FloatingPointError):
    """出现 NaN 或 Inf"""

    def __init__(self, *args):
        """出现 NaN 或 Inf"""
        super().__init__("出现非有限值 non-finite value", *args)


class InternalInvariantError(InnerlyError):
    """内部不变量被破坏"""

    def __init__(self, *args):
        """内部不变量被破坏"""
        super().__init__("内部不变量被破坏 internal invariant violation", *args)


class InversionError(InnerlyError):
    """逆变换求解失败"""

    exit_code = 5

    sample_index: Optional[int]
    """出错的样本序号"""

    def __init__(self, *args, sample_index: Optional[int] = None):
        """逆变换求解失败"""
        self.sample_index = sample_index
        if sample_index is not None:
            args = args + ("样本序号 sample index {}".format(sample_index),)
        super().__init__("逆变换失败 inversion error", *args)


class TrainingFaultError(InnerlyError):
    """训练过程出现数值故障"""

    exit_code = 6

    step: int
    """出错时的步数"""

    def __init__(self, step: int, *args):
        """训练过程出现数值故障"""
        self.step = step
        super().__init__("训练故障 training fault", "步数 step {}".format(step), *args)


# 外部错误


class ConfigError(ParseError, OuterlyError):
    """运行配置错误"""

    exit_code = 2

    def __init__(self, *args):
        """运行配置错误"""
        super().__init__("运行配置错误 config error", *args)


class DataParseError(ParseError, OuterlyError):
    """数据文件解析失败"""

    exit_code = 3

    def __init__(self, location: str, *args):
        """数据文件解析失败，location 为出错位置（如行号、字节偏移）"""
        self.location = location
        super().__init__("数据解析失败 data parse error", location, *args)


class EmptyDatasetError(OuterlyError, ValueError):
    """数据集为空"""

    exit_code = 3

    def __init__(self, *args):
        """数据集为空"""
        super().__init__("数据集为空 empty dataset", *args)


class DataShapeError(OuterlyError, ValueError):
    """数据形状与模型不符"""

    exit_code = 3

    def __init__(self, *args):
        """数据形状与模型不符"""
        super().__init__("数据形状不符 data shape mismatch", *args)
