# -*- coding: utf-8 -*-

"""
运行配置：严格解析的 JSON 文档
"""

"""
版权所有 © 2025 TNAFLib 开发者
Copyright © 2025 TNAFLib developers

开源相关声明请见 仓库根目录下的 License.md
Terms & Conditions: License.md in the root directory
"""

import dataclasses
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Type, TypeVar, Union, get_args, get_origin

from .constants import (
    DATA_FORMAT_CSV,
    DATA_FORMATS,
    DEFAULT_BISECTION_TOL,
    DEFAULT_CDF_HIDDEN,
    DEFAULT_EMBEDDING,
    DEFAULT_HEADS,
    DEFAULT_LAYERS,
    DEFAULT_MLP_HIDDEN,
    DEFAULT_SEED,
    DEFAULT_SPLINE_BINS,
    DEFAULT_SPLINE_BOUND,
    DEFAULT_SPLIT_FRACTIONS,
    DEFAULT_TOY_ROWS,
    HEAD_CDF,
    HEAD_SHARED_CDF,
    HEAD_SPLINE,
    HEAD_TYPES,
    POSITIVITY_EXP,
    TOY_NAMES,
)
from .data import DatasetMatrix, load_matrix, toy_generate
from .exceptions import ConfigError, DataShapeError
from .main import FlowModel
from .subclass import HeadConfig
from .trainer import TrainConfig

logger = logging.getLogger(__name__)

Section = TypeVar("Section")


@dataclass(frozen=True)
class ModelSection:
    """模型结构；D 缺省时由数据推断"""

    D: Optional[int] = None
    E: int = DEFAULT_EMBEDDING
    heads: int = DEFAULT_HEADS
    layers: int = DEFAULT_LAYERS
    mlp_hidden: int = DEFAULT_MLP_HIDDEN
    head_type: str = HEAD_CDF
    hidden: int = DEFAULT_CDF_HIDDEN
    bins: int = DEFAULT_SPLINE_BINS
    bound: float = DEFAULT_SPLINE_BOUND
    blocks: Optional[int] = None
    positivity: str = POSITIVITY_EXP
    bisection_tol: float = DEFAULT_BISECTION_TOL

    def __post_init__(self):
        if self.D is not None and self.D < 1:
            raise ConfigError("model.D 必须不小于 1")
        for name in ("E", "heads", "layers", "mlp_hidden"):
            if getattr(self, name) < 1:
                raise ConfigError("model.{} 必须不小于 1".format(name))
        if self.E % self.heads:
            raise ConfigError("model.E={} 不能被 model.heads={} 整除".format(self.E, self.heads))
        # 头部参数的取值检查交给 HeadConfig
        self.head_config()

    def head_config(self) -> HeadConfig:
        return HeadConfig(
            head_type=self.head_type,
            hidden=self.hidden,
            bins=self.bins,
            bound=self.bound,
            blocks=self.blocks,
            positivity=self.positivity,
            bisection_tol=self.bisection_tol,
        )

    def resolve_D(self, data_D: int) -> int:
        """确定模型维数；配置中写明的 D 必须与数据一致"""
        if self.D is not None and self.D != data_D:
            raise DataShapeError("配置中 D={}，数据为 {} 列".format(self.D, data_D))
        return data_D

    def build(self, D: Optional[int] = None, seed: int = DEFAULT_SEED) -> FlowModel:
        """按本节配置建立随机初始化的模型"""
        D = self.D if D is None else D
        if D is None:
            raise ConfigError("model.D 未给出，且没有数据可供推断")
        return FlowModel(
            D=D,
            E=self.E,
            heads=self.heads,
            layers=self.layers,
            mlp_hidden=self.mlp_hidden,
            head_config=self.head_config(),
            seed=seed,
        )


@dataclass(frozen=True)
class DataSection:
    """数据来源：文件（path + format）或玩具分布（toy + rows）二选一"""

    path: Optional[str] = None
    format: str = DATA_FORMAT_CSV
    toy: Optional[str] = None
    rows: int = DEFAULT_TOY_ROWS
    fractions: List[float] = field(default_factory=lambda: list(DEFAULT_SPLIT_FRACTIONS))
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if (self.path is None) == (self.toy is None):
            raise ConfigError("data 中 path 与 toy 必须恰好给出一个")
        if self.format not in DATA_FORMATS:
            raise ConfigError("data.format 只能是 {}".format(" / ".join(DATA_FORMATS)))
        if self.toy is not None and self.toy not in TOY_NAMES:
            raise ConfigError("data.toy 只能是 {}".format(" / ".join(TOY_NAMES)))
        if self.rows < 1:
            raise ConfigError("data.rows 必须不小于 1")
        if len(self.fractions) != 3:
            raise ConfigError("data.fractions 应为三个数")

    def load(self, base_dir: Optional[Path] = None) -> DatasetMatrix:
        """读取或生成完整的数据矩阵；相对路径相对于 base_dir"""
        if self.toy is not None:
            return toy_generate(self.toy, self.rows, self.seed)
        path = Path(self.path)
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        return load_matrix(path, self.format)


@dataclass(frozen=True)
class AblationSection:
    """头部消融：头部类型 × 层数 × 种子"""

    heads: List[str] = field(
        default_factory=lambda: [HEAD_CDF, HEAD_SHARED_CDF, HEAD_SPLINE]
    )
    layers: List[int] = field(default_factory=lambda: [3, 5])
    seeds: List[int] = field(default_factory=lambda: [0, 1, 2])

    def __post_init__(self):
        unknown = [h for h in self.heads if h not in HEAD_TYPES]
        if unknown:
            raise ConfigError("ablation.heads 中有未知头部：{}".format(unknown))
        if not self.heads or not self.layers or not self.seeds:
            raise ConfigError("ablation 的各列表不能为空")
        if any(layer < 1 for layer in self.layers):
            raise ConfigError("ablation.layers 必须不小于 1")


def _coerce(value: Any, annotation: Any, key: str) -> Any:
    origin = get_origin(annotation)
    if origin is Union:
        options = [a for a in get_args(annotation) if a is not type(None)]
        if value is None:
            return None
        return _coerce(value, options[0], key)
    if origin in (list, List):
        if not isinstance(value, list):
            raise ConfigError("{} 应为列表".format(key))
        (item,) = get_args(annotation)
        return [_coerce(v, item, "{}[{}]".format(key, i)) for i, v in enumerate(value)]
    if annotation is bool:
        if not isinstance(value, bool):
            raise ConfigError("{} 应为布尔值".format(key))
        return value
    if annotation is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError("{} 应为整数".format(key))
        return value
    if annotation is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError("{} 应为数字".format(key))
        return float(value)
    if annotation is str:
        if not isinstance(value, str):
            raise ConfigError("{} 应为字符串".format(key))
        return value
    raise ConfigError("{} 的类型无法解析".format(key))


def _parse_section(cls: Type[Section], document: Any, prefix: str) -> Section:
    """按数据类字段严格解析一节，未知键直接报错"""
    if document is None:
        document = {}
    if not isinstance(document, dict):
        raise ConfigError("{} 应为对象".format(prefix))
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(document) - set(fields))
    if unknown:
        raise ConfigError("未知配置项：{}".format(", ".join(prefix + "." + k for k in unknown)))
    values = {
        name: _coerce(document[name], fields[name].type, prefix + "." + name)
        for name in fields
        if name in document
    }
    try:
        return cls(**values)
    except (TypeError, ValueError) as error:
        raise ConfigError(prefix, str(error)) from error


@dataclass(frozen=True)
class RunConfig:
    """一次运行的完整配置"""

    model: ModelSection
    train: TrainConfig
    data: DataSection
    ablation: Optional[AblationSection] = None

    @classmethod
    def from_dict(cls, document: Any) -> "RunConfig":
        """
        严格解析配置文档

        Raises
        ------
        ConfigError
            未知键、类型错误或取值不合法
        """
        if not isinstance(document, dict):
            raise ConfigError("配置文档的顶层应为对象")
        unknown = sorted(set(document) - {"model", "train", "data", "ablation"})
        if unknown:
            raise ConfigError("未知配置节：{}".format(", ".join(unknown)))
        if "data" not in document:
            raise ConfigError("缺少 data 节")
        return cls(
            model=_parse_section(ModelSection, document.get("model"), "model"),
            train=_parse_section(TrainConfig, document.get("train"), "train"),
            data=_parse_section(DataSection, document["data"], "data"),
            ablation=(
                _parse_section(AblationSection, document["ablation"], "ablation")
                if "ablation" in document
                else None
            ),
        )

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        try:
            document = json.loads(text)
        except json.JSONDecodeError as error:
            raise ConfigError(
                "JSON 语法错误：第 {} 行第 {} 列：{}".format(error.lineno, error.colno, error.msg)
            ) from error
        return cls.from_dict(document)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "RunConfig":
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as error:
            raise ConfigError("无法读取配置文件 {}".format(path), str(error)) from error
        logger.debug("读取配置 %s", path)
        return cls.from_json(text)

    def to_dict(self) -> Dict[str, Any]:
        """补全了全部默认值的规范文档；相等的配置序列化结果逐字节相同"""
        document: Dict[str, Any] = {
            "model": dataclasses.asdict(self.model),
            "train": dataclasses.asdict(self.train),
            "data": dataclasses.asdict(self.data),
        }
        if self.ablation is not None:
            document["ablation"] = dataclasses.asdict(self.ablation)
        return document
