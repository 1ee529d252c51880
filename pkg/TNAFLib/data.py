# -*- coding: utf-8 -*-

"""
数据读写、标准化、划分、批次迭代与玩具分布
"""

"""
版权所有 © 2025 TNAFLib 开发者
Copyright © 2025 TNAFLib developers

开源相关声明请见 仓库根目录下的 License.md
Terms & Conditions: License.md in the root directory
"""

import csv
import io
import logging
import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from .constants import (
    DATA_FORMAT_CSV,
    DATA_FORMAT_RAW_F32,
    DATA_FORMATS,
    DEFAULT_SPLIT_FRACTIONS,
    TOY_GAUSS_MIXTURE_8,
    TOY_NAMES,
    TOY_RING,
    TOY_TWO_MOONS,
)
from .exceptions import (
    ConfigError,
    ContractViolationError,
    DataParseError,
    DataShapeError,
    EmptyDatasetError,
)
from .types import Tensor

logger = logging.getLogger(__name__)

RAW_F32_HEADER = struct.Struct("<QQ")
"""raw_f32 文件头：行数 N 与列数 D，均为小端无符号 64 位整数"""

RAW_F32_DTYPE = np.dtype("<f4")

GM8_COMPONENTS = 8
GM8_RADIUS = 4.0
GM8_STD = 0.3
TOY_NOISE_STD = 0.1
RING_RADIUS = 2.0
SPLIT_SUM_TOLERANCE = 1e-9

PathLike = Union[str, Path]


@dataclass
class DatasetMatrix:
    """行优先的 float64 数据矩阵，载入后只读"""

    values: Tensor
    """[N, D]"""

    columns: Optional[List[str]] = None
    """列名，没有表头时为 None"""

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, order="C")
        if values.ndim != 2:
            raise DataShapeError("数据矩阵应为二维，实际形状 {}".format(values.shape))
        bad = ~np.all(np.isfinite(values), axis=1)
        if np.any(bad):
            raise DataParseError(
                "第 {} 行".format(int(np.flatnonzero(bad)[0]) + 1), "出现 NaN 或 Inf"
            )
        if self.columns is not None and len(self.columns) != values.shape[1]:
            raise DataShapeError(
                "列名 {} 个，数据 {} 列".format(len(self.columns), values.shape[1])
            )
        values.setflags(write=False)
        self.values = values

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    def take(self, index) -> "DatasetMatrix":
        """按行下标取子集"""
        return DatasetMatrix(self.values[index], self.columns)


@dataclass
class Splits:
    """训练、验证、测试三部分，维数相同"""

    train: DatasetMatrix
    val: DatasetMatrix
    test: DatasetMatrix

    def __post_init__(self):
        dims = {self.train.cols, self.val.cols, self.test.cols}
        if len(dims) != 1:
            raise DataShapeError("各划分的维数不一致：{}".format(sorted(dims)))

    @property
    def D(self) -> int:
        return self.train.cols


@dataclass
class StandardizationStats:
    """逐列的均值与标准差，仅由训练集计算"""

    mean: Tensor
    std: Tensor

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64).reshape(-1)
        self.std = np.asarray(self.std, dtype=np.float64).reshape(-1)
        if self.mean.shape != self.std.shape:
            raise DataShapeError("均值与标准差的长度不一致")
        zero = np.flatnonzero(~(self.std > 0))
        if zero.size:
            raise DataShapeError("第 {} 列方差为零".format(int(zero[0]) + 1))

    @classmethod
    def identity(cls, D: int) -> "StandardizationStats":
        return cls(mean=np.zeros(D), std=np.ones(D))

    @classmethod
    def fit(cls, matrix: DatasetMatrix) -> "StandardizationStats":
        if matrix.rows < 1:
            raise EmptyDatasetError("训练集为空，无法计算标准化参数")
        return cls(mean=matrix.values.mean(axis=0), std=matrix.values.std(axis=0))

    @property
    def D(self) -> int:
        return self.mean.size

    def apply(self, values) -> Tensor:
        """原始空间 → 标准化空间"""
        return (np.asarray(values, dtype=np.float64) - self.mean) / self.std

    def invert(self, values) -> Tensor:
        """标准化空间 → 原始空间"""
        return np.asarray(values, dtype=np.float64) * self.std + self.mean

    @property
    def log_scale(self) -> float:
        """原始空间对数似然 = 标准化空间对数似然 + log_scale"""
        return float(-np.sum(np.log(self.std)))

    def to_dict(self) -> Dict[str, List[float]]:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, document: Dict[str, Sequence[float]]) -> "StandardizationStats":
        return cls(mean=document["mean"], std=document["std"])


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def _read_csv(path: Path) -> DatasetMatrix:
    text = path.read_text(encoding="utf-8")
    columns: Optional[List[str]] = None
    rows: List[List[float]] = []
    width: Optional[int] = None

    for line_number, cells in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not cells or all(not cell.strip() for cell in cells):
            continue
        parsed = [_is_number(cell) for cell in cells]
        # 只有第一行、且其中没有任何数字时才当作表头
        if line_number == 1 and not any(parsed):
            columns = [cell.strip() for cell in cells]
            width = len(columns)
            continue
        if not all(parsed):
            column = parsed.index(False)
            raise DataParseError(
                "{}:{} 第 {} 列".format(path, line_number, column + 1),
                "无法解析为数字：{!r}".format(cells[column]),
            )
        row = [float(cell) for cell in cells]
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise DataParseError(
                "{}:{}".format(path, line_number),
                "应有 {} 列，实际 {} 列".format(width, len(row)),
            )
        rows.append(row)

    if not rows:
        raise EmptyDatasetError("{} 中没有数据行".format(path))
    return DatasetMatrix(np.array(rows, dtype=np.float64), columns)


def _read_raw_f32(path: Path) -> DatasetMatrix:
    blob = path.read_bytes()
    if len(blob) < RAW_F32_HEADER.size:
        raise DataParseError(
            "{} 字节 0".format(path), "文件头不足 {} 字节".format(RAW_F32_HEADER.size)
        )
    n, d = RAW_F32_HEADER.unpack_from(blob, 0)
    if n == 0:
        raise EmptyDatasetError("{} 声明的行数为 0".format(path))
    if d == 0:
        raise DataShapeError("{} 声明的列数为 0".format(path))
    expected = RAW_F32_HEADER.size + n * d * RAW_F32_DTYPE.itemsize
    if len(blob) != expected:
        raise DataParseError(
            "{} 字节 {}".format(path, min(len(blob), expected)),
            "应有 {} 字节，实际 {} 字节".format(expected, len(blob)),
        )
    values = np.frombuffer(blob, dtype=RAW_F32_DTYPE, offset=RAW_F32_HEADER.size)
    return DatasetMatrix(values.astype(np.float64).reshape(n, d))


def load_matrix(path: PathLike, data_format: str = DATA_FORMAT_CSV) -> DatasetMatrix:
    """
    读取数据矩阵

    Parameters
    ----------
    path: str | Path
        文件路径
    data_format: str
        csv：逗号分隔的十进制数，第一行可以是表头（自动识别）；
        raw_f32：16 字节文件头（小端 u64 的 N 与 D）后接 N·D 个小端 f32

    Raises
    ------
    DataParseError
        列数不齐、无法解析的单元格、截断的二进制文件，附带出错位置
    EmptyDatasetError
        没有任何数据行
    """
    if data_format not in DATA_FORMATS:
        raise ConfigError("未知的数据格式：{}".format(data_format))
    path = Path(path)
    if not path.is_file():
        raise DataParseError(str(path), "文件不存在")
    matrix = _read_csv(path) if data_format == DATA_FORMAT_CSV else _read_raw_f32(path)
    logger.debug("已读取 %s：%d 行 × %d 列", path, matrix.rows, matrix.cols)
    return matrix


def save_matrix(
    matrix: Union[DatasetMatrix, Tensor],
    path: PathLike,
    data_format: str = DATA_FORMAT_CSV,
) -> None:
    """写出数据矩阵；csv 使用能精确还原 float64 的十进制表示"""
    if data_format not in DATA_FORMATS:
        raise ConfigError("未知的数据格式：{}".format(data_format))
    if not isinstance(matrix, DatasetMatrix):
        matrix = DatasetMatrix(matrix)
    path = Path(path)
    if data_format == DATA_FORMAT_RAW_F32:
        with path.open("wb") as f:
            f.write(RAW_F32_HEADER.pack(matrix.rows, matrix.cols))
            f.write(matrix.values.astype(RAW_F32_DTYPE).tobytes())
        return
    with path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        if matrix.columns is not None:
            writer.writerow(matrix.columns)
        for row in matrix.values:
            writer.writerow([repr(float(v)) for v in row])


def standardize(splits: Splits) -> Tuple[Splits, StandardizationStats]:
    """
    以训练集的逐列均值与标准差平移缩放全部划分

    Raises
    ------
    DataShapeError
        训练集中有方差为零的列
    """
    stats = StandardizationStats.fit(splits.train)

    def scaled(part: DatasetMatrix) -> DatasetMatrix:
        return DatasetMatrix(stats.apply(part.values), part.columns)

    return Splits(scaled(splits.train), scaled(splits.val), scaled(splits.test)), stats


def make_splits(
    matrix: DatasetMatrix,
    fractions: Sequence[float] = DEFAULT_SPLIT_FRACTIONS,
    seed: int = 0,
) -> Splits:
    """
    按固定种子的随机排列把数据分成训练、验证、测试三份

    Raises
    ------
    ConfigError
        比例不是三个正数或和不为 1
    EmptyDatasetError
        某一份为空
    """
    fractions = tuple(float(f) for f in fractions)
    if len(fractions) != 3 or any(f <= 0 for f in fractions):
        raise ConfigError("划分比例应为三个正数：{}".format(fractions))
    if abs(sum(fractions) - 1.0) > SPLIT_SUM_TOLERANCE:
        raise ConfigError("划分比例之和应为 1：{}".format(fractions))

    n = matrix.rows
    n_train = int(round(n * fractions[0]))
    n_val = int(round(n * fractions[1]))
    n_test = n - n_train - n_val
    if min(n_train, n_val, n_test) < 1:
        raise EmptyDatasetError(
            "{} 行按 {} 划分后出现空集（{}/{}/{}）".format(n, fractions, n_train, n_val, n_test)
        )

    order = np.random.default_rng(seed).permutation(n)
    return Splits(
        train=matrix.take(order[:n_train]),
        val=matrix.take(order[n_train : n_train + n_val]),
        test=matrix.take(order[n_train + n_val :]),
    )


def batches(
    matrix: Union[DatasetMatrix, Tensor], batch_size: int, seed: int, epoch: int
) -> Iterator[Tensor]:
    """每个 epoch 按 (seed, epoch) 重新打乱，最后不足一批的部分也会给出"""
    if batch_size < 1:
        raise ContractViolationError("批大小必须不小于 1")
    values = matrix.values if isinstance(matrix, DatasetMatrix) else np.asarray(matrix)
    order = np.random.default_rng([seed, epoch]).permutation(values.shape[0])
    for start in range(0, values.shape[0], batch_size):
        yield values[order[start : start + batch_size]]


def _gauss_mixture_8(rng: np.random.Generator, n: int) -> Tensor:
    component = rng.integers(GM8_COMPONENTS, size=n)
    angle = 2.0 * math.pi * component / GM8_COMPONENTS
    means = GM8_RADIUS * np.stack([np.cos(angle), np.sin(angle)], axis=1)
    return means + GM8_STD * rng.standard_normal((n, 2))


def _two_moons(rng: np.random.Generator, n: int) -> Tensor:
    upper = rng.integers(2, size=n).astype(bool)
    t = rng.uniform(0.0, math.pi, size=n)
    x = np.where(upper, np.cos(t), 1.0 - np.cos(t))
    y = np.where(upper, np.sin(t), 0.5 - np.sin(t))
    return np.stack([x, y], axis=1) + TOY_NOISE_STD * rng.standard_normal((n, 2))


def _ring(rng: np.random.Generator, n: int) -> Tensor:
    angle = rng.uniform(0.0, 2.0 * math.pi, size=n)
    points = RING_RADIUS * np.stack([np.cos(angle), np.sin(angle)], axis=1)
    return points + TOY_NOISE_STD * rng.standard_normal((n, 2))


_TOY_GENERATORS = {
    TOY_GAUSS_MIXTURE_8: _gauss_mixture_8,
    TOY_TWO_MOONS: _two_moons,
    TOY_RING: _ring,
}


def toy_generate(name: str, n: int, seed: int = 0) -> DatasetMatrix:
    """
    二维玩具分布

    gauss_mixture_8：半径 4 的圆上 8 个等权高斯，各分量标准差 0.3；
    two_moons 与 ring 的噪声标准差为 0.1

    Raises
    ------
    ConfigError
        未知的分布名
    """
    if name not in TOY_NAMES:
        raise ConfigError("未知的玩具分布：{}，可选 {}".format(name, ", ".join(TOY_NAMES)))
    if n < 1:
        raise ContractViolationError("样本数必须不小于 1")
    values = _TOY_GENERATORS[name](np.random.default_rng(seed), n)
    return DatasetMatrix(values, columns=["x1", "x2"])


def gauss_mixture_8_log_density(x) -> Tensor:
    """gauss_mixture_8 的精确对数密度，x 为 [N, 2]"""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    angle = 2.0 * math.pi * np.arange(GM8_COMPONENTS) / GM8_COMPONENTS
    means = GM8_RADIUS * np.stack([np.cos(angle), np.sin(angle)], axis=1)
    squared = np.sum((x[:, None, :] - means[None, :, :]) ** 2, axis=-1)
    log_components = (
        -0.5 * squared / GM8_STD**2
        - 2.0 * math.log(GM8_STD)
        - math.log(2.0 * math.pi)
        - math.log(GM8_COMPONENTS)
    )
    return np.logaddexp.reduce(log_components, axis=1)


def oracle_nll(n: int = 1_000_000, seed: int = 0) -> Tuple[float, float]:
    """
    gauss_mixture_8 在自身密度下的负对数似然（即微分熵）的蒙特卡洛估计

    Returns
    -------
    (均值, 标准误差)
    """
    nll = -gauss_mixture_8_log_density(toy_generate(TOY_GAUSS_MIXTURE_8, n, seed).values)
    return float(nll.mean()), float(nll.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0


def gaussian_baseline_nll(train, test) -> float:
    """
    单个高斯的极大似然基线：在训练集上拟合均值与协方差，返回测试集的平均负对数似然
    """
    train = train.values if isinstance(train, DatasetMatrix) else np.asarray(train)
    test = test.values if isinstance(test, DatasetMatrix) else np.asarray(test)
    mean = train.mean(axis=0)
    cov = np.atleast_2d(np.cov(train, rowvar=False, bias=True))
    sign, logdet = np.linalg.slogdet(cov)
    if sign <= 0:
        raise DataShapeError("训练集协方差矩阵不正定")
    centered = test - mean
    mahalanobis = np.sum(centered * np.linalg.solve(cov, centered.T).T, axis=1)
    D = train.shape[1]
    return float(np.mean(0.5 * (D * math.log(2.0 * math.pi) + logdet + mahalanobis)))
