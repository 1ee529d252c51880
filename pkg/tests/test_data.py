# -*- coding: utf-8 -*-

"""
数据读写、划分、标准化与玩具分布
"""

"""
版权所有 © 2025 TNAFLib 开发者
Copyright © 2025 TNAFLib developers

开源相关声明请见 仓库根目录下的 License.md
Terms & Conditions: License.md in the root directory
"""

import math

import numpy as np
import pytest

from TNAFLib.data import (
    RAW_F32_HEADER,
    DatasetMatrix,
    StandardizationStats,
    batches,
    gauss_mixture_8_log_density,
    gaussian_baseline_nll,
    load_matrix,
    make_splits,
    oracle_nll,
    save_matrix,
    standardize,
    toy_generate,
)
from TNAFLib.exceptions import (
    ConfigError,
    DataParseError,
    DataShapeError,
    EmptyDatasetError,
)


def test_csv_with_header(tmp_path):
    path = tmp_path / "data.csv"
    path.write_text("a,b\n1,2\n3.5,-4e-1\n", encoding="utf-8")
    matrix = load_matrix(path)
    assert matrix.columns == ["a", "b"]
    np.testing.assert_array_equal(matrix.values, [[1.0, 2.0], [3.5, -0.4]])


def test_csv_without_header_skips_blank_lines(tmp_path):
    path = tmp_path / "data.csv"
    path.write_text("1,2,3\n\n4,5,6\n", encoding="utf-8")
    matrix = load_matrix(path)
    assert matrix.columns is None and matrix.values.shape == (2, 3)


def test_csv_ragged_row_reports_line(tmp_path):
    path = tmp_path / "data.csv"
    path.write_text("1,2\n3,4\n5\n", encoding="utf-8")
    with pytest.raises(DataParseError) as info:
        load_matrix(path)
    assert info.value.location.endswith(":3")
    assert info.value.exit_code == 3


def test_csv_bad_cell_reports_line_and_column(tmp_path):
    path = tmp_path / "data.csv"
    path.write_text("1,2\n3,x\n", encoding="utf-8")
    with pytest.raises(DataParseError) as info:
        load_matrix(path)
    assert ":2" in info.value.location and "第 2 列" in info.value.location


def test_csv_first_row_with_a_number_is_data(tmp_path):
    path = tmp_path / "data.csv"
    path.write_text("1,abc\n2,3\n", encoding="utf-8")
    with pytest.raises(DataParseError) as info:
        load_matrix(path)
    assert info.value.location.endswith(":1 第 2 列")
    assert info.value.exit_code == 3


def test_csv_non_finite_is_rejected(tmp_path):
    path = tmp_path / "data.csv"
    path.write_text("1,2\nnan,4\n", encoding="utf-8")
    with pytest.raises(DataParseError):
        load_matrix(path)


def test_empty_and_missing_files(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("a,b\n", encoding="utf-8")
    with pytest.raises(EmptyDatasetError):
        load_matrix(path)
    with pytest.raises(DataParseError):
        load_matrix(tmp_path / "nope.csv")
    with pytest.raises(ConfigError):
        load_matrix(path, "parquet")


def test_csv_round_trip_is_exact(tmp_path, rng):
    values = rng.standard_normal((5, 3))
    path = tmp_path / "out.csv"
    save_matrix(DatasetMatrix(values, ["p", "q", "r"]), path)
    loaded = load_matrix(path)
    np.testing.assert_array_equal(loaded.values, values)
    assert loaded.columns == ["p", "q", "r"]


def test_raw_f32_round_trip(tmp_path):
    values = np.array([[1.5, -2.0], [0.25, 8.0], [3.0, 4.0]])
    path = tmp_path / "data.f32"
    save_matrix(values, path, "raw_f32")
    assert path.stat().st_size == RAW_F32_HEADER.size + 6 * 4
    np.testing.assert_array_equal(load_matrix(path, "raw_f32").values, values)


def test_raw_f32_truncated(tmp_path):
    path = tmp_path / "data.f32"
    path.write_bytes(RAW_F32_HEADER.pack(3, 2) + np.zeros(5, dtype="<f4").tobytes())
    with pytest.raises(DataParseError):
        load_matrix(path, "raw_f32")
    path.write_bytes(RAW_F32_HEADER.pack(0, 2))
    with pytest.raises(EmptyDatasetError):
        load_matrix(path, "raw_f32")
    path.write_bytes(RAW_F32_HEADER.pack(2, 0))
    with pytest.raises(DataShapeError):
        load_matrix(path, "raw_f32")


def test_splits_are_deterministic_and_disjoint():
    matrix = DatasetMatrix(np.arange(100.0).reshape(50, 2))
    first = make_splits(matrix, seed=3)
    second = make_splits(matrix, seed=3)
    np.testing.assert_array_equal(first.train.values, second.train.values)
    assert (first.train.rows, first.val.rows, first.test.rows) == (40, 5, 5)
    seen = np.concatenate([first.train.values, first.val.values, first.test.values])[:, 0]
    assert sorted(seen.tolist()) == list(np.arange(0.0, 100.0, 2.0))


def test_split_fractions_are_validated():
    matrix = DatasetMatrix(np.zeros((10, 1)))
    with pytest.raises(ConfigError):
        make_splits(matrix, (0.5, 0.5, 0.5))
    with pytest.raises(ConfigError):
        make_splits(matrix, (1.0, 0.0, 0.0))
    with pytest.raises(EmptyDatasetError):
        make_splits(DatasetMatrix(np.zeros((2, 1))))


def test_standardization_uses_train_statistics(rng):
    matrix = DatasetMatrix(3.0 + 2.0 * rng.standard_normal((200, 2)))
    splits, stats = standardize(make_splits(matrix))
    np.testing.assert_allclose(splits.train.values.mean(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(splits.train.values.std(axis=0), 1.0, rtol=1e-12)
    restored = stats.invert(splits.test.values)
    np.testing.assert_allclose(stats.apply(restored), splits.test.values, rtol=1e-12)
    assert stats.log_scale == pytest.approx(-np.sum(np.log(stats.std)))
    reloaded = StandardizationStats.from_dict(stats.to_dict())
    np.testing.assert_array_equal(reloaded.mean, stats.mean)
    np.testing.assert_array_equal(reloaded.std, stats.std)


def test_constant_column_cannot_be_standardized():
    values = np.column_stack([np.arange(20.0), np.ones(20)])
    with pytest.raises(DataShapeError):
        standardize(make_splits(DatasetMatrix(values)))


def test_batches_cover_each_row_once():
    values = np.arange(10.0).reshape(10, 1)
    parts = list(batches(values, 4, seed=0, epoch=1))
    assert [len(p) for p in parts] == [4, 4, 2]
    assert sorted(np.concatenate(parts)[:, 0].tolist()) == list(range(10))
    again = list(batches(values, 4, seed=0, epoch=1))
    assert all(np.array_equal(a, b) for a, b in zip(parts, again))


def test_toy_generators_are_seeded():
    for name in ("gauss_mixture_8", "two_moons", "ring"):
        a = toy_generate(name, 100, seed=4)
        np.testing.assert_array_equal(a.values, toy_generate(name, 100, seed=4).values)
        assert a.values.shape == (100, 2)
    with pytest.raises(ConfigError):
        toy_generate("spiral", 10)


def test_ring_radius():
    radius = np.linalg.norm(toy_generate("ring", 5000, seed=0).values, axis=1)
    assert abs(radius.mean() - 2.0) < 0.02


def test_gauss_mixture_density_integrates_to_one():
    grid = np.linspace(-7.0, 7.0, 561)
    xx, yy = np.meshgrid(grid, grid)
    density = np.exp(gauss_mixture_8_log_density(np.column_stack([xx.ravel(), yy.ravel()])))
    cell = (grid[1] - grid[0]) ** 2
    assert density.sum() * cell == pytest.approx(1.0, abs=1e-3)


def test_oracle_nll_estimate():
    mean, std_err = oracle_nll(20_000, seed=0)
    # 分量几乎不重叠时熵约为 log 8 + log(2πe·0.09)
    expected = math.log(8.0) + math.log(2.0 * math.pi * math.e * 0.09)
    assert abs(mean - expected) < 5 * std_err + 1e-3


def test_gaussian_baseline_matches_closed_form(rng):
    train = rng.standard_normal((4000, 2))
    nll = gaussian_baseline_nll(train, train)
    # 在训练集本身上评估时马氏距离的均值恰为 D
    _, logdet = np.linalg.slogdet(np.cov(train, rowvar=False, bias=True))
    assert nll == pytest.approx(0.5 * (2 * math.log(2 * math.pi) + logdet + 2.0), rel=1e-10)
