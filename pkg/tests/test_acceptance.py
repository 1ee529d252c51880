# -*- coding: utf-8 -*-

"""
完整规模的验收：训练后的归一化、拟合质量与采样，以及缺省尺寸模型上的数值校验
"""

"""
版权所有 © 2025 TNAFLib 开发者
Copyright © 2025 TNAFLib developers

开源相关声明请见 仓库根目录下的 License.md
Terms & Conditions: License.md in the root directory
"""

import numpy as np
import pytest

from TNAFLib.config import ModelSection
from TNAFLib.data import (
    gaussian_baseline_nll,
    make_splits,
    oracle_nll,
    standardize,
    toy_generate,
)
from TNAFLib.oracles import gradient_oracle, logdet_oracle, triangularity_oracle
from TNAFLib.trainer import TrainConfig, evaluate, train

from conftest import tiny_model

pytestmark = pytest.mark.slow

GRID_POINTS = 400
GRID_LIMIT = 6.0
CHUNK = 8000


@pytest.fixture(scope="module")
def fitted():
    # 25000 行按 0.8 / 0.1 / 0.1 划分，训练集 20000 行
    raw = make_splits(toy_generate("gauss_mixture_8", 25_000, seed=0))
    splits, stats = standardize(raw)
    model = ModelSection(head_type="cdf", layers=3).build(D=2, seed=0)
    report = train(
        model,
        splits,
        TrainConfig(learning_rate=5e-3, max_steps=4000, eval_every=250, patience=8),
    )
    return model, raw, splits, stats, report


def _raw_log_density(model, stats, points):
    pieces = [
        model.log_prob(stats.apply(points[start : start + CHUNK])).logp
        for start in range(0, len(points), CHUNK)
    ]
    return np.concatenate(pieces) + stats.log_scale


def test_density_integrates_to_one(fitted):
    model, _, _, stats, _ = fitted
    edges = np.linspace(-GRID_LIMIT, GRID_LIMIT, GRID_POINTS + 1)
    centers = 0.5 * (edges[1:] + edges[:-1])
    cell = (edges[1] - edges[0]) ** 2
    a, b = np.meshgrid(centers, centers, indexing="ij")
    points = np.stack([a.ravel(), b.ravel()], axis=1)
    mass = float(np.sum(np.exp(_raw_log_density(model, stats, points))) * cell)
    assert mass == pytest.approx(1.0, abs=0.02)


def test_fit_beats_gaussian_and_approaches_oracle(fitted):
    model, raw, splits, stats, report = fitted
    assert report.best_step is not None
    test_nll = -(evaluate(model, splits.test)[0] + stats.log_scale)
    baseline = gaussian_baseline_nll(raw.train, raw.test)
    oracle, _ = oracle_nll(200_000, seed=1)
    assert test_nll <= baseline - 1.0
    assert abs(test_nll - oracle) <= 0.3


def test_samples_stay_near_the_mixture(fitted):
    model, _, _, stats, _ = fitted
    samples = stats.invert(model.sample(10_000, seed=0))
    inside = np.mean(np.linalg.norm(samples, axis=1) <= GRID_LIMIT)
    assert inside >= 0.99


def test_parameter_count_matches_closed_form(fitted):
    model = fitted[0]
    assert model.param_count == model.expected_param_count()


@pytest.mark.parametrize("seed", range(20))
def test_default_models_are_triangular(head_type, seed):
    model = ModelSection(head_type=head_type).build(D=8, seed=seed)
    x = np.random.default_rng(seed).standard_normal((1, 8))
    result = triangularity_oracle(model, x)
    assert result.passed, (result.measure, result.detail)


@pytest.mark.parametrize("D", [2, 6])
def test_default_models_have_exact_logdet(head_type, D):
    for seed in range(5):
        model = ModelSection(head_type=head_type).build(D=D, seed=seed)
        x = np.random.default_rng(100 + seed).standard_normal((2, D))
        result = logdet_oracle(model, x)
        assert result.passed, (seed, result.measure, result.detail)


@pytest.mark.parametrize("seed", range(5))
def test_tiny_model_gradients_over_every_parameter(head_type, seed):
    model = tiny_model(head_type, D=3, seed=seed)
    batch = np.random.default_rng(seed).standard_normal((4, 3))
    result = gradient_oracle(model, batch)
    assert result.passed, (result.measure, result.detail)
