# -*- coding: utf-8 -*-

"""
训练循环、梯度裁剪与自适应矩估计
"""

"""
版权所有 © 2025 TNAFLib 开发者
Copyright © 2025 TNAFLib developers

开源相关声明请见 仓库根目录下的 License.md
Terms & Conditions: License.md in the root directory
"""

import logging
import math

import numpy as np
import pytest

from TNAFLib import trainer
from TNAFLib.data import DatasetMatrix, make_splits, standardize, toy_generate
from TNAFLib.diffcore import ParamSet, backward, ops
from TNAFLib.exceptions import ConfigError, EmptyDatasetError, TrainingFaultError
from TNAFLib.trainer import (
    OptimizerState,
    TrainConfig,
    clip_gradients,
    evaluate,
    optimizer_step,
    train,
)

from conftest import identity_affine, tiny_model


@pytest.fixture
def ring_splits():
    splits, _ = standardize(make_splits(toy_generate("ring", 300, seed=0)))
    return splits


def test_clip_rescales_to_norm():
    params = ParamSet()
    a = params.add("a", np.zeros(2))
    a.grad[...] = [3.0, 4.0]
    assert clip_gradients(params, 1.0) == pytest.approx(5.0)
    np.testing.assert_allclose(a.grad, [0.6, 0.8])


def test_clip_leaves_small_gradients():
    params = ParamSet()
    a = params.add("a", np.zeros(2))
    a.grad[...] = [0.3, 0.4]
    clip_gradients(params, 1.0)
    np.testing.assert_array_equal(a.grad, [0.3, 0.4])


def test_clip_rejects_non_finite():
    params = ParamSet()
    a = params.add("a", np.zeros(2))
    a.grad[...] = [np.nan, 1.0]
    with pytest.raises(TrainingFaultError) as info:
        clip_gradients(params, 1.0, step=7)
    assert info.value.step == 7 and info.value.exit_code == 6


def test_first_adaptive_step_moves_by_learning_rate():
    params = ParamSet()
    a = params.add("a", np.array([1.0, -2.0]))
    a.grad[...] = [0.5, -3.0]
    state = OptimizerState.for_params(params)
    optimizer_step(params, state, lr=0.1)
    # 偏差修正后第一步的步长恰为 lr·sign(g)
    np.testing.assert_allclose(a.value, [0.9, -1.9], rtol=1e-6)
    assert not np.any(a.grad)
    assert state.step == 1


def test_adaptive_steps_minimize_quadratic():
    params = ParamSet()
    a = params.add("a", np.array([3.0, -1.0]))
    state = OptimizerState.for_params(params)
    for _ in range(2000):
        backward(ops.sum_(ops.square(a - np.array([0.5, 2.0]))))
        optimizer_step(params, state, lr=0.01)
    np.testing.assert_allclose(a.value, [0.5, 2.0], atol=1e-3)


def test_train_config_validation():
    with pytest.raises(ConfigError):
        TrainConfig(learning_rate=0.0)
    with pytest.raises(ConfigError):
        TrainConfig(max_steps=-1)
    assert TrainConfig(max_steps=0).max_steps == 0


def test_zero_steps_leaves_model_untouched(ring_splits):
    model = tiny_model(D=2)
    before = model.params.snapshot()
    report = train(model, ring_splits, TrainConfig(max_steps=0))
    assert report.history == [] and report.steps == 0
    for name, value in model.params.snapshot().items():
        np.testing.assert_array_equal(value, before[name])


def test_training_reduces_validation_nll(ring_splits):
    model = tiny_model("affine", D=2)
    start = -evaluate(model, ring_splits.val)[0]
    report = train(
        model,
        ring_splits,
        TrainConfig(learning_rate=1e-2, batch_size=64, max_steps=60, eval_every=20, patience=10),
    )
    assert [record.step for record in report.history] == [20, 40, 60]
    assert report.best_val_nll < start
    assert report.best_val_nll == min(record.val_nll for record in report.history)
    # 训练结束时模型已恢复为最佳参数
    assert -evaluate(model, ring_splits.val)[0] == pytest.approx(report.best_val_nll, rel=1e-12)


def test_training_is_deterministic(ring_splits):
    config = TrainConfig(learning_rate=1e-2, batch_size=64, max_steps=10, eval_every=5)
    reports, snapshots = [], []
    for _ in range(2):
        model = tiny_model("spline", D=2, seed=4)
        reports.append(train(model, ring_splits, config))
        snapshots.append(model.params.snapshot())
    assert reports[0] == reports[1]
    for name in snapshots[0]:
        np.testing.assert_array_equal(snapshots[0][name], snapshots[1][name])


def test_early_stopping_restores_best_snapshot(ring_splits, monkeypatch):
    model = tiny_model("affine", D=2)
    scores = iter([1.0, 0.5, 0.7, 0.8, 0.1])
    snapshots = []

    def scripted_evaluate(model, matrix):
        snapshots.append(model.params.snapshot())
        return -next(scores), 0.0

    monkeypatch.setattr(trainer, "evaluate", scripted_evaluate)
    config = TrainConfig(batch_size=64, max_steps=100, eval_every=1, patience=2)
    report = train(model, ring_splits, config)

    assert report.stopped_early
    assert report.steps == 4
    assert report.best_step == 2 and report.best_val_nll == 0.5
    for name, value in snapshots[1].items():
        np.testing.assert_array_equal(model.params[name].value, value)


def test_metric_lines_are_logged(ring_splits, caplog, monkeypatch):
    model = tiny_model("affine", D=2)
    # 命令行会关闭指标日志的向上传递
    monkeypatch.setattr(logging.getLogger("TNAFLib.metrics"), "propagate", True)
    with caplog.at_level(logging.INFO, logger="TNAFLib.metrics"):
        train(model, ring_splits, TrainConfig(batch_size=64, max_steps=4, eval_every=2))
    lines = [r.getMessage() for r in caplog.records if r.name == "TNAFLib.metrics"]
    assert len(lines) == 2
    assert lines[0].startswith("step=2 train_nll=") and " val_nll=" in lines[0]


def test_non_finite_loss_is_a_training_fault(ring_splits):
    model = tiny_model("affine", D=2)
    model.params["head.bias"].value[1] = 1e6
    initial = model.params.snapshot()
    with np.errstate(over="ignore", invalid="ignore"):
        with pytest.raises(TrainingFaultError) as info:
            train(model, ring_splits, TrainConfig(max_steps=3, eval_every=1))
    assert info.value.step == 1
    # 还没有任何验证记录，模型回到训练开始时的参数
    for name, value in initial.items():
        np.testing.assert_array_equal(model.params[name].value, value)


def test_evaluate_reports_standard_error():
    model = tiny_model("affine", D=2)
    values = np.random.default_rng(0).standard_normal((50, 2))
    mean, std_err = evaluate(model, values)
    logp = model.log_prob(values).logp
    assert mean == pytest.approx(float(np.mean(logp)))
    assert std_err == pytest.approx(float(np.std(logp, ddof=1) / math.sqrt(50)))
    assert evaluate(model, values[:1])[1] == 0.0
    with pytest.raises(EmptyDatasetError):
        evaluate(model, DatasetMatrix(np.zeros((0, 2))))


def test_one_dimensional_affine_fit_recovers_standard_normal():
    values = np.random.default_rng(7).standard_normal((5000, 1))
    splits = make_splits(DatasetMatrix(values))
    model = tiny_model("affine", D=1)
    config = TrainConfig(
        learning_rate=1e-2, batch_size=256, max_steps=800, eval_every=100, patience=20
    )
    train(model, splits, config)
    mu, log_sigma = model.pseudo_parameters(np.zeros((1, 1))).value[0, 0]
    assert abs(mu) < 0.05 and abs(math.exp(log_sigma) - 1.0) < 0.05


def test_identity_flow_scores_the_standard_normal_entropy():
    values = np.random.default_rng(0).standard_normal((100_000, 1))
    mean, _ = evaluate(identity_affine(D=1), values)
    assert mean == pytest.approx(-0.5 * math.log(2.0 * math.pi * math.e), abs=0.01)
