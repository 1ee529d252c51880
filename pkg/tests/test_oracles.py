# -*- coding: utf-8 -*-

"""
数值校验
"""

"""
版权所有 © 2025 TNAFLib 开发者
Copyright © 2025 TNAFLib developers

开源相关声明请见 仓库根目录下的 License.md
Terms & Conditions: License.md in the root directory
"""

import numpy as np

from TNAFLib.oracles import (
    gradient_oracle,
    inversion_oracle,
    logdet_oracle,
    run_oracles,
    triangularity_oracle,
)

from conftest import identity_affine, tiny_model


def test_all_oracles_pass_on_fresh_models(head_type):
    results = run_oracles(tiny_model(head_type, seed=7), seed=1, inversion_rows=16)
    assert [r.name for r in results] == ["triangularity", "logdet", "gradient", "inversion"]
    failed = [(r.name, r.measure, r.detail) for r in results if not r.passed]
    assert failed == []


def test_full_gradient_check(head_type, rng):
    model = tiny_model(head_type, D=2, seed=2)
    result = gradient_oracle(model, rng.standard_normal((3, 2)))
    assert result.passed, (result.measure, result.detail)


def test_identity_flow_is_exactly_triangular():
    model = identity_affine(D=3)
    result = triangularity_oracle(model, np.zeros((1, 3)))
    assert result.passed and result.measure < 1e-12


def test_logdet_oracle_detects_a_wrong_determinant(monkeypatch, rng):
    model = identity_affine(D=2)
    x = rng.standard_normal((2, 2))
    assert logdet_oracle(model, x).passed

    original = model._forward

    def skewed(rows):
        y, logdet = original(rows)
        return y, logdet + 0.1

    monkeypatch.setattr(model, "_forward", skewed)
    assert not logdet_oracle(model, x).passed


def test_inversion_oracle_reports_failures_instead_of_raising():
    model = tiny_model("cdf", D=2)
    model.params["head.weight"].value[...] = 0.0
    model.params["head.bias"].value[...] = 0.0
    # x 很大时 tanh 在浮点下饱和为 1，前向不再严格单调，往返误差超限
    result = inversion_oracle(model, np.array([[0.0, 0.0], [0.0, 40.0]]))
    assert not result.passed
