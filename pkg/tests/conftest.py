# -*- coding: utf-8 -*-

"""
测试共用的夹具
"""

"""
版权所有 © 2025 TNAFLib 开发者
Copyright © 2025 TNAFLib developers

开源相关声明请见 仓库根目录下的 License.md
Terms & Conditions: License.md in the root directory
"""

import json
import logging

import numpy as np
import pytest

from TNAFLib import FlowModel, HeadConfig

TINY = dict(E=8, heads=2, layers=1, mlp_hidden=8)
"""单元测试用的小号变换器"""

TINY_HEADS = {
    "affine": HeadConfig("affine"),
    "cdf": HeadConfig("cdf", hidden=4),
    "shared_cdf": HeadConfig("shared_cdf", hidden=4),
    "spline": HeadConfig("spline", bins=4),
}


def tiny_model(head_type: str = "affine", D: int = 3, seed: int = 0, **overrides) -> FlowModel:
    kwargs = dict(TINY)
    kwargs.update(overrides)
    return FlowModel(D=D, head_config=TINY_HEADS[head_type], seed=seed, **kwargs)


def identity_affine(D: int, log_sigma: float = 0.0) -> FlowModel:
    """投影头权重清零后 ψ = (0, log σ)，流退化为 y = σx"""
    model = tiny_model("affine", D=D)
    model.params["head.weight"].value[...] = 0.0
    model.params["head.bias"].value[...] = np.array([0.0, log_sigma])
    return model


@pytest.fixture(autouse=True)
def restore_package_loggers():
    """命令行会改动包日志记录器的处理器、级别与传递开关，每个测试结束后复原"""
    loggers = [logging.getLogger(name) for name in ("TNAFLib", "TNAFLib.metrics")]
    saved = [(lg, list(lg.handlers), lg.level, lg.propagate) for lg in loggers]
    yield
    for lg, handlers, level, propagate in saved:
        lg.handlers[:] = handlers
        lg.setLevel(level)
        lg.propagate = propagate


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture(params=sorted(TINY_HEADS))
def head_type(request) -> str:
    return request.param


@pytest.fixture
def tiny_config_document():
    def build(head_type: str = "affine", **train):
        document = {
            "model": dict(TINY, head_type=head_type, hidden=4, bins=4),
            "train": dict(
                dict(learning_rate=1e-2, batch_size=32, max_steps=6, eval_every=3, patience=5),
                **train
            ),
            "data": {"toy": "ring", "rows": 200, "seed": 0},
        }
        return document

    return build


@pytest.fixture
def tiny_config_file(tmp_path, tiny_config_document):
    def write(head_type: str = "affine", **train):
        path = tmp_path / "run_{}.json".format(head_type)
        path.write_text(json.dumps(tiny_config_document(head_type, **train)), encoding="utf-8")
        return path

    return write
