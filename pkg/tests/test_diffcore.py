# -*- coding: utf-8 -*-

"""
自动微分核心
"""

"""
版权所有 © 2025 TNAFLib 开发者
Copyright © 2025 TNAFLib developers

开源相关声明请见 仓库根目录下的 License.md
Terms & Conditions: License.md in the root directory
"""

import math
import threading

import numpy as np
import pytest

from TNAFLib.diffcore import (
    MASK_SURROGATE,
    Node,
    ParamSet,
    backward,
    checked,
    fd_gradient,
    is_grad_enabled,
    no_grad,
    ops,
)
from TNAFLib.exceptions import (
    ContractViolationError,
    DimensionError,
    DomainError,
    NonFiniteError,
)


def test_broadcast_gradients_are_reduced():
    params = ParamSet()
    a = params.add("a", np.arange(6.0).reshape(2, 3))
    b = params.add("b", np.array([1.0, 2.0, 3.0]))
    backward(ops.sum_(a * b))
    np.testing.assert_array_equal(a.grad, np.tile(b.value, (2, 1)))
    np.testing.assert_array_equal(b.grad, a.value.sum(axis=0))


def test_ndarray_on_the_left_stays_a_node():
    params = ParamSet()
    a = params.add("a", np.ones(3))
    out = np.array([2.0, 3.0, 4.0]) * a
    assert isinstance(out, Node)
    backward(ops.sum_(out))
    np.testing.assert_array_equal(a.grad, [2.0, 3.0, 4.0])


def test_repeated_backward_accumulates():
    params = ParamSet()
    a = params.add("a", np.array([1.5, -2.0]))
    loss = ops.sum_(ops.square(a))
    backward(loss)
    backward(loss)
    np.testing.assert_allclose(a.grad, 4.0 * a.value)
    params.zero_grad()
    assert not np.any(a.grad)


def test_shared_subexpression_gradient():
    params = ParamSet()
    a = params.add("a", np.array(3.0))
    b = a * a
    backward(b + b)
    assert a.grad == pytest.approx(12.0)


def test_backward_requires_scalar():
    params = ParamSet()
    a = params.add("a", np.ones(2))
    with pytest.raises(ContractViolationError):
        backward(a * 2.0)


def test_no_grad_builds_no_graph():
    params = ParamSet()
    a = params.add("a", np.ones(2))
    with no_grad():
        assert not is_grad_enabled()
        out = ops.exp(a)
    assert is_grad_enabled()
    assert not out.requires_grad
    assert out.parents == ()


def test_no_grad_is_thread_local():
    seen = []
    inside = threading.Event()
    release = threading.Event()

    def worker():
        with no_grad():
            inside.set()
            release.wait(5)

    thread = threading.Thread(target=worker)
    thread.start()
    inside.wait(5)
    seen.append(is_grad_enabled())
    release.set()
    thread.join()
    assert seen == [True]


def test_logsumexp_of_constant_vector_is_exact():
    c = 0.7310585786300049
    out = ops.logsumexp(Node(np.full(3, c)))
    assert out.item() == c + math.log(3.0)


def test_logsumexp_handles_large_values():
    out = ops.logsumexp(Node(np.array([1000.0, 1000.0])))
    assert out.item() == pytest.approx(1000.0 + math.log(2.0))


def test_logsumexp_rejects_empty_axis():
    with pytest.raises(DimensionError):
        ops.logsumexp(Node(np.zeros((2, 0))), axis=-1)


def test_matmul_shape_mismatch_reports_shapes():
    with pytest.raises(DimensionError) as info:
        ops.matmul(Node(np.ones((2, 3))), Node(np.ones((4, 5))))
    assert "(2, 3)" in info.value.describe()


def test_masked_softmax_gives_exact_zeros():
    D = 4
    mask = np.triu(np.full((D, D), MASK_SURROGATE), k=1)
    scores = Node(np.random.default_rng(0).standard_normal((2, D, D)))
    weights = ops.masked_softmax(scores, mask).value
    assert np.all(weights[:, np.triu_indices(D, 1)[0], np.triu_indices(D, 1)[1]] == 0.0)
    np.testing.assert_allclose(weights.sum(axis=-1), 1.0)


def test_masked_softmax_rejects_fully_masked_row():
    mask = np.full((2, 2), MASK_SURROGATE)
    with pytest.raises(ContractViolationError):
        ops.masked_softmax(Node(np.zeros((2, 2))), mask)


def test_checked_mode_raises_on_domain_and_overflow():
    with checked():
        with pytest.raises(DomainError):
            ops.log(Node(np.array([1.0, 0.0])))
        with np.errstate(over="ignore"):
            with pytest.raises(NonFiniteError):
                ops.exp(Node(np.array([1000.0])))
    # 离开检查模式后只产生 inf，不报错
    with np.errstate(over="ignore"):
        assert np.isinf(ops.exp(Node(np.array([1000.0]))).item())


def test_getitem_with_repeated_index_accumulates():
    params = ParamSet()
    a = params.add("a", np.arange(4.0))
    backward(ops.sum_(a[np.array([0, 0, 2])]))
    np.testing.assert_array_equal(a.grad, [2.0, 0.0, 1.0, 0.0])


def test_composite_gradient_matches_finite_differences(rng):
    params = ParamSet()
    params.add("w", rng.standard_normal((3, 4)) * 0.5)
    params.add("gain", 1.0 + 0.1 * rng.standard_normal(4))
    params.add("bias", 0.1 * rng.standard_normal(4))
    params.add("v", rng.standard_normal(4))
    x = rng.standard_normal((5, 3))

    def f(p):
        h = ops.layer_norm(x @ p["w"], p["gain"], p["bias"], 1e-5)
        s = ops.softmax(ops.tanh(h) * p["v"], axis=-1)
        return ops.mean(ops.log_sigmoid(ops.sum_(s * h, axis=-1)) + ops.softplus(h[:, 0]))

    backward(f(params))
    analytic = {name: grad.copy() for name, grad in params.gradients().items()}
    numeric = fd_gradient(f, params)
    for name in params:
        np.testing.assert_allclose(analytic[name], numeric[name], rtol=1e-6, atol=1e-8)


def test_fd_gradient_restores_parameters(rng):
    params = ParamSet()
    w = params.add("w", rng.standard_normal(3))
    before = w.value.copy()
    fd_gradient(lambda p: ops.sum_(ops.exp(p["w"])), params)
    np.testing.assert_array_equal(w.value, before)


def test_paramset_names_snapshot_and_restore():
    params = ParamSet()
    a = params.add("a", np.zeros(2))
    with pytest.raises(ContractViolationError):
        params.add("a", np.zeros(2))
    saved = params.snapshot()
    a.value += 1.0
    params.restore(saved)
    np.testing.assert_array_equal(a.value, [0.0, 0.0])
    assert params.count() == 2 and list(params) == ["a"]


def _causal_scores(a):
    return ops.masked_softmax(a, np.triu(np.full((4, 4), MASK_SURROGATE), k=1))


OP_CASES = {
    "exp": ops.exp,
    "tanh": ops.tanh,
    "sigmoid": ops.sigmoid,
    "softplus": ops.softplus,
    "log_sigmoid": ops.log_sigmoid,
    "square": ops.square,
    "log": lambda a: ops.log(ops.square(a) + 0.5),
    "sqrt": lambda a: ops.sqrt(ops.square(a) + 0.5),
    "div": lambda a: a / (ops.square(a) + 1.0),
    "matmul": lambda a: a @ ops.transpose(a),
    "cumsum": lambda a: ops.cumsum(a, axis=-1),
    "softmax": lambda a: ops.softmax(a, axis=0),
    "logsumexp": lambda a: ops.logsumexp(a, axis=-1),
    "layer_norm": lambda a: ops.layer_norm(a, np.ones(4), np.zeros(4), 1e-5),
    "masked_softmax": _causal_scores,
}


@pytest.mark.parametrize("seed", range(10))
@pytest.mark.parametrize("name", sorted(OP_CASES))
def test_op_gradient_matches_finite_differences(name, seed):
    op = OP_CASES[name]
    params = ParamSet()
    params.add("a", np.random.default_rng(seed).standard_normal((4, 4)))

    def f(p):
        out = op(p["a"])
        weights = np.cos(1.0 + np.arange(out.value.size)).reshape(out.shape)
        return ops.sum_(out * weights)

    backward(f(params))
    analytic = params["a"].grad.copy()
    numeric = fd_gradient(f, params)["a"]
    np.testing.assert_allclose(analytic, numeric, rtol=1e-6, atol=1e-8)


def test_layer_norm_rows_have_zero_mean_and_unit_variance(rng):
    x = 3.0 * rng.standard_normal((5, 16)) + 2.0
    out = ops.layer_norm(Node(x), np.ones(16), np.zeros(16), 1e-12).value
    np.testing.assert_allclose(out.mean(axis=-1), 0.0, atol=1e-12)
    np.testing.assert_allclose(out.var(axis=-1), 1.0, rtol=1e-9)


def test_masked_entries_get_no_gradient(rng):
    D = 4
    params = ParamSet()
    scores = params.add("scores", rng.standard_normal((2, D, D)))
    weights = ops.masked_softmax(scores, np.triu(np.full((D, D), MASK_SURROGATE), k=1))
    backward(ops.sum_(weights * rng.standard_normal((2, D, D))))
    upper = np.triu_indices(D, 1)
    assert np.all(scores.grad[:, upper[0], upper[1]] == 0.0)
    assert np.any(scores.grad[:, 1, :2] != 0.0)
