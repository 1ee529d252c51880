# -*- coding: utf-8 -*-

"""
计算图节点、参数集与反向传播
"""

"""
版权所有 © 2025 TNAFLib 开发者
Copyright © 2025 TNAFLib developers

开源相关声明请见 仓库根目录下的 License.md
Terms & Conditions: License.md in the root directory
"""

import threading
from contextlib import contextmanager
from typing import (
    Callable,
    Dict,
    Iterator,
    ItemsView,
    KeysView,
    List,
    Optional,
    Sequence,
    Tuple,
    ValuesView,
)

import numpy as np

from ..exceptions import ContractViolationError, NonFiniteError
from ..types import Tensor

BackwardRule = Callable[[Tensor], Sequence[Optional[Tensor]]]
"""局部反向规则：输入输出梯度，返回各父节点的梯度（不需要的可为 None）"""


_mode = threading.local()


def is_grad_enabled() -> bool:
    """当前线程是否记录计算图"""
    return getattr(_mode, "grad", True)


def is_checked() -> bool:
    """当前线程是否处于检查模式（检测 NaN/Inf 与定义域）"""
    return getattr(_mode, "checked", False)


@contextmanager
def no_grad() -> Iterator[None]:
    """只求值、不建图"""
    previous = is_grad_enabled()
    _mode.grad = False
    try:
        yield
    finally:
        _mode.grad = previous


@contextmanager
def checked() -> Iterator[None]:
    """检查模式：每个运算的输出都须为有限值"""
    previous = is_checked()
    _mode.checked = True
    try:
        yield
    finally:
        _mode.checked = previous


def check_finite(value: Tensor, where: str = "") -> None:
    """若数组中含 NaN 或 Inf 则报错"""
    if not np.all(np.isfinite(value)):
        bad = int(np.size(value) - np.count_nonzero(np.isfinite(value)))
        raise NonFiniteError("{} 中有 {} 个非有限值".format(where or "张量", bad))


class Node:
    """计算图中的一个节点：值、梯度与反向规则"""

    __slots__ = ("value", "grad", "requires_grad", "parents", "backward_rule", "name")

    # 让 ndarray 与节点的混合运算落到节点的反射运算符上
    __array_ufunc__ = None

    value: Tensor
    """节点的值"""

    grad: Optional[Tensor]
    """与值同形的梯度，需要梯度时初始化为零"""

    requires_grad: bool
    """是否需要梯度"""

    parents: Tuple["Node", ...]
    """前驱节点"""

    backward_rule: Optional[BackwardRule]
    """局部反向规则"""

    def __init__(
        self,
        value,
        requires_grad: bool = False,
        parents: Tuple["Node", ...] = (),
        backward_rule: Optional[BackwardRule] = None,
        name: str = "",
    ):
        self.value = np.asarray(value, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad = np.zeros_like(self.value) if requires_grad else None
        self.parents = parents
        self.backward_rule = backward_rule
        self.name = name

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.value.shape

    @property
    def ndim(self) -> int:
        return self.value.ndim

    def zero_grad(self) -> None:
        if self.grad is not None:
            self.grad.fill(0.0)

    def item(self) -> float:
        return float(self.value.reshape(-1)[0])

    def __repr__(self) -> str:
        return "Node({}shape={}, requires_grad={})".format(
            "{!r}, ".format(self.name) if self.name else "",
            self.shape,
            self.requires_grad,
        )

    # 运算符委托给 ops 模块
    def __add__(self, other):
        from .ops import add

        return add(self, other)

    def __radd__(self, other):
        from .ops import add

        return add(other, self)

    def __sub__(self, other):
        from .ops import sub

        return sub(self, other)

    def __rsub__(self, other):
        from .ops import sub

        return sub(other, self)

    def __mul__(self, other):
        from .ops import mul

        return mul(self, other)

    def __rmul__(self, other):
        from .ops import mul

        return mul(other, self)

    def __truediv__(self, other):
        from .ops import div

        return div(self, other)

    def __rtruediv__(self, other):
        from .ops import div

        return div(other, self)

    def __neg__(self):
        from .ops import neg

        return neg(self)

    def __matmul__(self, other):
        from .ops import matmul

        return matmul(self, other)

    def __rmatmul__(self, other):
        from .ops import matmul

        return matmul(other, self)

    def __getitem__(self, index):
        from .ops import getitem

        return getitem(self, index)


def as_node(x) -> Node:
    """把数组或标量包装为常量节点"""
    return x if isinstance(x, Node) else Node(x)


def make_node(value: Tensor, parents: Sequence[Node], rule: BackwardRule) -> Node:
    """
    由运算结果构造节点；仅在记录计算图且有父节点需要梯度时保留反向规则
    """
    if is_checked():
        check_finite(value, "运算输出")
    needs = is_grad_enabled() and any(p.requires_grad for p in parents)
    if needs:
        return Node(value, requires_grad=True, parents=tuple(parents), backward_rule=rule)
    return Node(value)


def unbroadcast(grad: Tensor, shape: Tuple[int, ...]) -> Tensor:
    """把按广播规则扩展过的梯度求和还原到原形状"""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def _topological_order(root: Node) -> List[Node]:
    order: List[Node] = []
    visited = set()
    stack: List[Tuple[Node, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node.parents:
            if parent.requires_grad and id(parent) not in visited:
                stack.append((parent, False))
    return order


def backward(loss: Node) -> None:
    """
    从标量节点出发做反向传播

    所有需要梯度的节点的 grad 累加上 ∂loss/∂node；重复调用而不清零时会继续累加

    Raises
    ------
    ContractViolationError
        loss 不是标量
    """
    if loss.value.size != 1:
        raise ContractViolationError(
            "反向传播的起点必须是标量，实际形状 {}".format(loss.shape)
        )
    if not loss.requires_grad:
        return

    # 本次传播的梯度先记在局部字典里，最后一次性累加，重复调用才不会重复传播旧梯度
    pending: Dict[int, Tensor] = {id(loss): np.ones_like(loss.value)}
    order = _topological_order(loss)
    for node in reversed(order):
        upstream = pending.get(id(node))
        if upstream is None or node.backward_rule is None:
            continue
        for parent, g in zip(node.parents, node.backward_rule(upstream)):
            if g is None or not parent.requires_grad:
                continue
            g = unbroadcast(np.asarray(g, dtype=np.float64), parent.shape)
            if id(parent) in pending:
                pending[id(parent)] = pending[id(parent)] + g
            else:
                pending[id(parent)] = g

    for node in order:
        g = pending.get(id(node))
        if g is not None and node.grad is not None:
            node.grad += g
            if is_checked():
                check_finite(node.grad, "梯度 {}".format(node.name or ""))


class ParamSet:
    """有序的 名称 → 可训练节点 映射"""

    def __init__(self):
        self._nodes: Dict[str, Node] = {}

    def add(self, name: str, value) -> Node:
        """登记一个新参数，名称不可重复"""
        if name in self._nodes:
            raise ContractViolationError("参数名重复：{}".format(name))
        node = Node(np.array(value, dtype=np.float64), requires_grad=True, name=name)
        self._nodes[name] = node
        return node

    def __getitem__(self, name: str) -> Node:
        return self._nodes[name]

    def __contains__(self, name: str) -> bool:
        return name in self._nodes

    def __iter__(self) -> Iterator[str]:
        return iter(self._nodes)

    def __len__(self) -> int:
        return len(self._nodes)

    def keys(self) -> KeysView[str]:
        return self._nodes.keys()

    def values(self) -> ValuesView[Node]:
        return self._nodes.values()

    def items(self) -> ItemsView[str, Node]:
        return self._nodes.items()

    def count(self) -> int:
        """标量参数总数"""
        return int(sum(node.value.size for node in self._nodes.values()))

    def zero_grad(self) -> None:
        for node in self._nodes.values():
            node.zero_grad()

    def snapshot(self) -> Dict[str, Tensor]:
        """复制全部参数值"""
        return {name: node.value.copy() for name, node in self._nodes.items()}

    def restore(self, snapshot: Dict[str, Tensor]) -> None:
        """写回 snapshot() 得到的参数值"""
        for name, node in self._nodes.items():
            np.copyto(node.value, snapshot[name])

    def gradients(self) -> Dict[str, Tensor]:
        return {
            name: (node.grad if node.grad is not None else np.zeros_like(node.value))
            for name, node in self._nodes.items()
        }
