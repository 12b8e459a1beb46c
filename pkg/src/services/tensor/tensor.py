"""
张量与反向自动微分
Tensor 包装一个 numpy 数组，并在需要梯度时记录计算图
"""
from contextlib import contextmanager
from contextvars import ContextVar
from typing import Callable, Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from src.utils.exceptions import ContractError, ShapeError

BackwardFn = Callable[[np.ndarray], Tuple[Optional[np.ndarray], ...]]
ArrayLike = Union["Tensor", np.ndarray, float, int, Sequence]

_PRECISIONS = {"f32": np.float32, "f64": np.float64}

# 全局精度：训练用32位，梯度检查切换到64位
_default_dtype = np.float32

# 梯度记录开关按上下文隔离，线程池里的推理互不影响
_grad_enabled: ContextVar[bool] = ContextVar("grad_enabled", default=True)


def set_precision(name: str) -> None:
    """全局切换默认精度（f32 / f64）"""
    global _default_dtype
    if name not in _PRECISIONS:
        raise ContractError(f"未知精度: {name}，可选 {sorted(_PRECISIONS)}")
    _default_dtype = _PRECISIONS[name]


def get_precision() -> str:
    """当前默认精度名称"""
    return "f64" if _default_dtype == np.float64 else "f32"


def get_default_dtype():
    return _default_dtype


@contextmanager
def precision(name: str):
    """临时切换默认精度"""
    previous = get_precision()
    set_precision(name)
    try:
        yield
    finally:
        set_precision(previous)


@contextmanager
def no_grad():
    """在此上下文内不记录计算图"""
    token = _grad_enabled.set(False)
    try:
        yield
    finally:
        _grad_enabled.reset(token)


def is_grad_enabled() -> bool:
    return _grad_enabled.get()


class Tensor:
    """带梯度槽的稠密张量（行优先存储）"""

    __slots__ = ("data", "grad", "requires_grad", "name", "_parents", "_backward")

    def __init__(
        self,
        data: ArrayLike,
        requires_grad: bool = False,
        name: Optional[str] = None,
        dtype=None,
    ):
        if isinstance(data, Tensor):
            data = data.data
        self.data: np.ndarray = np.array(data, dtype=dtype or _default_dtype)
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self.name = name
        self._parents: Tuple["Tensor", ...] = ()
        self._backward: Optional[BackwardFn] = None

    # ------------------------------------------------------------------ #
    # 基本属性
    # ------------------------------------------------------------------ #

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data

    def detach(self) -> "Tensor":
        return Tensor(self.data.copy(), dtype=self.data.dtype)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        label = f", name={self.name}" if self.name else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{label}, requires_grad={self.requires_grad})"

    # ------------------------------------------------------------------ #
    # 计算图
    # ------------------------------------------------------------------ #

    @staticmethod
    def from_op(data: np.ndarray, parents: Iterable["Tensor"], backward: BackwardFn) -> "Tensor":
        """由算子结果构造新节点；任一输入需要梯度时才记录反向规则"""
        parents = tuple(parents)
        out = Tensor.__new__(Tensor)
        out.data = data
        out.grad = None
        out.name = None
        out.requires_grad = is_grad_enabled() and any(p.requires_grad for p in parents)
        if out.requires_grad:
            out._parents = parents
            out._backward = backward
        else:
            out._parents = ()
            out._backward = None
        return out

    def backward(self) -> None:
        """
        从标量损失出发做反向传播。
        梯度按加法累积：不清零就重复调用会让梯度翻倍。
        """
        if self.data.size != 1:
            raise ContractError(f"backward 只接受标量损失，实际形状 {self.shape}")
        if not self.requires_grad:
            raise ContractError("损失不依赖任何需要梯度的张量")

        order = self._topological_order()
        pending = {id(self): np.ones_like(self.data)}
        for node in reversed(order):
            upstream = pending.pop(id(node), None)
            if upstream is None:
                continue
            node.grad = upstream.copy() if node.grad is None else node.grad + upstream
            if node._backward is None:
                continue
            for parent, parent_grad in zip(node._parents, node._backward(upstream)):
                if parent_grad is None or not parent.requires_grad:
                    continue
                key = id(parent)
                pending[key] = pending[key] + parent_grad if key in pending else parent_grad

    def _topological_order(self) -> list:
        # 迭代式后序遍历，LSTM 展开的深图不会撞上递归上限
        order, visited = [], set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if parent.requires_grad and id(parent) not in visited:
                    stack.append((parent, False))
        return order

    # ------------------------------------------------------------------ #
    # 运算符
    # ------------------------------------------------------------------ #

    def __add__(self, other):
        from . import ops
        return ops.add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        from . import ops
        return ops.sub(self, other)

    def __rsub__(self, other):
        from . import ops
        return ops.sub(other, self)

    def __mul__(self, other):
        from . import ops
        return ops.mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        from . import ops
        return ops.div(self, other)

    def __neg__(self):
        from . import ops
        return ops.mul(self, -1.0)

    def __matmul__(self, other):
        from . import ops
        return ops.matmul(self, other)

    def __getitem__(self, key):
        from . import ops
        return ops.index(self, key)

    @property
    def T(self) -> "Tensor":
        from . import ops
        return ops.transpose(self)

    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        from . import ops
        return ops.sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims: bool = False) -> "Tensor":
        from . import ops
        return ops.mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape) -> "Tensor":
        from . import ops
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return ops.reshape(self, shape)


def as_tensor(value: ArrayLike) -> Tensor:
    """把常量包装为不需要梯度的张量；已是张量则原样返回"""
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


def check_same_shape(a: np.ndarray, b: np.ndarray, what: str) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"{what}: 形状 {a.shape} 与 {b.shape} 不一致")
