"""
Adam 优化器
"""
from dataclasses import dataclass, field
from typing import Dict, Mapping

import numpy as np

from src.utils.exceptions import ContractError
from .tensor import Tensor


@dataclass
class AdamState:
    """Adam 的一阶/二阶矩与步数"""
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step_count: int = 0
    first_moment: Dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: Dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(params: Mapping[str, Tensor], state: AdamState) -> AdamState:
    """
    对已登记的参数做一次带偏差修正的 Adam 更新（原地修改参数值）。
    任一参数缺少梯度时整步拒绝执行，不会出现部分更新。
    """
    missing = [name for name, p in params.items() if p.grad is None]
    if missing:
        raise ContractError(f"以下参数缺少梯度，拒绝更新: {missing[:5]}")

    state.step_count += 1
    t = state.step_count
    correction1 = 1.0 - state.beta1 ** t
    correction2 = 1.0 - state.beta2 ** t

    for name, param in params.items():
        grad = param.grad
        m = state.first_moment.get(name)
        v = state.second_moment.get(name)
        if m is None:
            m = np.zeros_like(param.data)
            v = np.zeros_like(param.data)
        elif m.shape != param.shape:
            raise ContractError(f"参数 {name} 的形状 {param.shape} 与动量 {m.shape} 不一致")

        m = state.beta1 * m + (1.0 - state.beta1) * grad
        v = state.beta2 * v + (1.0 - state.beta2) * grad * grad
        state.first_moment[name] = m
        state.second_moment[name] = v

        update = state.learning_rate * (m / correction1) / (np.sqrt(v / correction2) + state.epsilon)
        param.data -= update.astype(param.dtype)

    return state


class Adam:
    """持有参数表和状态的 Adam 包装"""

    def __init__(self, params: Mapping[str, Tensor], learning_rate: float = 1e-3):
        self.params = dict(params)
        self.state = AdamState(learning_rate=learning_rate)

    def step(self) -> None:
        adam_step(self.params, self.state)

    def zero_grad(self) -> None:
        for param in self.params.values():
            param.grad = None
