"""
有限差分梯度检查
对每个参数随机抽取若干坐标，比较解析梯度和中心差分

f32 模式下解析梯度按32位计算，中心差分在同一组参数的64位副本上计算，
相对误差的分母下限放宽到 F32_DENOMINATOR_FLOOR
"""
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Callable, Dict, Mapping, Optional

import numpy as np

from src.utils.exceptions import NumericError
from src.utils.logger import get_logger
from .tensor import Tensor, get_precision, no_grad, precision

logger = get_logger(__name__)

F64_DENOMINATOR_FLOOR = 1e-8
# 32位反向传播的绝对舍入误差在 1e-6 量级
F32_DENOMINATOR_FLOOR = 1e-2


@dataclass
class GradCheckReport:
    """梯度检查结果"""
    max_relative_error: float
    worst_parameter: Optional[str] = None
    per_parameter: Dict[str, float] = field(default_factory=dict)
    coordinates_checked: int = 0
    precision: str = "f64"


def _evaluate(loss_fn: Callable[[], Tensor], param_name: str) -> float:
    with no_grad():
        value = float(loss_fn().data.reshape(-1)[0])
    if not np.isfinite(value):
        raise NumericError(f"扰动参数 {param_name} 后损失不是有限值: {value}")
    return value


@contextmanager
def _f64_reference(params: Mapping[str, Tensor]):
    """参数临时换成64位副本，退出时还原原数组"""
    originals = {name: param.data for name, param in params.items()}
    try:
        for param in params.values():
            param.data = param.data.astype(np.float64)
        with precision("f64"):
            yield
    finally:
        for name, param in params.items():
            param.data = originals[name]


def grad_check_report(
    loss_fn: Callable[[], Tensor],
    params: Mapping[str, Tensor],
    eps: float = 1e-4,
    samples_per_param: int = 5,
    seed: int = 0,
) -> GradCheckReport:
    """逐参数抽样比较 |a-n| / max(|a|, |n|, floor)"""
    mode = get_precision()
    floor = F64_DENOMINATOR_FLOOR if mode == "f64" else F32_DENOMINATOR_FLOOR

    for param in params.values():
        param.grad = None
    loss = loss_fn()
    if not np.all(np.isfinite(loss.data)):
        raise NumericError(f"初始损失不是有限值: {loss.data}")
    loss.backward()
    analytic = {
        name: np.zeros(param.data.shape) if param.grad is None else param.grad.astype(np.float64)
        for name, param in params.items()
    }

    rng = np.random.default_rng(seed)
    report = GradCheckReport(max_relative_error=0.0, precision=mode)
    with _f64_reference(params):
        for name, param in params.items():
            if not param.data.flags.c_contiguous:
                param.data = np.ascontiguousarray(param.data)
            flat = param.data.reshape(-1)
            count = min(samples_per_param, flat.size)
            coords = rng.choice(flat.size, size=count, replace=False)
            worst = 0.0
            for coord in coords:
                original = flat[coord]
                flat[coord] = original + eps
                plus = _evaluate(loss_fn, name)
                flat[coord] = original - eps
                minus = _evaluate(loss_fn, name)
                flat[coord] = original

                numeric = (plus - minus) / (2.0 * eps)
                a = float(analytic[name].reshape(-1)[coord])
                error = abs(a - numeric) / max(abs(a), abs(numeric), floor)
                worst = max(worst, error)
            report.per_parameter[name] = worst
            report.coordinates_checked += count
            if worst > report.max_relative_error:
                report.max_relative_error = worst
                report.worst_parameter = name

    logger.debug(
        f"梯度检查完成 ({mode}): {report.coordinates_checked} 个坐标, "
        f"最大相对误差 {report.max_relative_error:.3e} ({report.worst_parameter})"
    )
    return report


def grad_check(
    loss_fn: Callable[[], Tensor],
    params: Mapping[str, Tensor],
    eps: float = 1e-4,
    samples_per_param: int = 5,
    seed: int = 0,
) -> float:
    """返回最大相对误差"""
    return grad_check_report(loss_fn, params, eps, samples_per_param, seed).max_relative_error
