"""有限差分梯度校验工具"""

from typing import Callable, Union

import numpy as np

from ..models.network import GradVector, ParamVector
from ..utils.validators import validate_positive_float

ParamsLike = Union[ParamVector, np.ndarray]


def finite_diff_grad(
    f: Callable[[ParamsLike], float], params: ParamsLike, eps: float = 1e-5
) -> GradVector:
    """中心差分梯度：(f(θ+εe_i) − f(θ−εe_i)) / (2ε)

    Args:
        f: 确定性标量函数，接受与 params 相同类型的参数
        params: ParamVector 或一维数组
        eps: 差分步长

    Returns:
        与 params 对齐的梯度
    """
    validate_positive_float(eps, "eps")
    is_vector = isinstance(params, ParamVector)
    theta = np.array(params.values if is_vector else params, dtype=np.float64).reshape(-1)

    def evaluate(values: np.ndarray) -> float:
        arg = params.with_values(values) if is_vector else values
        return float(f(arg))

    grad = np.empty_like(theta)
    for i in range(theta.shape[0]):
        plus = theta.copy()
        minus = theta.copy()
        plus[i] += eps
        minus[i] -= eps
        grad[i] = (evaluate(plus) - evaluate(minus)) / (2.0 * eps)
    return GradVector(values=grad)


def max_relative_error(
    analytic: Union[GradVector, np.ndarray],
    numeric: Union[GradVector, np.ndarray],
    floor: float = 1e-6,
) -> float:
    """逐元素相对误差 |a−n| / max(|a|+|n|, floor) 的最大值"""
    a = np.asarray(getattr(analytic, "values", analytic), dtype=np.float64)
    n = np.asarray(getattr(numeric, "values", numeric), dtype=np.float64)
    denom = np.maximum(np.abs(a) + np.abs(n), floor)
    return float(np.max(np.abs(a - n) / denom))
