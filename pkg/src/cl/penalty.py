"""EWC / MAS 二次正则项"""

from typing import Tuple

import numpy as np

from ..models.network import GradVector, ParamVector
from ..models.regularization import ImportanceKind, ImportanceVector, RegConfig
from ..utils.exceptions import InvalidArgumentError


def penalty(
    params: ParamVector, imp: ImportanceVector, cfg: RegConfig
) -> Tuple[float, GradVector]:
    """计算正则项及其梯度

    fisher: (λ/2)·Σ F_i(θ_i−θ*_i)²，梯度 λ·F_i·(θ_i−θ*_i)
    mas:    λ·Σ Ω_i(θ_i−θ*_i)²，梯度 2λ·Ω_i·(θ_i−θ*_i)

    Args:
        params: 当前参数
        imp: 重要性权重与锚点
        cfg: 正则化配置

    Returns:
        (正则项取值, 梯度)
    """
    if len(params) != len(imp):
        raise InvalidArgumentError(
            f"params length {len(params)} does not match importance length {len(imp)}",
            field="params",
        )
    delta = params.values - imp.anchor.values
    weighted = imp.weights * delta
    lam = cfg.reg_lambda
    if imp.kind == ImportanceKind.FISHER:
        value = 0.5 * lam * float(np.dot(weighted, delta))
        grad = lam * weighted
    else:
        value = lam * float(np.dot(weighted, delta))
        grad = 2.0 * lam * weighted
    return value, GradVector(values=grad)
