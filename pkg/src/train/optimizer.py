"""Adam 优化器（纯函数形式）"""

from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from ..models.network import GradVector, ParamVector
from ..utils.exceptions import InvalidArgumentError
from ..utils.validators import validate_positive_float

BETA1 = 0.9
BETA2 = 0.999
EPSILON = 1e-8


class AdamState(BaseModel):
    """一阶/二阶矩估计与步数"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    m: np.ndarray = Field(description="一阶矩")
    v: np.ndarray = Field(description="二阶矩")
    step: int = Field(default=0, ge=0, description="已完成的更新步数")

    @field_validator("m", "v", mode="before")
    @classmethod
    def coerce(cls, value):
        return np.array(value, dtype=np.float64).reshape(-1)

    @classmethod
    def zeros(cls, size: int) -> "AdamState":
        return cls(m=np.zeros(size), v=np.zeros(size), step=0)


def adam_step(
    params: ParamVector,
    grads: GradVector,
    opt_state: Optional[AdamState],
    lr: float,
) -> Tuple[ParamVector, AdamState]:
    """一次偏差校正的 Adam 更新

    Args:
        params: 当前参数
        grads: 梯度
        opt_state: 优化器状态（None 表示从零开始）
        lr: 学习率

    Returns:
        (新参数, 新状态)
    """
    validate_positive_float(lr, "lr")
    if len(grads) != len(params):
        raise InvalidArgumentError(
            f"gradient length {len(grads)} does not match parameter length {len(params)}",
            field="grads",
        )
    state = opt_state or AdamState.zeros(len(params))
    if state.m.shape[0] != len(params):
        raise InvalidArgumentError("optimizer state does not match parameters", field="opt_state")

    g = grads.values
    step = state.step + 1
    m = BETA1 * state.m + (1.0 - BETA1) * g
    v = BETA2 * state.v + (1.0 - BETA2) * g * g
    m_hat = m / (1.0 - BETA1**step)
    v_hat = v / (1.0 - BETA2**step)
    values = params.values - lr * m_hat / (np.sqrt(v_hat) + EPSILON)
    return params.with_values(values), AdamState(m=m, v=v, step=step)
