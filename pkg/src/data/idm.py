"""智能驾驶员模型（IDM），仅用于合成跟驰数据"""

from typing import Union

import numpy as np

from ..models.event import IdmParams
from ..utils.exceptions import InvalidArgumentError

ArrayLike = Union[float, np.ndarray]


def desired_gap(v: ArrayLike, dv: ArrayLike, p: IdmParams) -> ArrayLike:
    """期望间距 s* = s0 + max(0, vT + v·dv / (2√(ab)))，dv 为接近速度 v − v_lead

    动态项截断为非负，前车快速远离时 s* 不低于 s0；动态项非负时与不截断的公式相同。
    """
    dynamic = v * p.time_headway + v * dv / (2.0 * np.sqrt(p.max_accel * p.comfortable_decel))
    return p.min_gap + np.maximum(0.0, dynamic)


def idm_accel(v: ArrayLike, dv: ArrayLike, s: ArrayLike, p: IdmParams) -> ArrayLike:
    """IDM 加速度 a·[1 − (v/v0)^δ − (s*/s)²]

    Args:
        v: 本车速度 (m/s)
        dv: 接近速度 v − v_lead (m/s)
        s: 间距 (m)，必须 > 0
        p: IDM 参数

    Returns:
        加速度 (m/s²)
    """
    if np.any(np.asarray(s) <= 0.0):
        raise InvalidArgumentError("IDM gap must be > 0", field="s", value=s)
    free = (np.asarray(v) / p.desired_speed) ** p.exponent
    interaction = (desired_gap(v, dv, p) / s) ** 2
    accel = p.max_accel * (1.0 - free - interaction)
    if np.ndim(accel) == 0:
        return float(accel)
    return accel


def equilibrium_gap(v: float, p: IdmParams) -> float:
    """稳态间距：dv = 0 时使加速度为 0 的 s"""
    ratio = 1.0 - (v / p.desired_speed) ** p.exponent
    if ratio <= 0.0:
        raise InvalidArgumentError(
            "equilibrium needs speed below the desired speed", field="v", value=v
        )
    return float(desired_gap(v, 0.0, p) / np.sqrt(ratio))
