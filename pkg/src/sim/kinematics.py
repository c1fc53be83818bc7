"""纵向运动学：前向欧拉更新与碰撞判定"""

from typing import Tuple, Union

import numpy as np

from ..models.simulation import SimState, SimTrajectory
from ..utils.exceptions import InvalidInputError
from ..utils.validators import validate_positive_float

# 舍入误差内的负速度不计为倒车
CLAMP_TOLERANCE = 1e-9

ArrayLike = Union[float, np.ndarray]


def euler_update(
    sv_speed: ArrayLike, spacing: ArrayLike, accel: ArrayLike, lv_speed: ArrayLike, dt: float
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """一步欧拉更新（可向量化）

    间距使用步初速度：spacing' = spacing + (lv − sv)·dt；速度 sv' = max(0, sv + a·dt)。

    Returns:
        (sv', spacing', 钳位前速度)
    """
    raw = sv_speed + accel * dt
    return np.maximum(raw, 0.0), spacing + (lv_speed - sv_speed) * dt, raw


def clamp_fired(raw_speed: ArrayLike) -> np.ndarray:
    """钳位前速度是否为负（超出舍入容差）"""
    return np.asarray(raw_speed) < -CLAMP_TOLERANCE


def step(state: SimState, accel: float, lv_speed: float, dt: float) -> SimState:
    """单步仿真

    Args:
        state: 当前状态
        accel: 控制器加速度 (m/s²)
        lv_speed: 前车当前速度 (m/s)
        dt: 步长 (s)

    Returns:
        下一状态，clamped 表示本步触发了倒车钳位
    """
    validate_positive_float(dt, "dt")
    values = np.array([state.sv_speed, state.spacing, accel, lv_speed], dtype=np.float64)
    if not np.all(np.isfinite(values)):
        raise InvalidInputError("step inputs must be finite", field="step")
    sv, spacing, raw = euler_update(values[0], values[1], values[2], values[3], dt)
    return SimState(
        sv_speed=float(sv),
        spacing=float(spacing),
        t_index=state.t_index + 1,
        clamped=bool(clamp_fired(raw)),
    )


def detect_collision(traj: SimTrajectory) -> bool:
    """轨迹中是否出现过间距 ≤ 0"""
    return traj.collision_step is not None


def first_collision(spacing: np.ndarray) -> Union[int, None]:
    """首个间距 ≤ 0 的下标（从 0 计），没有则为 None"""
    hits = np.flatnonzero(np.asarray(spacing) <= 0.0)
    return int(hits[0]) if hits.size else None
