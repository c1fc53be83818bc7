"""测试配置文件"""

import math
from typing import Callable, List

import numpy as np
import pytest

from src.models.event import Event, SpeedRange, TaskSet
from src.models.network import ParamVector, param_count
from src.models.training import TrainConfig
from src.nn.lstm import init_params

DT = 0.1


def euler_spacing(lv: np.ndarray, fv: np.ndarray, first: float, dt: float) -> np.ndarray:
    """按闭环仿真同一欧拉格式积分出的间距序列"""
    spacing = np.empty(lv.shape[0])
    spacing[0] = first
    for k in range(lv.shape[0] - 1):
        spacing[k + 1] = spacing[k] + (lv[k] - fv[k]) * dt
    return spacing


def wave_event(
    event_id: str, base_speed: float, n_steps: int = 40, dt: float = DT, phase: float = 0.0
) -> Event:
    """前车速度做小幅正弦波动、跟驰车略有滞后的事件（间距与欧拉格式一致）"""
    t = np.arange(n_steps) * dt
    lv = base_speed + 0.5 * np.sin(0.8 * t + phase)
    fv = base_speed + 0.4 * np.sin(0.8 * t + phase - 0.3)
    spacing = euler_spacing(lv, fv, 1.5 * base_speed + 5.0, dt)
    return Event(event_id=event_id, dt=dt, lv_speed=lv, fv_speed=fv, spacing=spacing)


@pytest.fixture
def event_factory() -> Callable[..., Event]:
    """由序列构造事件"""

    def make(
        event_id: str = "e",
        lv_speed=None,
        fv_speed=None,
        spacing=None,
        n_steps: int = 30,
        dt: float = DT,
    ) -> Event:
        lv = np.full(n_steps, 10.0) if lv_speed is None else np.asarray(lv_speed, dtype=float)
        fv = np.full(lv.shape[0], 10.0) if fv_speed is None else np.asarray(fv_speed, dtype=float)
        sp = np.full(lv.shape[0], 20.0) if spacing is None else np.asarray(spacing, dtype=float)
        return Event(event_id=event_id, dt=dt, lv_speed=lv, fv_speed=fv, spacing=sp)

    return make


@pytest.fixture
def constant_event(event_factory) -> Event:
    """前车与跟驰车同速 10 m/s、间距恒为 20 m"""
    return event_factory("constant", n_steps=30)


@pytest.fixture
def closing_event(event_factory) -> Event:
    """前车静止，跟驰车 10 m/s，预热结束时间距 5 m"""
    horizon, n_steps = 10, 20
    spacing = np.full(n_steps, 5.0)
    spacing[:horizon] = 5.0 + (horizon - 1 - np.arange(horizon)) * 1.0
    return event_factory(
        "closing",
        lv_speed=np.zeros(n_steps),
        fv_speed=np.full(n_steps, 10.0),
        spacing=spacing,
    )


@pytest.fixture
def synthetic_events() -> List[Event]:
    """不同速度水平的短事件"""
    return [
        wave_event(f"wave-{k:02d}", base_speed=4.0 + 2.0 * k, phase=0.3 * k) for k in range(6)
    ]


@pytest.fixture
def tiny_params() -> ParamVector:
    """hidden_size=4 的小网络"""
    return init_params(4, seed=0)


@pytest.fixture
def toy_params() -> Callable[[float], ParamVector]:
    """hidden_size=1、除输出偏置 θ 外全为 0 的参数向量（θ 为最后一项）"""

    def make(theta: float = 0.0, horizon: int = 10) -> ParamVector:
        values = np.zeros(param_count(1))
        values[-1] = theta
        return ParamVector(values=values, hidden_size=1, horizon=horizon)

    return make


@pytest.fixture
def small_config() -> TrainConfig:
    """训练很快的配置"""
    return TrainConfig(
        epochs=1,
        hidden_size=4,
        batch_size=4,
        rollout_chunk=10,
        importance_cap=64,
        learning_rate=0.01,
        seed=3,
    )


def make_tasks(n_train: int = 4, n_val: int = 1, n_test: int = 2, n_steps: int = 30) -> List[TaskSet]:
    """三个速度水平的任务集（任务 1 最快）"""
    ranges = [
        SpeedRange(low=12.0, high=math.inf),
        SpeedRange(low=8.0, high=12.0),
        SpeedRange(low=0.0, high=8.0, low_inclusive=True),
    ]
    bases = [15.0, 10.0, 5.0]
    tasks = []
    for task_id, (speed_range, base) in enumerate(zip(ranges, bases), start=1):
        events = [
            wave_event(f"t{task_id}-{k:02d}", base + 0.2 * k, n_steps=n_steps, phase=0.5 * k)
            for k in range(n_train + n_val + n_test)
        ]
        tasks.append(
            TaskSet(
                task_id=task_id,
                speed_range=speed_range,
                train=events[:n_train],
                val=events[n_train : n_train + n_val],
                test=events[n_train + n_val :],
            )
        )
    return tasks


@pytest.fixture
def task_sets() -> List[TaskSet]:
    return make_tasks()


@pytest.fixture
def task_factory() -> Callable[..., List[TaskSet]]:
    return make_tasks


@pytest.fixture
def wave_factory() -> Callable[..., Event]:
    return wave_event
