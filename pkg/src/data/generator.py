"""IDM 合成跟驰事件生成器

前车速度曲线取自三类（匀速巡航 / 正弦波动 / 走停斜坡），基准速度按工况缩放；
跟驰车由逐事件抖动参数的 IDM 驱动，并与闭环仿真使用完全相同的欧拉格式积分，
因此回放记录加速度可以精确复现记录轨迹。
"""

from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field

from ..models.event import Event, GeneratorSummary, IdmParams
from ..sim.kinematics import euler_update
from ..utils.exceptions import InvalidArgumentError, InvalidStateError
from ..utils.logger import get_logger
from ..utils.validators import (validate_choice, validate_positive_float,
                                validate_positive_integer)
from ..utils.workers import ordered_map
from .idm import equilibrium_gap, idm_accel
from .tasks import mean_fv_speed

logger = get_logger(__name__)

REGIMES = ("low", "mid", "high")
LEADER_PROFILES = ("cruise", "sinusoid", "stop_and_go")
EVENT_SECONDS = (30.0, 60.0)
MAX_ATTEMPTS = 25
# IDM 减速度下限 (m/s²)
HARD_BRAKE = -6.0


class RegimeProfile(BaseModel):
    """单个速度工况的生成常数（每项为均匀分布区间）"""

    base_speed: Tuple[float, float] = Field(description="前车基准速度 (m/s)")
    time_headway: Tuple[float, float] = Field(description="IDM 车头时距 T (s)")
    min_gap: Tuple[float, float] = Field(description="IDM 最小间距 s0 (m)")
    max_accel: Tuple[float, float] = Field(description="IDM 最大加速度 a (m/s²)")
    comfortable_decel: Tuple[float, float] = Field(description="IDM 舒适减速度 b (m/s²)")
    stop_floor: float = Field(ge=0.0, le=1.0, description="走停曲线谷底速度 / 基准速度")


# 工况之间的驾驶风格差异（车头时距、最小间距）刻意拉开
REGIME_PROFILES: Dict[str, RegimeProfile] = {
    "low": RegimeProfile(
        base_speed=(3.0, 9.0),
        time_headway=(1.9, 2.5),
        min_gap=(4.0, 6.0),
        max_accel=(0.8, 1.2),
        comfortable_decel=(1.5, 2.0),
        stop_floor=0.15,
    ),
    "mid": RegimeProfile(
        base_speed=(10.0, 12.0),
        time_headway=(1.4, 1.8),
        min_gap=(2.0, 3.0),
        max_accel=(1.0, 1.5),
        comfortable_decel=(1.5, 2.0),
        stop_floor=0.7,
    ),
    "high": RegimeProfile(
        base_speed=(13.0, 25.0),
        time_headway=(0.9, 1.3),
        min_gap=(1.5, 2.5),
        max_accel=(1.2, 1.8),
        comfortable_decel=(1.8, 2.5),
        stop_floor=0.6,
    ),
}

# 任何生成事件的间距都大于该值（最小 s0 的一半）
MIN_SPACING_FLOOR = min(p.min_gap[0] for p in REGIME_PROFILES.values()) / 2.0


def _uniform(rng: np.random.Generator, bounds: Tuple[float, float]) -> float:
    return float(rng.uniform(bounds[0], bounds[1]))


def leader_profile(
    kind: str, base: float, n_steps: int, dt: float, stop_floor: float, rng: np.random.Generator
) -> np.ndarray:
    """生成前车速度序列"""
    t = np.arange(n_steps) * dt
    if kind == "cruise":
        speed = np.empty(n_steps)
        speed[0] = base
        noise = rng.normal(0.0, 0.25, size=n_steps)
        for k in range(n_steps - 1):
            speed[k + 1] = speed[k] + (-0.1 * (speed[k] - base) + noise[k]) * dt
    elif kind == "sinusoid":
        amplitude = base * rng.uniform(0.05, 0.15)
        period = rng.uniform(20.0, 40.0)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        speed = base + amplitude * np.sin(2.0 * np.pi * t / period + phase)
    else:
        floor = base * stop_floor
        decel = rng.uniform(0.8, 1.6)
        accel = rng.uniform(0.6, 1.1)
        t_start = rng.uniform(3.0, 10.0)
        hold = rng.uniform(2.0, 6.0)
        t_low = t_start + (base - floor) / decel
        t_rise = t_low + hold
        t_end = t_rise + (base - floor) / accel
        speed = np.where(
            t < t_start,
            base,
            np.where(
                t < t_low,
                base - decel * (t - t_start),
                np.where(t < t_rise, floor, np.where(t < t_end, floor + accel * (t - t_rise), base)),
            ),
        )
    return np.maximum(speed, 0.0)


def _draw_idm(profile: RegimeProfile, lead_max: float, rng: np.random.Generator) -> IdmParams:
    return IdmParams(
        desired_speed=lead_max * rng.uniform(1.2, 1.4) + 1.0,
        time_headway=_uniform(rng, profile.time_headway),
        min_gap=_uniform(rng, profile.min_gap),
        max_accel=_uniform(rng, profile.max_accel),
        comfortable_decel=_uniform(rng, profile.comfortable_decel),
    )


def follow(lv_speed: np.ndarray, idm: IdmParams, gap_factor: float, dt: float) -> Tuple[np.ndarray, np.ndarray]:
    """IDM 跟驰车积分（与闭环仿真同一欧拉格式）

    Returns:
        (跟驰车速度, 间距)
    """
    n_steps = lv_speed.shape[0]
    fv = np.empty(n_steps)
    spacing = np.empty(n_steps)
    fv[0] = lv_speed[0]
    spacing[0] = equilibrium_gap(fv[0], idm) * gap_factor
    for k in range(n_steps - 1):
        if spacing[k] <= 0.0:
            spacing[k + 1 :] = spacing[k]
            fv[k + 1 :] = fv[k]
            break
        accel = idm_accel(fv[k], fv[k] - lv_speed[k], spacing[k], idm)
        accel = min(max(accel, HARD_BRAKE), idm.max_accel)
        fv[k + 1], spacing[k + 1], _ = euler_update(fv[k], spacing[k], accel, lv_speed[k], dt)
    return fv, spacing


def generate_event(regime: str, index: int, dt: float, seed: int) -> Event:
    """按 (seed, regime, index) 确定性地生成一个事件，间距不足 s0/2 时重抽"""
    profile = REGIME_PROFILES[regime]
    rng = np.random.default_rng([seed, REGIMES.index(regime), index])
    low_steps = int(round(EVENT_SECONDS[0] / dt))
    high_steps = int(round(EVENT_SECONDS[1] / dt))
    for attempt in range(MAX_ATTEMPTS):
        n_steps = int(rng.integers(low_steps, high_steps + 1))
        kind = LEADER_PROFILES[int(rng.integers(len(LEADER_PROFILES)))]
        base = _uniform(rng, profile.base_speed)
        lv = leader_profile(kind, base, n_steps, dt, profile.stop_floor, rng)
        idm = _draw_idm(profile, float(lv.max()), rng)
        fv, spacing = follow(lv, idm, rng.uniform(1.0, 1.2), dt)
        if np.min(spacing) > idm.min_gap / 2.0:
            return Event(
                event_id=f"{regime}-{seed}-{index:05d}",
                dt=dt,
                lv_speed=lv,
                fv_speed=fv,
                spacing=spacing,
            )
        logger.debug(f"Rejected {regime} event {index} attempt {attempt} (min spacing {np.min(spacing):.3f})")
    raise InvalidStateError(f"could not generate a collision-free {regime} event {index}", "generator")


def generate_events(regime: str, count: int, dt: float, seed: int, jobs: Optional[int] = 1) -> List[Event]:
    """生成单个工况的事件

    Args:
        regime: low / mid / high
        count: 事件数
        dt: 采样间隔 (s)
        seed: 随机种子
        jobs: 并行线程数

    Returns:
        按下标排序的事件列表
    """
    validate_choice(regime, "regime", REGIMES)
    validate_positive_integer(count, "count")
    validate_positive_float(dt, "dt")
    return ordered_map(lambda i: generate_event(regime, i, dt, seed), list(range(count)), jobs)


def regime_counts(count: int, regimes: Sequence[str]) -> Dict[str, int]:
    """把总数平均分给各工况，余数依次给前面的工况"""
    validate_positive_integer(count, "count")
    if not regimes:
        raise InvalidArgumentError("at least one regime is required", field="regimes")
    for regime in regimes:
        validate_choice(regime, "regime", REGIMES)
    if len(set(regimes)) != len(regimes):
        raise InvalidArgumentError("regimes must not repeat", field="regimes", value=list(regimes))
    share, extra = divmod(count, len(regimes))
    return {r: share + (1 if i < extra else 0) for i, r in enumerate(regimes)}


def generate_dataset(
    count: int, regimes: Sequence[str], dt: float, seed: int, jobs: Optional[int] = 1
) -> Dict[str, List[Event]]:
    """按工况生成完整数据集"""
    dataset: Dict[str, List[Event]] = {}
    for regime, n in regime_counts(count, regimes).items():
        dataset[regime] = generate_events(regime, n, dt, seed, jobs) if n else []
        logger.info(f"Generated {n} {regime} events")
    return dataset


def summarize(regime: str, events: Sequence[Event]) -> GeneratorSummary:
    """单个工况的平均跟驰速度统计"""
    if not events:
        return GeneratorSummary(regime=regime, count=0)
    means = np.array([mean_fv_speed(e) for e in events])
    return GeneratorSummary(
        regime=regime,
        count=len(events),
        mean_fv_speed_min=float(means.min()),
        mean_fv_speed_mean=float(means.mean()),
        mean_fv_speed_max=float(means.max()),
    )


def generator_manifest(dataset: Dict[str, List[Event]], dt: float, seed: int) -> Dict[str, Any]:
    """生成清单：种子、步长、各工况数量与统计以及实际使用的工况常数"""
    return {
        "seed": seed,
        "dt": dt,
        "counts": {regime: len(events) for regime, events in dataset.items()},
        "summary": [summarize(regime, events).model_dump() for regime, events in dataset.items()],
        "regime_profiles": {name: p.model_dump() for name, p in REGIME_PROFILES.items()},
        "min_spacing_floor": MIN_SPACING_FLOOR,
    }
