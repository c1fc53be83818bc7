"""闭环推演

仿真车 (SV) 取代记录中的跟驰车 (FV)：前 H 步用记录数据预热窗口，之后每步由控制器给出加速度，
按欧拉格式更新 SV 速度与间距，前车 (LV) 始终取记录值。

ClosedLoopEngine 把一组事件补齐到相同长度后批量推演；需要梯度时按 rollout_chunk 分块做截断 BPTT：
块内前向并保存缓存，随即反向并释放缓存，跨块只传递状态值、不传递梯度。
"""

from dataclasses import dataclass
from typing import List, Optional, Protocol, Sequence, Union

import numpy as np

from ..models.event import Event
from ..models.network import DEFAULT_HORIZON, ParamVector
from ..models.simulation import SimTrajectory
from ..models.training import Checkpoint, FeatureStats
from ..nn.lstm import forward, per_sample_backward
from ..utils.exceptions import InvalidArgumentError, NumericError
from ..utils.logger import get_logger
from ..utils.validators import validate_positive_float, validate_positive_integer
from .kinematics import clamp_fired, euler_update

DEFAULT_CHUNK = 50


class Controller(Protocol):
    """控制器：(B, H, 4) 原始单位窗口 + 当前步下标 → (B,) 加速度"""

    def __call__(self, windows: np.ndarray, step: int) -> np.ndarray: ...


class LstmController:
    """LSTM 控制器（输入先按冻结的统计量标准化）"""

    def __init__(self, params: ParamVector, stats: Optional[FeatureStats] = None):
        self.params = params
        self.stats = stats or FeatureStats.identity()

    @property
    def horizon(self) -> int:
        return self.params.horizon

    def normalize(self, windows: np.ndarray) -> np.ndarray:
        return (windows - self.stats.mean) / self.stats.std

    def forward_cached(self, windows: np.ndarray):
        return forward(self.normalize(windows), self.params)

    def __call__(self, windows: np.ndarray, step: int) -> np.ndarray:
        accel, _ = self.forward_cached(windows)
        return np.asarray(accel, dtype=np.float64)


class ReplayController:
    """回放记录 FV 的加速度 (fv[t+1] − fv[t]) / dt

    引擎推演前调用 bind 与当前批次的事件对齐。
    """

    def __init__(self, dt: float, events: Optional[Sequence[Event]] = None):
        self.dt = dt
        self.accel = np.zeros((0, 0))
        if events:
            n_max = max(e.fv_speed.shape[0] for e in events)
            self.accel = np.zeros((len(events), n_max))
            for b, event in enumerate(events):
                fv = event.fv_speed
                self.accel[b, : fv.shape[0] - 1] = np.diff(fv) / dt

    def bind(self, events: Sequence[Event]) -> "ReplayController":
        return ReplayController(self.dt, events)

    def __call__(self, windows: np.ndarray, step: int) -> np.ndarray:
        return self.accel[:, step]


class ConstantController:
    """恒定加速度控制器"""

    def __init__(self, value: float = 0.0):
        self.value = float(value)

    def __call__(self, windows: np.ndarray, step: int) -> np.ndarray:
        return np.full(windows.shape[0], self.value)


ControllerLike = Union[ParamVector, Checkpoint, Controller]


def as_controller(source: ControllerLike, stats: Optional[FeatureStats] = None) -> Controller:
    """把参数向量、检查点或控制器统一为控制器"""
    if isinstance(source, ParamVector):
        return LstmController(source, stats)
    if isinstance(source, Checkpoint):
        return LstmController(source.params, stats or source.normalization)
    if callable(source):
        return source
    raise InvalidArgumentError(f"cannot use {type(source).__name__} as a controller", field="controller")


@dataclass
class RolloutBatch:
    """一批事件的推演结果

    状态数组形状为 (B, N)，下标 j 对应事件第 j 步；accel[:, j] 为产生状态 j 的加速度。
    grads 为逐事件平方误差和（间距 + 速度）对参数的梯度，未除以计分步数。
    """

    event_ids: List[str]
    dt: float
    horizon: int
    sv_speed: np.ndarray
    spacing: np.ndarray
    accel: np.ndarray
    scored: np.ndarray
    collision_index: np.ndarray
    clamp_count: np.ndarray
    se_spacing: np.ndarray
    se_speed: np.ndarray
    grads: Optional[np.ndarray] = None

    @property
    def n_scored(self) -> np.ndarray:
        return self.scored.sum(axis=1)

    @property
    def collided(self) -> np.ndarray:
        return self.collision_index >= 0

    def collision_step(self, b: int) -> Optional[int]:
        """第 b 个事件的碰撞步（闭环更新次数，从 1 计）"""
        index = int(self.collision_index[b])
        return index - self.horizon + 1 if index >= 0 else None

    def mean_grads(self) -> np.ndarray:
        """逐事件均方误差的梯度 (B, P)"""
        if self.grads is None:
            raise InvalidArgumentError("rollout was run without gradients", field="with_grad")
        return self.grads / self.n_scored[:, None]

    def trajectory(self, b: int) -> SimTrajectory:
        keep = self.scored[b]
        return SimTrajectory(
            event_id=self.event_ids[b],
            dt=self.dt,
            start_index=self.horizon,
            sv_speed=self.sv_speed[b, keep],
            spacing=self.spacing[b, keep],
            accel=self.accel[b, keep],
            collision_step=self.collision_step(b),
            backward_clamp_count=int(self.clamp_count[b]),
        )


def check_rollout_event(event: Event, dt: float, horizon: int) -> None:
    """推演前置条件：步数 ≥ H+2，步长一致"""
    if len(event) < horizon + 2:
        raise InvalidArgumentError(
            f"event {event.event_id!r} has {len(event)} steps, rollout needs at least {horizon + 2}",
            field="event",
            value=event.event_id,
        )
    if abs(event.dt - dt) > 1e-9 * dt:
        raise InvalidArgumentError(
            f"event {event.event_id!r} has dt {event.dt}, rollout uses dt {dt}",
            field="dt",
            value=event.dt,
        )


def _pad(series: List[np.ndarray], width: int) -> np.ndarray:
    return np.stack([np.pad(s, (0, width - s.shape[0]), mode="edge") for s in series])


class ClosedLoopEngine:
    """批量闭环推演引擎"""

    def __init__(
        self,
        events: Sequence[Event],
        dt: float,
        horizon: int = DEFAULT_HORIZON,
        stop_on_collision: bool = False,
        chunk: int = DEFAULT_CHUNK,
    ):
        if len(events) == 0:
            raise InvalidArgumentError("closed-loop engine needs at least one event", field="events")
        self.dt = validate_positive_float(dt, "dt")
        self.horizon = validate_positive_integer(horizon, "horizon")
        self.chunk = validate_positive_integer(chunk, "rollout_chunk")
        self.stop_on_collision = stop_on_collision
        for event in events:
            check_rollout_event(event, self.dt, self.horizon)

        self.events = list(events)
        self.lengths = np.array([len(e) for e in self.events])
        width = int(self.lengths.max())
        self.lv = _pad([e.lv_speed for e in self.events], width)
        self.fv = _pad([e.fv_speed for e in self.events], width)
        self.sp = _pad([e.spacing for e in self.events], width)
        self.logger = get_logger(__name__)

    @property
    def batch_size(self) -> int:
        return len(self.events)

    def _windows(self, sv: np.ndarray, sp: np.ndarray, t: int) -> np.ndarray:
        lo = t - self.horizon + 1
        s = sv[:, lo : t + 1]
        lv = self.lv[:, lo : t + 1]
        return np.stack([s, lv, lv - s, sp[:, lo : t + 1]], axis=2)

    def run(self, controller: ControllerLike, with_grad: bool = False) -> RolloutBatch:
        """推演整批事件

        Args:
            controller: 控制器；需要梯度时必须是 LSTM 控制器（或参数向量/检查点）
            with_grad: 是否计算逐事件平方误差和的参数梯度

        Returns:
            推演结果
        """
        ctrl = as_controller(controller)
        if isinstance(ctrl, ReplayController):
            ctrl = ctrl.bind(self.events)
        if with_grad and not isinstance(ctrl, LstmController):
            raise InvalidArgumentError("gradients need an LSTM controller", field="controller")
        horizon = self.horizon
        if isinstance(ctrl, LstmController) and ctrl.horizon != horizon:
            raise InvalidArgumentError(
                f"controller horizon {ctrl.horizon} != engine horizon {horizon}", field="horizon"
            )

        n_batch, width = self.lv.shape
        sv = np.zeros((n_batch, width))
        sp = np.zeros((n_batch, width))
        sv[:, :horizon] = self.fv[:, :horizon]
        sp[:, :horizon] = self.sp[:, :horizon]
        accel = np.zeros((n_batch, width))
        scored = np.zeros((n_batch, width), dtype=bool)
        collision = np.full(n_batch, -1)
        clamps = np.zeros(n_batch, dtype=np.int64)
        stopped = np.zeros(n_batch, dtype=bool)
        grads = np.zeros((n_batch, len(ctrl.params))) if with_grad else None

        finished = False
        for c0 in range(horizon - 1, width - 1, self.chunk):
            c1 = min(c0 + self.chunk, width - 1)
            records = []
            for t in range(c0, c1):
                active = (t <= self.lengths - 2) & ~stopped
                if not active.any():
                    finished = True
                    break
                windows = self._windows(sv, sp, t)
                cache = None
                if with_grad:
                    a, cache = ctrl.forward_cached(windows)
                else:
                    a = ctrl(windows, t)
                a = np.asarray(a, dtype=np.float64).reshape(n_batch)
                if not np.all(np.isfinite(a[active])):
                    raise NumericError(f"controller produced a non-finite acceleration at step {t}", "accel")

                new_sv, new_sp, raw = euler_update(sv[:, t], sp[:, t], a, self.lv[:, t], self.dt)
                sv[:, t + 1] = np.where(active, new_sv, sv[:, t])
                sp[:, t + 1] = np.where(active, new_sp, sp[:, t])
                accel[:, t + 1] = np.where(active, a, 0.0)
                scored[:, t + 1] = active
                clamps += active & clamp_fired(raw)

                hit = active & (sp[:, t + 1] <= 0.0) & (collision < 0)
                collision[hit] = t + 1
                if self.stop_on_collision:
                    stopped |= hit
                if with_grad:
                    records.append((t, cache, active, active & (raw > 0.0)))

            if records:
                self._backprop_chunk(records, c0, sv, sp, scored, grads, ctrl)
            if finished:
                break

        sq_spacing = np.where(scored, (sp - self.sp) ** 2, 0.0)
        sq_speed = np.where(scored, (sv - self.fv) ** 2, 0.0)
        return RolloutBatch(
            event_ids=[e.event_id for e in self.events],
            dt=self.dt,
            horizon=horizon,
            sv_speed=sv,
            spacing=sp,
            accel=accel,
            scored=scored,
            collision_index=collision,
            clamp_count=clamps,
            se_spacing=sq_spacing.sum(axis=1),
            se_speed=sq_speed.sum(axis=1),
            grads=grads,
        )

    def _backprop_chunk(
        self,
        records: List,
        c0: int,
        sv: np.ndarray,
        sp: np.ndarray,
        scored: np.ndarray,
        grads: np.ndarray,
        ctrl: LstmController,
    ) -> None:
        """块内反向：g_sv / g_sp 为损失对状态 c0..t_last+1 的伴随量，早于本块的状态视为常数"""
        horizon, dt = self.horizon, self.dt
        t_last = records[-1][0]
        states = slice(c0 + 1, t_last + 2)
        mask = scored[:, states]

        g_sv = np.zeros((sv.shape[0], t_last - c0 + 2))
        g_sp = np.zeros_like(g_sv)
        g_sv[:, 1:] = np.where(mask, 2.0 * (sv[:, states] - self.fv[:, states]), 0.0)
        g_sp[:, 1:] = np.where(mask, 2.0 * (sp[:, states] - self.sp[:, states]), 0.0)
        inv_std = 1.0 / ctrl.stats.std

        for t, cache, active, passable in reversed(records):
            k = t - c0 + 1
            next_sv = g_sv[:, k]
            next_sp = g_sp[:, k]
            gate = np.where(passable, 1.0, 0.0)
            g_accel = np.where(active, next_sv * gate * dt, 0.0)
            if t > c0:
                g_sv[:, k - 1] += np.where(active, next_sv * gate - next_sp * dt, 0.0)
                g_sp[:, k - 1] += np.where(active, next_sp, 0.0)

            if np.any(g_accel):
                per_event, d_inputs = per_sample_backward(cache, g_accel, want_inputs=True)
                grads += per_event
                # 窗口第 r 行对应状态 t−H+1+r；只有本块内产生的状态接收梯度
                first = max(t - horizon + 1, c0 + 1)
                if first <= t:
                    rows = d_inputs[:, first - (t - horizon + 1) :, :] * inv_std
                    lo, hi = first - c0, t - c0 + 1
                    g_sv[:, lo:hi] += rows[:, :, 0] - rows[:, :, 2]
                    g_sp[:, lo:hi] += rows[:, :, 3]
            cache.release()
        self.logger.trace(f"Backpropagated chunk starting at step {c0} ({len(records)} steps)")


def rollout(
    params: ControllerLike,
    event: Event,
    dt: float,
    stop_on_collision: bool = False,
    horizon: Optional[int] = None,
    stats: Optional[FeatureStats] = None,
) -> SimTrajectory:
    """单个事件的闭环推演

    Args:
        params: 参数向量、检查点或控制器
        event: 事件
        dt: 步长 (s)
        stop_on_collision: 碰撞后是否截断
        horizon: 窗口长度，缺省取参数向量的 horizon
        stats: 输入标准化统计（仅对参数向量有效）

    Returns:
        推演轨迹
    """
    controller = as_controller(params, stats)
    if horizon is None:
        horizon = getattr(controller, "horizon", DEFAULT_HORIZON)
    engine = ClosedLoopEngine([event], dt, horizon, stop_on_collision)
    return engine.run(controller).trajectory(0)


def recorded_windows(events: Sequence[Event], horizon: int) -> np.ndarray:
    """记录数据上的开环窗口：每个事件的控制步 t = H−1..n−2 各一个，形状 (M, H, 4)"""
    blocks = []
    for event in events:
        lv, fv = event.lv_speed, event.fv_speed
        features = np.stack([fv, lv, lv - fv, event.spacing], axis=1)
        views = np.lib.stride_tricks.sliding_window_view(features, horizon, axis=0)
        blocks.append(views.transpose(0, 2, 1)[: len(event) - horizon])
    if not blocks:
        return np.zeros((0, horizon, 4))
    return np.ascontiguousarray(np.concatenate(blocks, axis=0))


