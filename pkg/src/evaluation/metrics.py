"""评估指标：闭环 MSE 与碰撞率"""

from typing import List, Optional, Sequence

import numpy as np

from ..models.evaluation import EventMetrics, MetricCell
from ..models.event import Event, TaskSet
from ..models.network import DEFAULT_HORIZON
from ..models.training import FeatureStats
from ..sim.rollout import ClosedLoopEngine, ControllerLike, as_controller
from ..utils.exceptions import InvalidArgumentError
from ..utils.workers import chunked, ordered_map

# 每次批量推演的事件数（与线程数无关，保证结果可复现）
EVAL_GROUP = 32


def squared_error_sum(pred: Sequence[float], true: Sequence[float]) -> float:
    diff = np.asarray(pred, dtype=np.float64) - np.asarray(true, dtype=np.float64)
    return float(np.sum(diff * diff))


def mean_squared_error(pred: Sequence[float], true: Sequence[float]) -> float:
    """MSE = (1/N)·Σ(pred − true)²"""
    n = np.asarray(pred).shape[0]
    if n == 0:
        raise InvalidArgumentError("MSE of an empty series", field="pred")
    return squared_error_sum(pred, true) / n


def collision_rate(n_collided: int, n_events: int) -> float:
    """碰撞率 = 碰撞事件数 / 事件总数 × 100%"""
    if n_events <= 0:
        raise InvalidArgumentError("collision rate needs at least one event", field="n_events")
    return 100.0 * n_collided / n_events


def _horizon_of(controller) -> int:
    return getattr(controller, "horizon", DEFAULT_HORIZON)


def evaluate_events(
    params: ControllerLike,
    events: Sequence[Event],
    dt: float,
    stats: Optional[FeatureStats] = None,
    jobs: Optional[int] = 1,
) -> List[EventMetrics]:
    """逐事件闭环评估（碰撞后继续推演）"""
    controller = as_controller(params, stats)
    horizon = _horizon_of(controller)

    def run(group: Sequence[Event]) -> List[EventMetrics]:
        result = ClosedLoopEngine(group, dt, horizon, stop_on_collision=False).run(controller)
        n_scored = result.n_scored
        return [
            EventMetrics(
                event_id=event.event_id,
                se_spacing_sum=float(result.se_spacing[b]),
                se_speed_sum=float(result.se_speed[b]),
                n_steps=int(n_scored[b]),
                collided=bool(result.collided[b]),
            )
            for b, event in enumerate(group)
        ]

    metrics: List[EventMetrics] = []
    for part in ordered_map(run, chunked(list(events), EVAL_GROUP), jobs):
        metrics.extend(part)
    return metrics


def event_metrics(
    params: ControllerLike, event: Event, dt: float, stats: Optional[FeatureStats] = None
) -> EventMetrics:
    """单个事件的平方误差和、计分步数与碰撞标志"""
    return evaluate_events(params, [event], dt, stats)[0]


def pool_metrics(metrics: Sequence[EventMetrics]) -> MetricCell:
    """按步汇总 MSE，并给出按事件平均的 MSE 与碰撞率"""
    if not metrics:
        raise InvalidArgumentError("cannot pool metrics of zero events", field="metrics")
    steps = sum(m.n_steps for m in metrics)
    se_spacing = sum(m.se_spacing_sum for m in metrics)
    se_speed = sum(m.se_speed_sum for m in metrics)
    collided = sum(1 for m in metrics if m.collided)
    return MetricCell(
        mse_spacing=se_spacing / steps,
        mse_speed=se_speed / steps,
        collision_rate=collision_rate(collided, len(metrics)),
        n_events=len(metrics),
        event_mse_spacing=float(np.mean([m.se_spacing_sum / m.n_steps for m in metrics])),
        event_mse_speed=float(np.mean([m.se_speed_sum / m.n_steps for m in metrics])),
    )


def taskset_metrics(
    params: ControllerLike,
    task: TaskSet,
    dt: float,
    stats: Optional[FeatureStats] = None,
    jobs: Optional[int] = 1,
) -> MetricCell:
    """任务集测试集上的指标"""
    if not task.test:
        raise InvalidArgumentError(f"task {task.task_id} has an empty test split", field="task")
    return pool_metrics(evaluate_events(params, task.test, dt, stats, jobs))
