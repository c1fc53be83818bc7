"""按平均跟驰速度分位数划分任务集"""

import math
from typing import List, Sequence, Tuple

import numpy as np
import pandas as pd

from ..models.event import Event, SpeedRange, TaskSet
from ..utils.exceptions import InvalidArgumentError
from ..utils.logger import get_logger

logger = get_logger(__name__)

LOWER_PERCENTILE = 33.3
UPPER_PERCENTILE = 66.7
MIN_EVENTS = 9
SPLIT_FRACTIONS = (0.70, 0.15, 0.15)
SPLITS = ("train", "val", "test")


def mean_fv_speed(event: Event) -> float:
    """跟驰车平均速度 (m/s)"""
    return float(np.mean(event.fv_speed))


def percentile(values: Sequence[float], q: float) -> float:
    """线性插值分位数（次序统计量之间线性插值）"""
    array = np.asarray(values, dtype=np.float64)
    if array.size == 0:
        raise InvalidArgumentError("percentile of an empty sequence", field="values")
    if not 0.0 <= q <= 100.0:
        raise InvalidArgumentError("q must lie in [0, 100]", field="q", value=q)
    return float(np.percentile(array, q, method="linear"))


def task_ranges(p_low: float, p_high: float) -> Tuple[SpeedRange, SpeedRange, SpeedRange]:
    """任务 1 = (p66.7, ∞]，任务 2 = (p33.3, p66.7]，任务 3 = [0, p33.3]"""
    return (
        SpeedRange(low=p_high, high=math.inf),
        SpeedRange(low=p_low, high=p_high),
        SpeedRange(low=0.0, high=p_low, low_inclusive=True),
    )


def partition(events: List[Event], seed: int, task_id: int) -> Tuple[List[Event], List[Event], List[Event]]:
    """任务内按种子打乱后按 70/15/15 切分"""
    n = len(events)
    order = np.random.default_rng([seed, task_id]).permutation(n)
    shuffled = [events[i] for i in order]
    n_train = int(math.floor(SPLIT_FRACTIONS[0] * n + 0.5))
    n_val = min(int(math.floor(SPLIT_FRACTIONS[1] * n + 0.5)), n - n_train)
    return shuffled[:n_train], shuffled[n_train : n_train + n_val], shuffled[n_train + n_val :]


def split_tasks(events: Sequence[Event], seed: int) -> Tuple[TaskSet, TaskSet, TaskSet]:
    """按跟驰车平均速度三分位把事件划分为三个任务集

    Args:
        events: 全部事件（至少 9 个）
        seed: 打乱种子

    Returns:
        (任务 1, 任务 2, 任务 3)，任务 1 为最快工况
    """
    if len(events) < MIN_EVENTS:
        raise InvalidArgumentError(
            f"need >= {MIN_EVENTS} events to split into tasks, got {len(events)}",
            field="events",
            value=len(events),
        )
    means = np.array([mean_fv_speed(e) for e in events])
    p_low = percentile(means, LOWER_PERCENTILE)
    p_high = percentile(means, UPPER_PERCENTILE)
    ranges = task_ranges(p_low, p_high)

    members: List[List[Event]] = [[], [], []]
    for event, speed in zip(events, means):
        for k, speed_range in enumerate(ranges):
            if speed_range.contains(float(speed)):
                members[k].append(event)
                break

    tasks = []
    for k, (speed_range, group) in enumerate(zip(ranges, members), start=1):
        if not group:
            raise InvalidArgumentError(
                f"task {k} {speed_range.label()} is empty; mean speeds are not spread enough to split",
                field="events",
            )
        train, val, test = partition(group, seed, k)
        tasks.append(TaskSet(task_id=k, speed_range=speed_range, train=train, val=val, test=test))
        logger.info(
            f"Task {k} {speed_range.label()}: {len(group)} events "
            f"(train {len(train)}, val {len(val)}, test {len(test)})"
        )
    return tasks[0], tasks[1], tasks[2]


def speed_distribution(tasks: Sequence[TaskSet]) -> pd.DataFrame:
    """每个事件一行：task, split, event_id, mean_fv_speed"""
    rows = []
    for task in tasks:
        for split in SPLITS:
            for event in getattr(task, split):
                rows.append(
                    {
                        "task": task.task_id,
                        "split": split,
                        "event_id": event.event_id,
                        "mean_fv_speed": mean_fv_speed(event),
                    }
                )
    return pd.DataFrame(rows, columns=["task", "split", "event_id", "mean_fv_speed"])
