"""参数重要性估计与跨任务累积"""

from typing import Any, Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from ..models.network import ParamVector
from ..models.regularization import (Accumulation, ImportanceKind,
                                     ImportanceVector, RegConfig)
from ..models.training import FeatureStats
from ..nn.lstm import forward, per_sample_backward
from ..sim.rollout import recorded_windows
from ..utils.exceptions import InvalidArgumentError
from ..utils.logger import get_logger
from ..utils.validators import validate_positive_integer
from ..utils.workers import chunked, ordered_map

logger = get_logger(__name__)

# (params, 一批事件) -> 逐事件损失梯度 (n, P)
PerEventGradFn = Callable[[ParamVector, Sequence[Any]], np.ndarray]
# (params, 一批样本) -> (输出 (n,), 逐样本输出梯度 (n, P))
OutputGradFn = Callable[[ParamVector, Sequence[Any]], Tuple[np.ndarray, np.ndarray]]


def subsample(items: Sequence[Any], cap: Optional[int], seed: Any) -> Sequence[Any]:
    """超过上限时均匀无放回抽样，保持原有先后顺序"""
    if cap is None or len(items) <= cap:
        return items
    rng = np.random.default_rng(seed)
    keep = np.sort(rng.choice(len(items), size=cap, replace=False))
    if isinstance(items, np.ndarray):
        return items[keep]
    return [items[i] for i in keep]


def estimate_fisher(
    params: ParamVector,
    events: Sequence[Any],
    loss_fn: PerEventGradFn,
    cap: Optional[int] = None,
    seed: Any = 0,
    batch_size: int = 32,
    jobs: Optional[int] = 1,
) -> ImportanceVector:
    """对角 Fisher 信息：逐事件训练损失梯度平方的均值

    Args:
        params: 任务结束时的参数
        events: 该任务训练集事件
        loss_fn: 逐事件损失梯度函数
        cap: 最多使用的事件数
        seed: 抽样种子
        batch_size: 每次交给 loss_fn 的事件数
        jobs: 并行线程数

    Returns:
        kind=fisher，anchor=params 的重要性向量
    """
    if len(events) == 0:
        raise InvalidArgumentError("cannot estimate Fisher information on an empty event set", field="events")
    validate_positive_integer(batch_size, "batch_size")
    selected = subsample(events, cap, seed)

    def squared(batch: Sequence[Any]) -> np.ndarray:
        grads = np.asarray(loss_fn(params, batch), dtype=np.float64)
        return np.sum(grads * grads, axis=0)

    total = np.zeros(len(params))
    for part in ordered_map(squared, chunked(selected, batch_size), jobs):
        total += part
    weights = total / len(selected)
    logger.debug(f"Fisher estimated on {len(selected)} events")
    return ImportanceVector(weights=weights, anchor=params, kind=ImportanceKind.FISHER)


def lstm_output_grads(stats: FeatureStats) -> OutputGradFn:
    """默认的 MAS 输出函数：标准化窗口上的 LSTM 加速度及其逐样本梯度"""

    def output_fn(params: ParamVector, windows: Sequence[Any]) -> Tuple[np.ndarray, np.ndarray]:
        batch = (np.asarray(windows, dtype=np.float64) - stats.mean) / stats.std
        outputs, cache = forward(batch, params)
        grads, _ = per_sample_backward(cache, 1.0)
        return np.asarray(outputs), grads

    return output_fn


def estimate_mas_importance(
    params: ParamVector,
    events: Sequence[Any],
    stats: Optional[FeatureStats] = None,
    cap: Optional[int] = None,
    seed: Any = 0,
    output_fn: Optional[OutputGradFn] = None,
    batch_size: int = 256,
    jobs: Optional[int] = 1,
) -> ImportanceVector:
    """MAS 重要性：Ω_i = mean_k |∂ f_θ(x_k)² / ∂θ_i|

    未给出 output_fn 时，样本为事件记录数据上的全部开环窗口；
    给出 output_fn 时，events 中的每个元素直接作为一个样本。
    """
    if len(events) == 0:
        raise InvalidArgumentError("cannot estimate MAS importance on an empty event set", field="events")
    validate_positive_integer(batch_size, "batch_size")
    if output_fn is None:
        output_fn = lstm_output_grads(stats or FeatureStats.identity())
        samples: Sequence[Any] = recorded_windows(events, params.horizon)
    else:
        samples = events
    selected = subsample(samples, cap, seed)

    def absolute(batch: Sequence[Any]) -> np.ndarray:
        outputs, grads = output_fn(params, batch)
        # d(f²)/dθ = 2f·df/dθ
        return np.sum(np.abs(2.0 * np.asarray(outputs)[:, None] * grads), axis=0)

    total = np.zeros(len(params))
    for part in ordered_map(absolute, chunked(selected, batch_size), jobs):
        total += part
    weights = total / len(selected)
    logger.debug(f"MAS importance estimated on {len(selected)} windows")
    return ImportanceVector(weights=weights, anchor=params, kind=ImportanceKind.MAS)


def accumulate(
    prev: Optional[ImportanceVector], new: ImportanceVector, cfg: RegConfig
) -> ImportanceVector:
    """把新任务的重要性并入已有累积

    sum 模式逐元素相加；running-mean 模式按已见任务数加权平均。锚点总是取最新任务的参数。
    """
    if prev is None:
        return new
    if prev.kind != new.kind:
        raise InvalidArgumentError(
            f"cannot accumulate {new.kind.value} importance into {prev.kind.value}", field="kind"
        )
    if len(prev) != len(new):
        raise InvalidArgumentError(
            f"importance lengths differ: {len(prev)} vs {len(new)}", field="weights"
        )
    if cfg.accumulation == Accumulation.SUM:
        weights = prev.weights + new.weights
    else:
        weights = (prev.weights * prev.tasks_seen + new.weights) / (prev.tasks_seen + 1)
    return ImportanceVector(
        weights=weights, anchor=new.anchor, kind=new.kind, tasks_seen=prev.tasks_seen + 1
    )


def importance_stats(imp: ImportanceVector) -> Dict[str, Any]:
    """日志用的摘要统计"""
    return {
        "kind": imp.kind.value,
        "tasks_seen": imp.tasks_seen,
        "mean": float(np.mean(imp.weights)),
        "max": float(np.max(imp.weights)),
    }
