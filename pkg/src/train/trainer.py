"""增量训练：单任务训练与三阶段课程"""

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..cl.importance import (accumulate, estimate_fisher,
                             estimate_mas_importance, importance_stats)
from ..cl.penalty import penalty
from ..evaluation.metrics import evaluate_events, pool_metrics
from ..models.event import Event, TaskSet
from ..models.network import GradVector, ParamVector
from ..models.regularization import ImportanceKind, ImportanceVector
from ..models.training import (Checkpoint, FeatureStats, HistoryRow, Method,
                               TrainConfig)
from ..nn.lstm import init_params
from ..utils.exceptions import (ArtifactIOError, InvalidArgumentError,
                                NumericError)
from ..utils.logger import get_logger
from ..utils.workers import chunked, ordered_map
from .loss import BatchLoss, batch_event_loss
from .normalization import fit_feature_stats
from .optimizer import AdamState, adam_step

# 一个训练批次内部再按固定大小分组推演（与线程数无关）
ENGINE_GROUP = 16
JOINT_TASK_LABEL = 0
HISTORY_COLUMNS = list(HistoryRow.model_fields)


@dataclass
class CurriculumResult:
    """课程训练结果"""

    checkpoints: List[Checkpoint]
    history: List[HistoryRow] = field(default_factory=list)
    stats: Optional[FeatureStats] = None
    config: Optional[TrainConfig] = None

    def first_stage(self) -> Tuple[Checkpoint, List[HistoryRow]]:
        """阶段 1 检查点及其训练历史"""
        first = self.checkpoints[0]
        if first.stage != 1:
            raise InvalidArgumentError(
                f"{first.method.value} run has no stage-1 checkpoint", field="reuse"
            )
        rows = [row for row in self.history if row.task == self.history[0].task]
        return first, rows


class Trainer:
    """闭环 LSTM 控制器训练器"""

    def __init__(self, cfg: TrainConfig, jobs: Optional[int] = 1):
        """初始化训练器

        Args:
            cfg: 训练配置
            jobs: 并行线程数
        """
        self.cfg = cfg
        self.jobs = jobs
        self.logger = get_logger(__name__)

    def batch_loss(
        self,
        params: ParamVector,
        events: Sequence[Event],
        stats: FeatureStats,
    ) -> BatchLoss:
        """分组推演后按事件顺序拼接"""
        parts = ordered_map(
            lambda group: batch_event_loss(params, group, self.cfg, stats),
            chunked(list(events), ENGINE_GROUP),
            self.jobs,
        )
        return BatchLoss(
            values=np.concatenate([p.values for p in parts]),
            mse=np.concatenate([p.mse for p in parts]),
            collided=np.concatenate([p.collided for p in parts]),
            clamped=np.concatenate([p.clamped for p in parts]),
            grads=np.concatenate([p.grads for p in parts], axis=0),
        )

    def objective(
        self,
        params: ParamVector,
        events: Sequence[Event],
        stats: FeatureStats,
        importance: Optional[ImportanceVector] = None,
    ) -> Tuple[float, GradVector, BatchLoss]:
        """批损失 = 逐事件损失均值 + 正则项（有重要性且 λ > 0 时）"""
        loss = self.batch_loss(params, events, stats)
        value = loss.mean_value
        grad = loss.mean_grad()
        reg = self.cfg.reg
        if importance is not None and reg.reg_lambda > 0.0:
            reg_value, reg_grad = penalty(params, importance, reg)
            value += reg_value
            grad = grad + reg_grad.values
        return value, GradVector(values=grad), loss

    def validate(
        self, params: ParamVector, events: Sequence[Event], stats: FeatureStats
    ) -> Tuple[float, float]:
        """验证集按步汇总的 (间距 MSE, 速度 MSE)；空验证集为 nan"""
        if not events:
            return math.nan, math.nan
        cell = pool_metrics(evaluate_events(params, events, self.cfg.dt, stats, self.jobs))
        return cell.mse_spacing, cell.mse_speed

    def fit(
        self,
        params: ParamVector,
        train: Sequence[Event],
        val: Sequence[Event],
        stats: FeatureStats,
        task_label: int,
        importance: Optional[ImportanceVector] = None,
    ) -> Tuple[ParamVector, List[HistoryRow]]:
        """在给定训练集上训练固定轮数，返回最后一轮的参数"""
        if not train:
            raise InvalidArgumentError(f"task {task_label} has an empty training split", field="task")
        if not val:
            self.logger.warning(f"Task {task_label} has an empty validation split; validation MSE is nan")

        cfg = self.cfg
        rng = np.random.default_rng([cfg.seed, task_label])
        opt_state: Optional[AdamState] = None
        history: List[HistoryRow] = []
        events = list(train)

        for epoch in range(1, cfg.epochs + 1):
            order = rng.permutation(len(events))
            losses: List[float] = []
            collisions = 0
            backward_events = 0
            for batch_index, indices in enumerate(chunked(order, cfg.batch_size)):
                batch = [events[i] for i in indices]
                value, grad, loss = self.objective(params, batch, stats, importance)
                if not math.isfinite(value) or not np.all(np.isfinite(grad.values)):
                    raise NumericError(
                        f"non-finite loss at task {task_label}, epoch {epoch}, batch {batch_index}",
                        "train_loss",
                    )
                params, opt_state = adam_step(params, grad, opt_state, cfg.learning_rate)
                losses.append(value)
                collisions += int(loss.collided.sum())
                backward_events += int(loss.clamped.sum())
                self.logger.debug(f"Task {task_label} epoch {epoch} batch {batch_index}: loss {value:.6g}")

            val_spacing, val_speed = self.validate(params, val, stats)
            row = HistoryRow(
                epoch=epoch,
                task=task_label,
                train_loss=float(np.mean(losses)),
                val_mse_spacing=val_spacing,
                val_mse_speed=val_speed,
                collisions=collisions,
                backward_events=backward_events,
            )
            history.append(row)
            self.logger.info(
                f"Task {task_label} epoch {epoch}/{cfg.epochs}: train_loss {row.train_loss:.6g}, "
                f"val_mse_spacing {val_spacing:.6g}, val_mse_speed {val_speed:.6g}, "
                f"collisions {collisions}, backward {backward_events}"
            )
        return params, history

    def train_task(
        self,
        params: ParamVector,
        task: TaskSet,
        stats: FeatureStats,
        importance: Optional[ImportanceVector] = None,
    ) -> Tuple[ParamVector, List[HistoryRow]]:
        """在单个任务集上训练"""
        return self.fit(params, task.train, task.val, stats, task.task_id, importance)

    def estimate_importance(
        self, params: ParamVector, task: TaskSet, stats: FeatureStats
    ) -> ImportanceVector:
        """在刚结束任务的训练集上估计重要性"""
        cfg = self.cfg
        kind = cfg.method.importance_kind
        seed = [cfg.seed, task.task_id, 1]
        if kind == ImportanceKind.FISHER:
            return estimate_fisher(
                params,
                task.train,
                lambda p, events: self.batch_loss(p, events, stats).grads,
                cap=cfg.importance_cap,
                seed=seed,
                batch_size=cfg.batch_size,
            )
        return estimate_mas_importance(
            params, task.train, stats, cap=cfg.importance_cap, seed=seed, jobs=self.jobs
        )

    def _reusable_first_stage(
        self, reuse: CurriculumResult, stats: FeatureStats
    ) -> Tuple[ParamVector, List[HistoryRow]]:
        """校验并取出另一次运行的阶段 1 结果"""
        if reuse.config is None or not self.cfg.shares_first_stage(reuse.config):
            raise InvalidArgumentError(
                "stage-1 result was trained with a different configuration", field="reuse"
            )
        first, rows = reuse.first_stage()
        if not (
            np.array_equal(first.normalization.mean, stats.mean)
            and np.array_equal(first.normalization.std, stats.std)
        ):
            raise InvalidArgumentError("stage-1 result was trained on different tasks", field="reuse")
        return first.params, rows

    def run_curriculum(
        self, tasks: Sequence[TaskSet], reuse: Optional[CurriculumResult] = None
    ) -> CurriculumResult:
        """按配置的方法运行完整课程

        joint 在三个训练集的并集上训练一次，只产生阶段 3 检查点；
        其余方法依次训练任务 1→2→3，每个阶段产生一个检查点。
        阶段 k 检查点保存阶段 k 训练时作为正则项的重要性（阶段 1 没有）。

        Args:
            tasks: 三个任务集
            reuse: 同配置下另一方法的课程结果；给出时直接沿用其阶段 1

        Returns:
            检查点、训练历史与标准化统计
        """
        if len(tasks) != 3:
            raise InvalidArgumentError("curriculum needs exactly three task sets", field="tasks")
        cfg = self.cfg
        stats = fit_feature_stats(tasks[0].train, cfg.horizon)
        params = init_params(cfg.hidden_size, cfg.seed, cfg.horizon)
        self.logger.info(f"Starting {cfg.method.value} curriculum ({len(params)} parameters)")

        if cfg.method is Method.JOINT:
            train = [e for task in tasks for e in task.train]
            val = [e for task in tasks for e in task.val]
            params, history = self.fit(params, train, val, stats, JOINT_TASK_LABEL)
            checkpoint = Checkpoint(params=params, stage=3, method=cfg.method, normalization=stats)
            return CurriculumResult(
                checkpoints=[checkpoint], history=history, stats=stats, config=cfg
            )

        checkpoints: List[Checkpoint] = []
        history: List[HistoryRow] = []
        importance: Optional[ImportanceVector] = None
        for stage, task in enumerate(tasks, start=1):
            if stage == 1 and reuse is not None:
                self.logger.info(f"Stage 1: reusing the {reuse.checkpoints[0].method.value} result")
                params, rows = self._reusable_first_stage(reuse, stats)
            else:
                self.logger.info(f"Stage {stage}: training on task {task.task_id}")
                params, rows = self.train_task(params, task, stats, importance)
            history.extend(rows)
            checkpoints.append(
                Checkpoint(
                    params=params,
                    importance=importance,
                    stage=stage,
                    method=cfg.method,
                    normalization=stats,
                )
            )
            if cfg.method.importance_kind is not None and stage < len(tasks):
                new = self.estimate_importance(params, task, stats)
                importance = accumulate(importance, new, cfg.reg)
                summary = importance_stats(importance)
                self.logger.info(
                    f"Importance after task {task.task_id}: kind {summary['kind']}, "
                    f"tasks_seen {summary['tasks_seen']}, mean {summary['mean']:.6g}, max {summary['max']:.6g}"
                )
        return CurriculumResult(checkpoints=checkpoints, history=history, stats=stats, config=cfg)


def train_task(
    params: ParamVector,
    task: TaskSet,
    cfg: TrainConfig,
    importance: Optional[ImportanceVector] = None,
    stats: Optional[FeatureStats] = None,
    jobs: Optional[int] = 1,
) -> Tuple[ParamVector, List[HistoryRow]]:
    """单任务训练；未给出统计量时在该任务训练集上拟合"""
    if stats is None and task.train:
        stats = fit_feature_stats(task.train, cfg.horizon)
    return Trainer(cfg, jobs).train_task(params, task, stats, importance)


def run_curriculum(
    tasks: Sequence[TaskSet], cfg: TrainConfig, jobs: Optional[int] = 1
) -> List[Checkpoint]:
    return Trainer(cfg, jobs).run_curriculum(tasks).checkpoints


def history_frame(rows: Sequence[HistoryRow]) -> pd.DataFrame:
    return pd.DataFrame([row.model_dump() for row in rows], columns=HISTORY_COLUMNS)


def write_history(rows: Sequence[HistoryRow], path: Union[str, Path]) -> Path:
    """写出训练历史 CSV"""
    target = Path(path)
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        history_frame(rows).to_csv(target, index=False, float_format="%.17g", lineterminator="\n")
    except OSError as e:
        raise ArtifactIOError(f"cannot write {target}: {e}", str(target))
    return target
