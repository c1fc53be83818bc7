"""阶段矩阵与遗忘分数"""

from typing import Dict, List, Optional, Sequence

import numpy as np

from ..models.evaluation import (FinalSummary, ForgettingScore,
                                 RetentionCheck, StageCell, StageMatrix)
from ..models.event import TaskSet
from ..models.training import METHOD_ORDER, Checkpoint, Method
from ..utils.exceptions import InvalidArgumentError, InvalidStateError
from ..utils.logger import get_logger
from .metrics import taskset_metrics

logger = get_logger(__name__)

FINAL_STAGE = 3
# baseline 任务 1 阶段 3 / 阶段 1 至少为该值才算出现遗忘
FORGETTING_FACTOR = 1.5
# 正则方法任务 1 阶段 3 间距 MSE 不超过 baseline 的该倍数
RETENTION_FACTOR = 0.7


def _by_method(checkpoints: Sequence[Checkpoint]) -> Dict[Method, Dict[int, Checkpoint]]:
    grouped: Dict[Method, Dict[int, Checkpoint]] = {}
    for ckpt in checkpoints:
        stages = grouped.setdefault(ckpt.method, {})
        if ckpt.stage in stages:
            raise InvalidStateError(f"duplicate checkpoint {ckpt.filename}", "checkpoints")
        stages[ckpt.stage] = ckpt
    return grouped


def expected_stages(method: Method) -> List[int]:
    return [FINAL_STAGE] if method is Method.JOINT else [1, 2, 3]


def build_stage_matrix(
    checkpoints: Sequence[Checkpoint],
    tasks: Sequence[TaskSet],
    dt: float,
    jobs: Optional[int] = 1,
) -> StageMatrix:
    """评估全部检查点

    持续学习方法的阶段 k 检查点在任务 1..k 的测试集上评估；joint 只在阶段 3 评估三个任务。

    Args:
        checkpoints: run_curriculum 产生的检查点（可包含多个方法）
        tasks: 三个任务集
        dt: 步长 (s)
        jobs: 并行线程数

    Returns:
        阶段矩阵
    """
    if len(tasks) != 3:
        raise InvalidArgumentError("stage matrix needs exactly three task sets", field="tasks")
    grouped = _by_method(checkpoints)
    cells: List[StageCell] = []
    for method in METHOD_ORDER:
        if method not in grouped:
            continue
        stages = grouped[method]
        for stage in expected_stages(method):
            ckpt = stages.get(stage)
            if ckpt is None:
                raise InvalidStateError(
                    f"missing checkpoint {method.value}_stage{stage}.dfw", "checkpoints"
                )
            task_ids = range(1, 4) if method is Method.JOINT else range(1, stage + 1)
            for task_id in task_ids:
                metrics = taskset_metrics(ckpt, tasks[task_id - 1], dt, jobs=jobs)
                cells.append(StageCell(method=method, task_id=task_id, stage=stage, metrics=metrics))
                logger.info(
                    f"{method.value} stage {stage} task {task_id}: "
                    f"mse_spacing {metrics.mse_spacing:.6g}, mse_speed {metrics.mse_speed:.6g}, "
                    f"collision_rate {metrics.collision_rate:.2f}%"
                )
    return StageMatrix(cells=cells)


def relative_increase(first: float, final: float) -> Optional[float]:
    """100·(final − first)/first；first 为 0 时未定义"""
    if first == 0.0:
        return None
    return 100.0 * (final - first) / first


def first_trained_stage(method: Method, task_id: int) -> int:
    return FINAL_STAGE if method is Method.JOINT else task_id


def forgetting_score(matrix: StageMatrix, method: Method, task_id: int) -> ForgettingScore:
    """任务从首次训练后的阶段到阶段 3 的 MSE 相对增幅（间距、速度分别计算）"""
    first_stage = first_trained_stage(method, task_id)
    first = matrix.get(method, task_id, first_stage)
    final = matrix.get(method, task_id, FINAL_STAGE)
    if first is None or final is None:
        raise InvalidStateError(
            f"stage matrix lacks {method.value} task {task_id} at stages {first_stage} and {FINAL_STAGE}",
            "matrix",
        )
    score = ForgettingScore(
        method=method,
        task_id=task_id,
        first_stage=first_stage,
        spacing=relative_increase(first.mse_spacing, final.mse_spacing),
        speed=relative_increase(first.mse_speed, final.mse_speed),
    )
    if score.spacing is None or score.speed is None:
        logger.warning(f"Forgetting score of {method.value} task {task_id} is undefined (zero MSE)")
    return score


def forgetting_scores(matrix: StageMatrix) -> List[ForgettingScore]:
    """矩阵中所有方法、任务的遗忘分数"""
    return [
        forgetting_score(matrix, method, task_id)
        for method in matrix.methods()
        for task_id in range(1, 4)
        if matrix.get(method, task_id, FINAL_STAGE) is not None
    ]


def final_summary(matrix: StageMatrix) -> List[FinalSummary]:
    """每个方法阶段 3 三个任务的平均指标"""
    summaries = []
    for method in matrix.methods():
        cells = [matrix.get(method, task_id, FINAL_STAGE) for task_id in range(1, 4)]
        if any(cell is None for cell in cells):
            continue
        summaries.append(
            FinalSummary(
                method=method,
                mean_mse_spacing=float(np.mean([c.mse_spacing for c in cells])),
                mean_mse_speed=float(np.mean([c.mse_speed for c in cells])),
                mean_collision_rate=float(np.mean([c.collision_rate for c in cells])),
            )
        )
    return summaries


def _ratio(numerator: float, denominator: float) -> Optional[float]:
    return None if denominator == 0.0 else numerator / denominator


def retention_check(
    matrix: StageMatrix,
    forgetting_factor: float = FORGETTING_FACTOR,
    retention_factor: float = RETENTION_FACTOR,
) -> RetentionCheck:
    """baseline 是否遗忘任务 1、EWC/MAS 是否保持任务 1 且无碰撞

    Args:
        matrix: 含 baseline 与至少一个正则方法的阶段矩阵
        forgetting_factor: baseline 阶段 3 / 阶段 1 的最小比值
        retention_factor: 正则方法阶段 3 / baseline 阶段 3 的最大比值

    Returns:
        检查结果
    """
    first = matrix.get(Method.BASELINE, 1, 1)
    final = matrix.get(Method.BASELINE, 1, FINAL_STAGE)
    if first is None or final is None:
        raise InvalidStateError("retention check needs baseline task 1 at stages 1 and 3", "matrix")
    regularized = [m for m in (Method.EWC, Method.MAS) if m in matrix.methods()]
    if not regularized:
        raise InvalidStateError("retention check needs an ewc or mas run", "matrix")

    baseline_ratio = _ratio(final.mse_spacing, first.mse_spacing)
    ratios: Dict[Method, Optional[float]] = {}
    collisions: Dict[Method, float] = {}
    for method in regularized:
        cell = matrix.get(method, 1, FINAL_STAGE)
        ratios[method] = None if cell is None else _ratio(cell.mse_spacing, final.mse_spacing)
        collisions[method] = max(
            c.metrics.collision_rate for c in matrix.cells if c.method is method
        )

    check = RetentionCheck(
        baseline_task1_ratio=baseline_ratio,
        task1_ratio_to_baseline=ratios,
        max_collision_rate=collisions,
        baseline_forgets=baseline_ratio is not None and baseline_ratio >= forgetting_factor,
        regularized_retain=all(r is not None and r <= retention_factor for r in ratios.values()),
        regularized_collision_free=all(rate == 0.0 for rate in collisions.values()),
    )
    shown_ratios = {m.value: r for m, r in ratios.items()}
    shown_collisions = {m.value: r for m, r in collisions.items()}
    log = logger.info if check.passed else logger.warning
    log(
        f"Retention check: baseline ratio {baseline_ratio}, ratios to baseline {shown_ratios}, "
        f"max collision rate {shown_collisions}"
    )
    return check
