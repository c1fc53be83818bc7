"""报告输出：report.md、stage_matrix.csv 与轨迹对比 CSV"""

from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from ..models.evaluation import MetricCell, StageCell, StageMatrix
from ..models.event import TaskSet
from ..models.training import Checkpoint, Method
from ..sim.export import TRAJECTORY_COLUMNS, trajectory_frame, write_frame
from ..sim.rollout import rollout
from ..utils.exceptions import ArtifactIOError, EventParseError
from ..utils.logger import get_logger
from .matrix import (FINAL_STAGE, FORGETTING_FACTOR, RETENTION_FACTOR,
                     final_summary, forgetting_scores, retention_check)

logger = get_logger(__name__)

MATRIX_CSV = "stage_matrix.csv"
REPORT_MD = "report.md"
MATRIX_COLUMNS = [
    "method",
    "task",
    "stage",
    "mse_spacing",
    "mse_speed",
    "collision_rate_pct",
    "n_events",
    "event_mse_spacing",
    "event_mse_speed",
]
METHOD_LABELS = {
    Method.JOINT: "LSTM (joint)",
    Method.BASELINE: "CL-Baseline",
    Method.EWC: "CL-EWC",
    Method.MAS: "CL-MAS",
}


def matrix_frame(matrix: StageMatrix) -> pd.DataFrame:
    """阶段矩阵的逐单元表"""
    rows = []
    for cell in matrix.sorted_cells():
        m = cell.metrics
        rows.append(
            {
                "method": cell.method.value,
                "task": cell.task_id,
                "stage": cell.stage,
                "mse_spacing": m.mse_spacing,
                "mse_speed": m.mse_speed,
                "collision_rate_pct": m.collision_rate,
                "n_events": m.n_events,
                "event_mse_spacing": m.event_mse_spacing,
                "event_mse_speed": m.event_mse_speed,
            }
        )
    return pd.DataFrame(rows, columns=MATRIX_COLUMNS)


def read_matrix(path: Union[str, Path]) -> StageMatrix:
    """读回 stage_matrix.csv"""
    source = Path(path)
    try:
        frame = pd.read_csv(source, float_precision="round_trip")
    except OSError as e:
        raise ArtifactIOError(f"cannot read {source}: {e}", str(source))
    missing = [c for c in MATRIX_COLUMNS if c not in frame.columns]
    if missing:
        raise EventParseError(f"missing columns {missing}", str(source))
    try:
        cells = [
            StageCell(
                method=Method(row.method),
                task_id=int(row.task),
                stage=int(row.stage),
                metrics=MetricCell(
                    mse_spacing=row.mse_spacing,
                    mse_speed=row.mse_speed,
                    collision_rate=row.collision_rate_pct,
                    n_events=int(row.n_events),
                    event_mse_spacing=row.event_mse_spacing,
                    event_mse_speed=row.event_mse_speed,
                ),
            )
            for row in frame.itertuples(index=False)
        ]
        return StageMatrix(cells=cells)
    except ValueError as e:
        raise EventParseError(f"invalid stage matrix: {e}", str(source))


def _table(
    matrix: StageMatrix, title: str, value: Callable[[MetricCell], float], fmt: str
) -> List[str]:
    lines = [f"## {title}", "", "| Method | Task | Stage 1 | Stage 2 | Stage 3 |", "|---|---|---|---|---|"]
    for method in matrix.methods():
        for task_id in range(1, 4):
            cells = [matrix.get(method, task_id, stage) for stage in range(1, 4)]
            if all(c is None for c in cells):
                continue
            shown = ["-" if c is None else fmt.format(value(c)) for c in cells]
            lines.append(f"| {METHOD_LABELS[method]} | Task {task_id} | " + " | ".join(shown) + " |")
    lines.append("")
    return lines


def _percent(value: Optional[float]) -> str:
    return "undefined" if value is None else f"{value:+.1f}%"


def _ratio_text(value: Optional[float]) -> str:
    return "undefined" if value is None else f"{value:.3f}"


def _retention_lines(matrix: StageMatrix) -> List[str]:
    """baseline 与正则方法都在矩阵中时的遗忘定性检查段落"""
    has_baseline = all(
        matrix.get(Method.BASELINE, 1, stage) is not None for stage in (1, FINAL_STAGE)
    )
    methods = matrix.methods()
    if not has_baseline or not (Method.EWC in methods or Method.MAS in methods):
        return []
    check = retention_check(matrix)
    lines = [
        "## Retention check",
        "",
        f"Baseline task 1 spacing MSE, stage 3 / stage 1: {_ratio_text(check.baseline_task1_ratio)} "
        f"(forgetting when >= {FORGETTING_FACTOR}): {'yes' if check.baseline_forgets else 'no'}",
        "",
        f"| Method | Task 1 stage 3 / baseline (<= {RETENTION_FACTOR}) | Max collision rate (%) |",
        "|---|---|---|",
    ]
    for method, ratio in check.task1_ratio_to_baseline.items():
        lines.append(
            f"| {METHOD_LABELS[method]} | {_ratio_text(ratio)} | {check.max_collision_rate[method]:.2f} |"
        )
    lines += ["", f"Result: {'pass' if check.passed else 'fail'}", ""]
    return lines


def render_markdown(matrix: StageMatrix) -> str:
    """生成 report.md 文本（只依赖矩阵内容）"""
    lines = ["# Continual car-following evaluation", ""]
    lines += _table(matrix, "MSE of spacing (m²)", lambda c: c.mse_spacing, "{:.4f}")
    lines += _table(matrix, "MSE of speed ((m/s)²)", lambda c: c.mse_speed, "{:.4f}")
    lines += _table(matrix, "Collision rate (%)", lambda c: c.collision_rate, "{:.2f}")

    lines += [
        "## Forgetting",
        "",
        "Relative MSE change from the stage a task was first trained to stage 3.",
        "",
        "| Method | Task | First stage | Spacing | Speed |",
        "|---|---|---|---|---|",
    ]
    for score in forgetting_scores(matrix):
        lines.append(
            f"| {METHOD_LABELS[score.method]} | Task {score.task_id} | {score.first_stage} | "
            f"{_percent(score.spacing)} | {_percent(score.speed)} |"
        )
    lines.append("")

    lines += [
        "## Final performance",
        "",
        "Mean over the three task sets at stage 3.",
        "",
        "| Method | MSE spacing | MSE speed | Collision rate (%) |",
        "|---|---|---|---|",
    ]
    for summary in final_summary(matrix):
        lines.append(
            f"| {METHOD_LABELS[summary.method]} | {summary.mean_mse_spacing:.4f} | "
            f"{summary.mean_mse_speed:.4f} | {summary.mean_collision_rate:.2f} |"
        )
    lines.append("")
    lines += _retention_lines(matrix)
    return "\n".join(lines)


def trajectory_comparison(
    checkpoints: Sequence[Checkpoint], task: TaskSet, dt: float, seed: int
) -> pd.DataFrame:
    """一个随机测试事件上全部方法阶段 3 检查点的轨迹对比"""
    rng = np.random.default_rng([seed, task.task_id, 2])
    event = task.test[int(rng.integers(len(task.test)))]
    frames = []
    for ckpt in sorted(checkpoints, key=lambda c: list(METHOD_LABELS).index(c.method)):
        if ckpt.stage != FINAL_STAGE:
            continue
        frame = trajectory_frame(event, rollout(ckpt, event, dt, stop_on_collision=False))
        frame.insert(0, "method", ckpt.method.value)
        frames.append(frame)
    if not frames:
        return pd.DataFrame(columns=["method"] + TRAJECTORY_COLUMNS)
    return pd.concat(frames, ignore_index=True)


def render_report(
    matrix: StageMatrix,
    out_dir: Union[str, Path],
    tasks: Optional[Sequence[TaskSet]] = None,
    checkpoints: Optional[Sequence[Checkpoint]] = None,
    dt: float = 0.1,
    seed: int = 42,
) -> Dict[str, Path]:
    """写出报告文件

    Args:
        matrix: 阶段矩阵
        out_dir: 输出目录
        tasks: 任务集（给出时连同检查点导出 traj_task<k>.csv）
        checkpoints: 检查点
        dt: 步长 (s)
        seed: 选取轨迹事件的种子

    Returns:
        名称到路径的映射
    """
    root = Path(out_dir)
    written: Dict[str, Path] = {}
    written[MATRIX_CSV] = write_frame(matrix_frame(matrix), root / MATRIX_CSV)

    report_path = root / REPORT_MD
    try:
        report_path.write_text(render_markdown(matrix), encoding="utf-8")
    except OSError as e:
        raise ArtifactIOError(f"cannot write {report_path}: {e}", str(report_path))
    written[REPORT_MD] = report_path

    if tasks and checkpoints:
        for task in tasks:
            if not task.test:
                continue
            name = f"traj_task{task.task_id}.csv"
            written[name] = write_frame(trajectory_comparison(checkpoints, task, dt, seed), root / name)
    logger.info(f"Report written to {root} ({len(written)} files)")
    return written
