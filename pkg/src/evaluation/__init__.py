"""评估与报告模块"""

from .matrix import (build_stage_matrix, final_summary, forgetting_score,
                     forgetting_scores, relative_increase, retention_check)
from .metrics import (collision_rate, evaluate_events, event_metrics,
                      mean_squared_error, pool_metrics, taskset_metrics)
from .report import (MATRIX_CSV, REPORT_MD, matrix_frame, read_matrix,
                     render_markdown, render_report)

__all__ = [
    "MATRIX_CSV",
    "REPORT_MD",
    "build_stage_matrix",
    "collision_rate",
    "evaluate_events",
    "event_metrics",
    "final_summary",
    "forgetting_score",
    "forgetting_scores",
    "matrix_frame",
    "mean_squared_error",
    "pool_metrics",
    "read_matrix",
    "relative_increase",
    "retention_check",
    "render_markdown",
    "render_report",
    "taskset_metrics",
]
