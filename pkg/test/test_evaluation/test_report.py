"""报告输出测试"""

import pandas as pd

from src.evaluation.matrix import build_stage_matrix
from src.evaluation.report import (MATRIX_COLUMNS, MATRIX_CSV, REPORT_MD,
                                   read_matrix, render_markdown, render_report)
from src.models.evaluation import MetricCell, StageCell, StageMatrix
from src.models.training import Method
from src.train.trainer import Trainer


def zero_first_matrix() -> StageMatrix:
    cells = [
        StageCell(
            method=Method.EWC,
            task_id=1,
            stage=stage,
            metrics=MetricCell(mse_spacing=value, mse_speed=1.0, collision_rate=0.0, n_events=1),
        )
        for stage, value in ((1, 0.0), (2, 1.0), (3, 2.0))
    ]
    return StageMatrix(cells=cells)


class TestMarkdown:
    """report.md 渲染测试类"""

    def test_sections(self):
        """测试报告包含各表格"""
        text = render_markdown(zero_first_matrix())
        assert "## MSE of spacing" in text
        assert "## Collision rate (%)" in text
        assert "## Forgetting" in text
        assert "| CL-EWC | Task 1 | 0.0000 | 1.0000 | 2.0000 |" in text

    def test_undefined_forgetting(self):
        """测试基准 MSE 为 0 时遗忘分数显示 undefined"""
        text = render_markdown(zero_first_matrix())
        assert "| CL-EWC | Task 1 | 1 | undefined | +0.0% |" in text

    def test_retention_section(self):
        """测试同时有 baseline 与 EWC 时输出遗忘定性检查"""
        assert "## Retention check" not in render_markdown(zero_first_matrix())
        cells = list(zero_first_matrix().cells)
        for stage, value in ((1, 1.0), (2, 3.0), (3, 4.0)):
            cells.append(
                StageCell(
                    method=Method.BASELINE,
                    task_id=1,
                    stage=stage,
                    metrics=MetricCell(mse_spacing=value, mse_speed=1.0, collision_rate=0.0, n_events=1),
                )
            )
        text = render_markdown(StageMatrix(cells=cells))
        assert "## Retention check" in text
        assert "stage 3 / stage 1: 4.000" in text
        assert "| CL-EWC | 0.500 | 0.00 |" in text
        assert "Result: pass" in text


class TestRenderReport:
    """报告文件测试类"""

    def test_files_and_regeneration(self, tmp_path, small_config, task_sets):
        """测试报告文件写出且由矩阵 CSV 重新生成时完全相同"""
        checkpoints = []
        for method in (Method.JOINT, Method.BASELINE):
            cfg = small_config.model_copy(update={"method": method})
            checkpoints += Trainer(cfg).run_curriculum(task_sets).checkpoints
        matrix = build_stage_matrix(checkpoints, task_sets, 0.1)
        written = render_report(matrix, tmp_path, task_sets, checkpoints, seed=3)

        assert set(written) == {MATRIX_CSV, REPORT_MD, "traj_task1.csv", "traj_task2.csv", "traj_task3.csv"}
        frame = pd.read_csv(tmp_path / MATRIX_CSV)
        assert list(frame.columns) == MATRIX_COLUMNS
        assert len(frame) == 9

        traj = pd.read_csv(tmp_path / "traj_task1.csv")
        assert set(traj["method"]) == {"joint", "baseline"}

        again = read_matrix(tmp_path / MATRIX_CSV)
        assert again.index() == matrix.index()
        assert render_markdown(again) == (tmp_path / REPORT_MD).read_text(encoding="utf-8")

    def test_matrix_only(self, tmp_path):
        """测试只给矩阵时不导出轨迹"""
        written = render_report(zero_first_matrix(), tmp_path / "r")
        assert set(written) == {MATRIX_CSV, REPORT_MD}

