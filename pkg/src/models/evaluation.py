"""评估结果数据模型"""

from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, Field, model_validator

from .training import METHOD_ORDER, Method


class EventMetrics(BaseModel):
    """单个事件的平方误差和"""

    event_id: str = Field(description="事件 ID")
    se_spacing_sum: float = Field(ge=0.0, description="间距平方误差和 (m²)")
    se_speed_sum: float = Field(ge=0.0, description="速度平方误差和 ((m/s)²)")
    n_steps: int = Field(ge=0, description="计分步数")
    collided: bool = Field(description="是否碰撞")


class MetricCell(BaseModel):
    """一个 (方法, 任务, 阶段) 单元的指标"""

    mse_spacing: float = Field(ge=0.0, description="间距 MSE，按步汇总 (m²)")
    mse_speed: float = Field(ge=0.0, description="速度 MSE，按步汇总 ((m/s)²)")
    collision_rate: float = Field(ge=0.0, le=100.0, description="碰撞率 (%)")
    n_events: int = Field(ge=0, description="测试事件数")
    event_mse_spacing: float = Field(default=0.0, ge=0.0, description="按事件平均的间距 MSE")
    event_mse_speed: float = Field(default=0.0, ge=0.0, description="按事件平均的速度 MSE")


class StageCell(BaseModel):
    """矩阵中的一个已填充单元"""

    method: Method = Field(description="方法")
    task_id: int = Field(ge=1, le=3, description="任务编号")
    stage: int = Field(ge=1, le=3, description="阶段")
    metrics: MetricCell = Field(description="指标")


class StageMatrix(BaseModel):
    """按 (方法, 任务, 阶段) 索引的指标矩阵"""

    cells: List[StageCell] = Field(default_factory=list, description="已填充单元")

    @model_validator(mode="after")
    def check_index_discipline(self) -> "StageMatrix":
        seen = set()
        for cell in self.cells:
            key = (cell.method, cell.task_id, cell.stage)
            if key in seen:
                raise ValueError(f"duplicate cell {key}")
            seen.add(key)
            if cell.method is Method.JOINT and cell.stage != 3:
                raise ValueError("joint method is populated at stage 3 only")
            if cell.task_id > cell.stage:
                raise ValueError(f"cell {key} violates task_id <= stage")
        return self

    def get(self, method: Method, task_id: int, stage: int) -> Optional[MetricCell]:
        for cell in self.cells:
            if cell.method is method and cell.task_id == task_id and cell.stage == stage:
                return cell.metrics
        return None

    def methods(self) -> List[Method]:
        present = {cell.method for cell in self.cells}
        return [m for m in METHOD_ORDER if m in present]

    def sorted_cells(self) -> List[StageCell]:
        order: Dict[Method, int] = {m: i for i, m in enumerate(METHOD_ORDER)}
        return sorted(self.cells, key=lambda c: (order[c.method], c.task_id, c.stage))

    def index(self) -> List[Tuple[Method, int, int]]:
        return [(c.method, c.task_id, c.stage) for c in self.sorted_cells()]


class ForgettingScore(BaseModel):
    """遗忘分数（%）；分母为 0 时为 None（未定义）"""

    method: Method = Field(description="方法")
    task_id: int = Field(ge=1, le=3, description="任务编号")
    first_stage: int = Field(ge=1, le=3, description="首次训练该任务后的阶段")
    spacing: Optional[float] = Field(default=None, description="间距 MSE 相对增幅 (%)")
    speed: Optional[float] = Field(default=None, description="速度 MSE 相对增幅 (%)")


class FinalSummary(BaseModel):
    """阶段 3 三个任务的平均表现"""

    method: Method = Field(description="方法")
    mean_mse_spacing: float = Field(description="平均间距 MSE")
    mean_mse_speed: float = Field(description="平均速度 MSE")
    mean_collision_rate: float = Field(description="平均碰撞率 (%)")


class RetentionCheck(BaseModel):
    """固定协议下的遗忘定性检查结果"""

    baseline_task1_ratio: Optional[float] = Field(
        default=None, description="baseline 任务 1 间距 MSE：阶段 3 / 阶段 1"
    )
    task1_ratio_to_baseline: Dict[Method, Optional[float]] = Field(
        default_factory=dict, description="各持续学习方法阶段 3 任务 1 间距 MSE / baseline"
    )
    max_collision_rate: Dict[Method, float] = Field(
        default_factory=dict, description="各持续学习方法全部已填充单元中的最大碰撞率 (%)"
    )
    baseline_forgets: bool = Field(description="baseline 比值 ≥ 遗忘阈值")
    regularized_retain: bool = Field(description="所有正则方法比值 ≤ 保持阈值")
    regularized_collision_free: bool = Field(description="所有正则方法碰撞率均为 0")

    @property
    def passed(self) -> bool:
        return self.baseline_forgets and self.regularized_retain and self.regularized_collision_free

    def summary(self) -> Dict[str, Any]:
        """写入运行清单的 JSON 结果"""
        data = self.model_dump(mode="json")
        data["passed"] = self.passed
        return data
