"""跟驰事件与任务集数据模型"""

import math
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class Event(BaseModel):
    """一次跟驰事件：固定采样率的前车速度、跟驰车速度与间距序列"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    event_id: str = Field(min_length=1, description="事件 ID")
    dt: float = Field(gt=0.0, description="采样间隔 (s)")
    lv_speed: np.ndarray = Field(description="前车速度 (m/s)")
    fv_speed: np.ndarray = Field(description="跟驰车速度 (m/s)")
    spacing: np.ndarray = Field(description="间距 (m)")

    @field_validator("dt")
    @classmethod
    def check_dt(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("dt must be finite")
        return v

    @field_validator("lv_speed", "fv_speed", "spacing", mode="before")
    @classmethod
    def coerce_series(cls, v):
        try:
            array = np.array(v, dtype=np.float64).reshape(-1)
        except (TypeError, ValueError):
            raise ValueError(f"expected a list of numbers, got {type(v).__name__}")
        array.flags.writeable = False
        return array

    @model_validator(mode="after")
    def check_invariants(self) -> "Event":
        n = self.lv_speed.shape[0]
        if self.fv_speed.shape[0] != n or self.spacing.shape[0] != n:
            raise ValueError("lv_speed, fv_speed and spacing must have equal length")
        if n == 0:
            raise ValueError("event has no samples")
        for name in ("lv_speed", "fv_speed", "spacing"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"{name} contains non-finite values")
        if np.any(self.lv_speed < 0.0) or np.any(self.fv_speed < 0.0):
            raise ValueError("speeds must be >= 0")
        if np.any(self.spacing <= 0.0):
            bad = int(np.argmax(self.spacing <= 0.0))
            raise ValueError(f"spacing must be > 0 (step {bad} has {self.spacing[bad]})")
        return self

    def __len__(self) -> int:
        return int(self.lv_speed.shape[0])


class SpeedRange(BaseModel):
    """平均跟驰速度区间 (low, high]；low_inclusive 时为 [low, high]"""

    model_config = ConfigDict(frozen=True)

    low: float = Field(description="下界")
    high: float = Field(description="上界（可为 inf）")
    low_inclusive: bool = Field(default=False, description="是否包含下界")

    def contains(self, speed: float) -> bool:
        above = speed >= self.low if self.low_inclusive else speed > self.low
        return above and speed <= self.high

    def label(self) -> str:
        left = "[" if self.low_inclusive else "("
        high = "inf" if math.isinf(self.high) else f"{self.high:.4g}"
        return f"{left}{self.low:.4g}, {high}]"


class TaskSet(BaseModel):
    """按平均跟驰速度划分的任务集"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    task_id: int = Field(ge=1, le=3, description="任务编号（1 为最快）")
    speed_range: SpeedRange = Field(description="平均跟驰速度区间")
    train: List[Event] = Field(default_factory=list, description="训练集")
    val: List[Event] = Field(default_factory=list, description="验证集")
    test: List[Event] = Field(default_factory=list, description="测试集")

    @model_validator(mode="after")
    def check_disjoint(self) -> "TaskSet":
        ids = [e.event_id for e in self.train + self.val + self.test]
        if len(ids) != len(set(ids)):
            raise ValueError(f"task {self.task_id} splits share event ids")
        return self

    @property
    def events(self) -> List[Event]:
        return self.train + self.val + self.test

    def __len__(self) -> int:
        return len(self.train) + len(self.val) + len(self.test)


class IdmParams(BaseModel):
    """智能驾驶员模型（IDM）参数"""

    model_config = ConfigDict(frozen=True)

    desired_speed: float = Field(gt=0.0, description="期望速度 v0 (m/s)")
    time_headway: float = Field(gt=0.0, description="期望车头时距 T (s)")
    min_gap: float = Field(gt=0.0, description="最小间距 s0 (m)")
    max_accel: float = Field(gt=0.0, description="最大加速度 a (m/s²)")
    comfortable_decel: float = Field(gt=0.0, description="舒适减速度 b (m/s²)")
    exponent: float = Field(default=4.0, ge=1.0, description="加速度指数 δ")


class GeneratorSummary(BaseModel):
    """合成数据每个工况的统计"""

    regime: str = Field(description="工况")
    count: int = Field(ge=0, description="事件数")
    mean_fv_speed_min: Optional[float] = Field(default=None, description="平均跟驰速度最小值")
    mean_fv_speed_mean: Optional[float] = Field(default=None, description="平均跟驰速度均值")
    mean_fv_speed_max: Optional[float] = Field(default=None, description="平均跟驰速度最大值")
