"""闭环仿真数据模型"""

from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class SimState(BaseModel):
    """仿真车辆状态"""

    model_config = ConfigDict(frozen=True)

    sv_speed: float = Field(ge=0.0, description="仿真车速度 (m/s)")
    spacing: float = Field(description="与前车间距 (m)")
    t_index: int = Field(default=0, ge=0, description="步数")
    clamped: bool = Field(default=False, description="上一步是否触发了倒车钳位")


class SimTrajectory(BaseModel):
    """闭环推演结果

    每个数组的第 k 项对应第 k+1 次闭环更新之后的状态。
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    event_id: str = Field(default="", description="事件 ID")
    dt: float = Field(gt=0.0, description="步长 (s)")
    start_index: int = Field(ge=0, description="第一条记录对应的事件下标")
    sv_speed: np.ndarray = Field(description="仿真车速度序列")
    spacing: np.ndarray = Field(description="仿真间距序列")
    accel: np.ndarray = Field(description="实际施加的加速度")
    collision_step: Optional[int] = Field(default=None, description="首次间距 ≤ 0 的步（从 1 计）")
    backward_clamp_count: int = Field(default=0, ge=0, description="倒车钳位次数")

    @field_validator("sv_speed", "spacing", "accel", mode="before")
    @classmethod
    def coerce_series(cls, v):
        array = np.array(v, dtype=np.float64).reshape(-1)
        array.flags.writeable = False
        return array

    @model_validator(mode="after")
    def check_lengths(self) -> "SimTrajectory":
        n = self.sv_speed.shape[0]
        if self.spacing.shape[0] != n or self.accel.shape[0] != n:
            raise ValueError("trajectory series must have equal length")
        if np.any(self.sv_speed < 0.0):
            raise ValueError("sv_speed must be >= 0")
        return self

    def __len__(self) -> int:
        return int(self.sv_speed.shape[0])
