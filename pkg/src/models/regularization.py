"""持续学习正则化数据模型"""

from enum import Enum
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .network import ParamVector

DEFAULT_EWC_LAMBDA = 1000.0
DEFAULT_MAS_LAMBDA = 100_000.0


class ImportanceKind(str, Enum):
    """重要性权重类型"""

    FISHER = "fisher"
    MAS = "mas"


class Accumulation(str, Enum):
    """跨任务累积方式"""

    SUM = "sum"
    RUNNING_MEAN = "running-mean"


class RegConfig(BaseModel):
    """正则化配置"""

    reg_lambda: float = Field(default=DEFAULT_EWC_LAMBDA, ge=0.0, description="正则强度 λ")
    accumulation: Accumulation = Field(default=Accumulation.SUM, description="累积方式")

    @classmethod
    def for_kind(
        cls,
        kind: ImportanceKind,
        reg_lambda: Optional[float] = None,
        accumulation: Accumulation = Accumulation.SUM,
    ) -> "RegConfig":
        """按重要性类型给出默认 λ（EWC 1000，MAS 1e5）"""
        if reg_lambda is None:
            reg_lambda = (
                DEFAULT_EWC_LAMBDA if kind == ImportanceKind.FISHER else DEFAULT_MAS_LAMBDA
            )
        return cls(reg_lambda=reg_lambda, accumulation=accumulation)


class ImportanceVector(BaseModel):
    """逐参数重要性权重（Fisher F 或 MAS Ω）以及锚点参数 θ*"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    weights: np.ndarray = Field(description="非负权重")
    anchor: ParamVector = Field(description="锚点参数 θ*")
    kind: ImportanceKind = Field(description="权重类型")
    tasks_seen: int = Field(default=1, ge=1, description="已累积的任务数")

    @field_validator("weights", mode="before")
    @classmethod
    def coerce_weights(cls, v):
        array = np.array(v, dtype=np.float64).reshape(-1)
        array.flags.writeable = False
        return array

    @model_validator(mode="after")
    def check_invariants(self) -> "ImportanceVector":
        if self.weights.shape[0] != len(self.anchor):
            raise ValueError(
                f"weights length {self.weights.shape[0]} != anchor length {len(self.anchor)}"
            )
        if not np.all(np.isfinite(self.weights)):
            raise ValueError("importance weights must be finite")
        if np.any(self.weights < 0.0):
            raise ValueError("importance weights must be >= 0")
        return self

    def __len__(self) -> int:
        return int(self.weights.shape[0])
