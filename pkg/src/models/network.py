"""网络参数数据模型"""

from typing import Dict, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

N_FEATURES = 4
DEFAULT_HIDDEN_SIZE = 64
DEFAULT_HORIZON = 10

# 参数段顺序固定，序列化与梯度向量都依赖此顺序
SLICE_ORDER = ("w_input", "w_recurrent", "b_gates", "w_head", "b_head")


def param_count(hidden_size: int) -> int:
    """参数总数 = 4H(4+H) + 4H + H + 1"""
    h = hidden_size
    return 4 * h * (N_FEATURES + h) + 4 * h + h + 1


class ParamLayout(BaseModel):
    """参数向量的分段布局

    门的排列顺序为 (input, forget, cell, output)，每段 hidden_size 行。
    """

    hidden_size: int = Field(ge=1, description="隐藏层维度")

    @property
    def shapes(self) -> Dict[str, Tuple[int, ...]]:
        h = self.hidden_size
        return {
            "w_input": (4 * h, N_FEATURES),
            "w_recurrent": (4 * h, h),
            "b_gates": (4 * h,),
            "w_head": (h,),
            "b_head": (1,),
        }

    @property
    def slices(self) -> Dict[str, slice]:
        out: Dict[str, slice] = {}
        start = 0
        for name in SLICE_ORDER:
            size = int(np.prod(self.shapes[name]))
            out[name] = slice(start, start + size)
            start += size
        return out

    @property
    def size(self) -> int:
        return param_count(self.hidden_size)

    def forget_bias_slice(self) -> slice:
        """遗忘门偏置在整个向量中的位置"""
        h = self.hidden_size
        start = self.slices["b_gates"].start
        return slice(start + h, start + 2 * h)

    def unpack(self, values: np.ndarray) -> Dict[str, np.ndarray]:
        """把扁平向量切分为各参数矩阵（视图，不复制）"""
        return {
            name: values[sl].reshape(self.shapes[name])
            for name, sl in self.slices.items()
        }


class ParamVector(BaseModel):
    """全部可训练参数的扁平向量"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    values: np.ndarray = Field(description="float64 扁平参数")
    hidden_size: int = Field(default=DEFAULT_HIDDEN_SIZE, ge=1, description="隐藏层维度")
    horizon: int = Field(default=DEFAULT_HORIZON, ge=1, description="历史窗口长度")

    @field_validator("values", mode="before")
    @classmethod
    def coerce_values(cls, v):
        array = np.array(v, dtype=np.float64).reshape(-1)
        array.flags.writeable = False
        return array

    @model_validator(mode="after")
    def check_length(self) -> "ParamVector":
        expected = param_count(self.hidden_size)
        if self.values.shape[0] != expected:
            raise ValueError(
                f"parameter vector has {self.values.shape[0]} entries, "
                f"hidden_size {self.hidden_size} needs {expected}"
            )
        return self

    @property
    def layout(self) -> ParamLayout:
        return ParamLayout(hidden_size=self.hidden_size)

    def __len__(self) -> int:
        return int(self.values.shape[0])

    def with_values(self, values: np.ndarray) -> "ParamVector":
        """返回同一架构、不同取值的新向量"""
        return ParamVector(values=values, hidden_size=self.hidden_size, horizon=self.horizon)

    def unpack(self) -> Dict[str, np.ndarray]:
        return self.layout.unpack(self.values)


class GradVector(BaseModel):
    """与 ParamVector 逐元素对齐的梯度"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    values: np.ndarray = Field(description="float64 扁平梯度")

    @field_validator("values", mode="before")
    @classmethod
    def coerce_values(cls, v):
        return np.array(v, dtype=np.float64).reshape(-1)

    def __len__(self) -> int:
        return int(self.values.shape[0])


class FeatureWindow(BaseModel):
    """H×4 特征窗口：(sv_speed, lv_speed, relative_speed, spacing)"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    rows: np.ndarray = Field(description="H×4 float64 矩阵")

    @field_validator("rows", mode="before")
    @classmethod
    def coerce_rows(cls, v):
        array = np.array(v, dtype=np.float64)
        if array.ndim != 2 or array.shape[1] != N_FEATURES:
            raise ValueError(f"window must be H x {N_FEATURES}, got {array.shape}")
        return array

    @model_validator(mode="after")
    def check_invariants(self) -> "FeatureWindow":
        rows = self.rows
        if not np.all(np.isfinite(rows)):
            raise ValueError("window contains non-finite values")
        if np.any(rows[:, 3] <= 0.0):
            raise ValueError("spacing column must be > 0")
        if np.any(np.abs(rows[:, 2] - (rows[:, 1] - rows[:, 0])) > 1e-9):
            raise ValueError("relative_speed must equal lv_speed - sv_speed")
        return self

    @property
    def horizon(self) -> int:
        return int(self.rows.shape[0])

    @classmethod
    def from_series(
        cls, sv_speed: np.ndarray, lv_speed: np.ndarray, spacing: np.ndarray
    ) -> "FeatureWindow":
        """由三条等长序列构造窗口"""
        sv = np.asarray(sv_speed, dtype=np.float64)
        lv = np.asarray(lv_speed, dtype=np.float64)
        sp = np.asarray(spacing, dtype=np.float64)
        return cls(rows=np.stack([sv, lv, lv - sv, sp], axis=1))
