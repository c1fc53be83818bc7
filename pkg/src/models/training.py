"""训练配置与检查点数据模型"""

from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterable, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from ..config.settings import read_yaml_mapping
from ..utils.exceptions import ConfigurationError
from .network import DEFAULT_HIDDEN_SIZE, DEFAULT_HORIZON, N_FEATURES, ParamVector
from .regularization import (Accumulation, ImportanceKind, ImportanceVector,
                             RegConfig)


class Method(str, Enum):
    """训练方法"""

    JOINT = "joint"
    BASELINE = "baseline"
    EWC = "ewc"
    MAS = "mas"

    @property
    def importance_kind(self) -> Optional[ImportanceKind]:
        if self is Method.EWC:
            return ImportanceKind.FISHER
        if self is Method.MAS:
            return ImportanceKind.MAS
        return None


# 报告与检查点发现时的方法顺序
METHOD_ORDER = (Method.JOINT, Method.BASELINE, Method.EWC, Method.MAS)

# 只影响阶段 2 之后训练的配置键
REGULARIZATION_KEYS = {"method", "reg_lambda", "reg_accumulation", "importance_cap"}


class TrainConfig(BaseModel):
    """训练配置（键与配置文件一一对应）"""

    model_config = ConfigDict(extra="forbid", use_enum_values=False)

    epochs: int = Field(default=5, ge=1, description="每个任务的训练轮数")
    horizon: int = Field(default=DEFAULT_HORIZON, ge=1, description="历史窗口长度 H")
    learning_rate: float = Field(default=0.001, gt=0.0, description="Adam 学习率")
    batch_size: int = Field(default=32, ge=1, description="每批事件数")
    penalty_weight: float = Field(default=1000.0, ge=0.0, description="碰撞/倒车惩罚")
    seed: int = Field(default=42, description="随机种子")
    method: Method = Field(default=Method.BASELINE, description="训练方法")
    dt: float = Field(default=0.1, gt=0.0, description="仿真步长 (s)")
    rollout_chunk: int = Field(default=50, ge=1, description="截断 BPTT 块长（步）")
    hidden_size: int = Field(default=DEFAULT_HIDDEN_SIZE, ge=1, description="LSTM 隐藏层维度")
    reg_lambda: Optional[float] = Field(
        default=None, ge=0.0, description="正则强度 λ（留空按方法取默认值）"
    )
    reg_accumulation: Accumulation = Field(
        default=Accumulation.SUM, description="重要性跨任务累积方式"
    )
    importance_cap: int = Field(
        default=10_000, ge=1, description="估计重要性时的最大样本数（窗口/事件）"
    )

    @field_validator("reg_lambda", mode="before")
    @classmethod
    def empty_lambda(cls, v: Any) -> Any:
        if isinstance(v, str) and v.strip().lower() in ("", "none", "null", "default"):
            return None
        return v

    @property
    def reg(self) -> RegConfig:
        """解析后的正则化配置"""
        kind = self.method.importance_kind
        if kind is None:
            return RegConfig(reg_lambda=self.reg_lambda or 0.0, accumulation=self.reg_accumulation)
        return RegConfig.for_kind(kind, self.reg_lambda, self.reg_accumulation)

    def shares_first_stage(self, other: "TrainConfig") -> bool:
        """两个配置的阶段 1 训练是否相同（阶段 1 没有正则项，方法与正则键不影响结果）"""
        mine = self.model_dump(exclude=REGULARIZATION_KEYS)
        return mine == other.model_dump(exclude=REGULARIZATION_KEYS)

    def to_flat(self) -> Dict[str, Any]:
        """返回全部默认值已解析的平铺配置"""
        data = self.model_dump(mode="json")
        data["reg_lambda"] = self.reg.reg_lambda
        return data

    @classmethod
    def from_mapping(cls, data: Dict[str, Any]) -> "TrainConfig":
        try:
            return cls(**data)
        except ValidationError as e:
            first = e.errors()[0]
            key = ".".join(str(p) for p in first.get("loc", ()))
            raise ConfigurationError(f"invalid config value for {key!r}: {first['msg']}", key)

    @classmethod
    def load_from_yaml(
        cls, config_path: Path, ignore: Iterable[str] = ()
    ) -> "TrainConfig":
        """从平铺 YAML 文件加载；ignore 中的键（应用级设置）被跳过"""
        config_file = Path(config_path)
        if not config_file.exists():
            raise ConfigurationError(f"config file not found: {config_file}")
        skip = set(ignore)
        data = {k: v for k, v in read_yaml_mapping(config_file).items() if k not in skip}
        return cls.from_mapping(data)


class FeatureStats(BaseModel):
    """逐特征标准化统计（冻结于任务 1 训练集）"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    mean: np.ndarray = Field(description="4 维均值")
    std: np.ndarray = Field(description="4 维标准差")

    @field_validator("mean", "std", mode="before")
    @classmethod
    def coerce(cls, v):
        array = np.array(v, dtype=np.float64).reshape(-1)
        if array.shape[0] != N_FEATURES:
            raise ValueError(f"expected {N_FEATURES} values, got {array.shape[0]}")
        if not np.all(np.isfinite(array)):
            raise ValueError("feature statistics must be finite")
        array.flags.writeable = False
        return array

    @field_validator("std")
    @classmethod
    def positive_std(cls, v: np.ndarray) -> np.ndarray:
        if np.any(v <= 0.0):
            raise ValueError("feature std must be > 0")
        return v

    @classmethod
    def identity(cls) -> "FeatureStats":
        return cls(mean=np.zeros(N_FEATURES), std=np.ones(N_FEATURES))


class Checkpoint(BaseModel):
    """阶段检查点"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    params: ParamVector = Field(description="模型参数")
    importance: Optional[ImportanceVector] = Field(default=None, description="本阶段训练时使用的正则重要性")
    stage: int = Field(ge=1, le=3, description="阶段（已训练任务 1..k）")
    method: Method = Field(description="训练方法")
    normalization: FeatureStats = Field(description="输入标准化统计")

    @property
    def filename(self) -> str:
        return f"{self.method.value}_stage{self.stage}.dfw"


class HistoryRow(BaseModel):
    """训练历史的一行"""

    epoch: int = Field(ge=1, description="轮次（任务内从 1 计）")
    task: int = Field(ge=0, le=3, description="任务编号（联合训练记为 0）")
    train_loss: float = Field(description="该轮批损失均值（含惩罚与正则）")
    val_mse_spacing: float = Field(description="验证集间距 MSE（空验证集为 nan）")
    val_mse_speed: float = Field(description="验证集速度 MSE（空验证集为 nan）")
    collisions: int = Field(default=0, ge=0, description="该轮训练中碰撞事件数")
    backward_events: int = Field(default=0, ge=0, description="该轮训练中出现倒车钳位的事件数")
