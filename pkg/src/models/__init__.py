"""数据模型模块"""

from .evaluation import (EventMetrics, FinalSummary, ForgettingScore,
                         MetricCell, StageCell, StageMatrix)
from .event import Event, GeneratorSummary, IdmParams, SpeedRange, TaskSet
from .network import (FeatureWindow, GradVector, ParamLayout, ParamVector,
                      param_count)
from .regularization import (Accumulation, ImportanceKind, ImportanceVector,
                             RegConfig)
from .simulation import SimState, SimTrajectory
from .training import (METHOD_ORDER, Checkpoint, FeatureStats, HistoryRow,
                       Method, TrainConfig)

__all__ = [
    "Accumulation",
    "Checkpoint",
    "Event",
    "EventMetrics",
    "FeatureStats",
    "FeatureWindow",
    "FinalSummary",
    "ForgettingScore",
    "GeneratorSummary",
    "GradVector",
    "HistoryRow",
    "IdmParams",
    "ImportanceKind",
    "ImportanceVector",
    "METHOD_ORDER",
    "MetricCell",
    "Method",
    "ParamLayout",
    "ParamVector",
    "RegConfig",
    "SimState",
    "SimTrajectory",
    "SpeedRange",
    "StageCell",
    "StageMatrix",
    "TaskSet",
    "TrainConfig",
    "param_count",
]
