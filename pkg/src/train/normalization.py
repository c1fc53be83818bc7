"""输入特征标准化统计"""

from typing import Sequence

import numpy as np

from ..models.event import Event
from ..models.training import FeatureStats
from ..sim.rollout import recorded_windows
from ..utils.exceptions import InvalidArgumentError

# 近似常数的特征不缩放
MIN_STD = 1e-8


def fit_feature_stats(events: Sequence[Event], horizon: int) -> FeatureStats:
    """在训练窗口（记录数据）上计算逐特征均值与标准差"""
    windows = recorded_windows(events, horizon)
    if windows.shape[0] == 0:
        raise InvalidArgumentError("no training windows to fit feature statistics", field="events")
    rows = windows.reshape(-1, windows.shape[2])
    std = rows.std(axis=0)
    return FeatureStats(mean=rows.mean(axis=0), std=np.where(std < MIN_STD, 1.0, std))
