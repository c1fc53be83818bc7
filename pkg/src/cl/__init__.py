"""持续学习正则化模块"""

from .importance import (accumulate, estimate_fisher, estimate_mas_importance,
                         importance_stats)
from .penalty import penalty

__all__ = [
    "accumulate",
    "estimate_fisher",
    "estimate_mas_importance",
    "importance_stats",
    "penalty",
]
