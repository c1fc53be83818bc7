"""训练模块：闭环损失、Adam 与增量课程"""

from .loss import BatchLoss, batch_event_loss, event_loss
from .normalization import fit_feature_stats
from .optimizer import AdamState, adam_step
from .trainer import (CurriculumResult, Trainer, history_frame,
                      run_curriculum, train_task, write_history)

__all__ = [
    "AdamState",
    "BatchLoss",
    "CurriculumResult",
    "Trainer",
    "adam_step",
    "batch_event_loss",
    "event_loss",
    "fit_feature_stats",
    "history_frame",
    "run_curriculum",
    "train_task",
    "write_history",
]
