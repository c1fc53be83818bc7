"""闭环训练损失：计分步上的间距与速度均方误差 + 碰撞/倒车惩罚"""

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from ..models.event import Event
from ..models.network import GradVector
from ..models.training import FeatureStats, TrainConfig
from ..sim.rollout import (ClosedLoopEngine, ControllerLike, LstmController,
                           as_controller)


@dataclass
class BatchLoss:
    """一批事件的逐事件损失"""

    values: np.ndarray
    mse: np.ndarray
    collided: np.ndarray
    clamped: np.ndarray
    grads: Optional[np.ndarray] = None

    @property
    def mean_value(self) -> float:
        return float(np.mean(self.values))

    def mean_grad(self) -> np.ndarray:
        # 固定事件顺序求和
        return self.grads.sum(axis=0) / self.grads.shape[0]


def batch_event_loss(
    params: ControllerLike,
    events: Sequence[Event],
    cfg: TrainConfig,
    stats: Optional[FeatureStats] = None,
    with_grad: bool = True,
) -> BatchLoss:
    """批量计算逐事件训练损失

    推演在碰撞处截断；惩罚项为常数，不产生梯度。
    """
    controller = as_controller(params, stats)
    with_grad = with_grad and isinstance(controller, LstmController)
    engine = ClosedLoopEngine(
        events, cfg.dt, cfg.horizon, stop_on_collision=True, chunk=cfg.rollout_chunk
    )
    result = engine.run(controller, with_grad=with_grad)
    mse = (result.se_spacing + result.se_speed) / result.n_scored
    collided = result.collided
    clamped = result.clamp_count > 0
    values = mse + cfg.penalty_weight * collided + cfg.penalty_weight * clamped
    return BatchLoss(
        values=values,
        mse=mse,
        collided=collided,
        clamped=clamped,
        grads=result.mean_grads() if with_grad else None,
    )


def event_loss(
    params: ControllerLike,
    event: Event,
    cfg: TrainConfig,
    stats: Optional[FeatureStats] = None,
) -> Tuple[float, Optional[GradVector], bool]:
    """单个事件的训练损失

    Returns:
        (损失值, 参数梯度（非 LSTM 控制器时为 None）, 是否碰撞)
    """
    loss = batch_event_loss(params, [event], cfg, stats)
    grad = GradVector(values=loss.grads[0]) if loss.grads is not None else None
    return float(loss.values[0]), grad, bool(loss.collided[0])
