"""闭环仿真模块"""

from .export import trajectory_frame, write_frame
from .kinematics import detect_collision, euler_update, step
from .rollout import (ClosedLoopEngine, ConstantController, LstmController,
                      ReplayController, RolloutBatch, as_controller,
                      recorded_windows, rollout)

__all__ = [
    "ClosedLoopEngine",
    "ConstantController",
    "LstmController",
    "ReplayController",
    "RolloutBatch",
    "as_controller",
    "detect_collision",
    "euler_update",
    "recorded_windows",
    "rollout",
    "step",
    "trajectory_frame",
    "write_frame",
]
