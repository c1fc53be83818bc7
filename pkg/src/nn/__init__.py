"""LSTM 控制器核心模块"""

from .checkpoint import (discover_checkpoints, find_checkpoint, load_checkpoint,
                         load_params, save_checkpoint, save_params)
from .gradcheck import finite_diff_grad, max_relative_error
from .lstm import (ACCEL_LIMIT, ForwardCache, backward, backward_with_inputs,
                   forward, init_params, per_sample_backward)

__all__ = [
    "ACCEL_LIMIT",
    "ForwardCache",
    "backward",
    "backward_with_inputs",
    "discover_checkpoints",
    "finite_diff_grad",
    "find_checkpoint",
    "forward",
    "init_params",
    "load_checkpoint",
    "load_params",
    "max_relative_error",
    "per_sample_backward",
    "save_checkpoint",
    "save_params",
]
