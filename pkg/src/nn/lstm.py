"""单层 LSTM 回归器：10 步特征窗口 → 标量加速度

前向、反向都支持批量输入 (B, H, 4)；单个窗口 (H, 4) 视为 B=1 并在输出时去掉批维度。
所有运算为 float64。
"""

from typing import Optional, Tuple, Union

import numpy as np
from scipy.special import expit

from ..models.network import (DEFAULT_HORIZON, N_FEATURES, FeatureWindow,
                              GradVector, ParamLayout, ParamVector, param_count)
from ..utils.exceptions import (InvalidArgumentError, InvalidInputError,
                                InvalidStateError)
from ..utils.validators import validate_positive_integer

# 输出饱和幅值 (m/s²)：accel = 8·tanh(raw/8)
ACCEL_LIMIT = 8.0
# tanh 在 float64 下会舍入到 1，输出再夹到开区间内
_ACCEL_BOUND = np.nextafter(ACCEL_LIMIT, 0.0)

WindowLike = Union[FeatureWindow, np.ndarray]


class ForwardCache:
    """前向中间量，供精确反向传播使用"""

    __slots__ = (
        "params",
        "inputs",
        "gates",
        "cells",
        "cell_tanh",
        "hiddens",
        "raw",
        "squeeze",
        "released",
    )

    def __init__(
        self,
        params: ParamVector,
        inputs: np.ndarray,
        gates: np.ndarray,
        cells: np.ndarray,
        cell_tanh: np.ndarray,
        hiddens: np.ndarray,
        raw: np.ndarray,
        squeeze: bool,
    ):
        self.params = params
        self.inputs = inputs  # (T, B, 4)
        self.gates = gates  # (T, B, 4H) 激活后的 i, f, g, o
        self.cells = cells  # (T+1, B, H)，cells[0] 为零初始状态
        self.cell_tanh = cell_tanh  # (T, B, H)
        self.hiddens = hiddens  # (T+1, B, H)
        self.raw = raw  # (B,)
        self.squeeze = squeeze
        self.released = False

    @property
    def batch_size(self) -> int:
        return int(self.raw.shape[0])

    def release(self) -> None:
        """释放中间量；之后再反向传播会报错"""
        self.inputs = self.gates = self.cells = None
        self.cell_tanh = self.hiddens = None
        self.released = True


def init_params(hidden_size: int, seed: int, horizon: int = DEFAULT_HORIZON) -> ParamVector:
    """初始化参数

    权重取自 U[-k, k]，k = 1/sqrt(hidden_size)；遗忘门偏置为 1，其余偏置为 0。
    """
    if isinstance(hidden_size, bool) or not isinstance(hidden_size, (int, np.integer)) or hidden_size < 1:
        raise InvalidArgumentError(
            "hidden_size must be a positive integer", field="hidden_size", value=hidden_size
        )
    validate_positive_integer(horizon, "horizon")
    layout = ParamLayout(hidden_size=int(hidden_size))
    k = 1.0 / np.sqrt(hidden_size)
    rng = np.random.default_rng(seed)
    values = rng.uniform(-k, k, size=layout.size)
    slices = layout.slices
    values[slices["b_gates"]] = 0.0
    values[slices["b_head"]] = 0.0
    values[layout.forget_bias_slice()] = 1.0
    return ParamVector(values=values, hidden_size=int(hidden_size), horizon=int(horizon))


def _as_batch(window: WindowLike) -> Tuple[np.ndarray, bool]:
    rows = window.rows if isinstance(window, FeatureWindow) else window
    array = np.asarray(rows, dtype=np.float64)
    if array.ndim == 2:
        array, squeeze = array[None, :, :], True
    elif array.ndim == 3:
        squeeze = False
    else:
        raise InvalidInputError(f"window must be (H, 4) or (B, H, 4), got {array.shape}")
    if array.shape[2] != N_FEATURES or array.shape[1] < 1:
        raise InvalidInputError(f"window must have {N_FEATURES} feature columns, got {array.shape}")
    if not np.all(np.isfinite(array)):
        raise InvalidInputError("window contains non-finite values", field="window")
    return array, squeeze


def forward(window: WindowLike, params: ParamVector) -> Tuple[Union[float, np.ndarray], ForwardCache]:
    """LSTM 前向：零初始状态递推 H 步，末隐状态经仿射输出头后平滑饱和到 ±8 m/s²

    Args:
        window: (H, 4) 或 (B, H, 4) 原始物理单位特征
        params: 参数向量

    Returns:
        (加速度, 缓存)；单窗口时加速度为 float
    """
    batch, squeeze = _as_batch(window)
    p = params.unpack()
    w_input, w_recurrent, b_gates = p["w_input"], p["w_recurrent"], p["b_gates"]
    h_size = params.hidden_size
    n_batch, n_steps, _ = batch.shape

    inputs = np.ascontiguousarray(batch.transpose(1, 0, 2))
    projected = inputs @ w_input.T + b_gates  # (T, B, 4H)

    gates = np.empty((n_steps, n_batch, 4 * h_size))
    cells = np.zeros((n_steps + 1, n_batch, h_size))
    cell_tanh = np.empty((n_steps, n_batch, h_size))
    hiddens = np.zeros((n_steps + 1, n_batch, h_size))

    for t in range(n_steps):
        z = projected[t] + hiddens[t] @ w_recurrent.T
        act = gates[t]
        act[:] = expit(z)
        act[:, 2 * h_size : 3 * h_size] = np.tanh(z[:, 2 * h_size : 3 * h_size])
        i_gate = act[:, :h_size]
        f_gate = act[:, h_size : 2 * h_size]
        g_cand = act[:, 2 * h_size : 3 * h_size]
        o_gate = act[:, 3 * h_size :]
        cells[t + 1] = f_gate * cells[t] + i_gate * g_cand
        cell_tanh[t] = np.tanh(cells[t + 1])
        hiddens[t + 1] = o_gate * cell_tanh[t]

    raw = hiddens[n_steps] @ p["w_head"] + p["b_head"][0]
    accel = np.clip(ACCEL_LIMIT * np.tanh(raw / ACCEL_LIMIT), -_ACCEL_BOUND, _ACCEL_BOUND)
    cache = ForwardCache(params, inputs, gates, cells, cell_tanh, hiddens, raw, squeeze)
    if squeeze:
        return float(accel[0]), cache
    return accel, cache


def _backprop(
    cache: ForwardCache, upstream, per_sample: bool, want_inputs: bool
) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    if not isinstance(cache, ForwardCache) or cache.released:
        raise InvalidStateError("forward cache was released or is not a ForwardCache", "cache")
    params = cache.params
    h_size = params.hidden_size
    n_steps, n_batch, _ = cache.inputs.shape
    if cache.gates.shape[2] != 4 * h_size or len(params) != param_count(h_size):
        raise InvalidStateError("forward cache does not match its parameter layout", "cache")

    up = np.asarray(upstream, dtype=np.float64)
    if up.ndim == 0:
        up = np.full(n_batch, float(up))
    up = up.reshape(-1)
    if up.shape[0] != n_batch:
        raise InvalidArgumentError(
            f"upstream has {up.shape[0]} entries for a batch of {n_batch}", field="upstream"
        )

    p = params.unpack()
    w_input, w_recurrent, w_head = p["w_input"], p["w_recurrent"], p["w_head"]

    sat = np.tanh(cache.raw / ACCEL_LIMIT)
    d_raw = up * (1.0 - sat * sat)  # (B,)
    h_last = cache.hiddens[n_steps]

    d_hidden = d_raw[:, None] * w_head[None, :]
    d_cell = np.zeros((n_batch, h_size))
    d_gates = np.empty((n_steps, n_batch, 4 * h_size))

    for t in range(n_steps - 1, -1, -1):
        act = cache.gates[t]
        i_gate = act[:, :h_size]
        f_gate = act[:, h_size : 2 * h_size]
        g_cand = act[:, 2 * h_size : 3 * h_size]
        o_gate = act[:, 3 * h_size :]
        tc = cache.cell_tanh[t]

        d_out = d_hidden * tc
        d_cell = d_cell + d_hidden * o_gate * (1.0 - tc * tc)

        dz = d_gates[t]
        dz[:, :h_size] = d_cell * g_cand * i_gate * (1.0 - i_gate)
        dz[:, h_size : 2 * h_size] = d_cell * cache.cells[t] * f_gate * (1.0 - f_gate)
        dz[:, 2 * h_size : 3 * h_size] = d_cell * i_gate * (1.0 - g_cand * g_cand)
        dz[:, 3 * h_size :] = d_out * o_gate * (1.0 - o_gate)

        d_cell = d_cell * f_gate
        d_hidden = dz @ w_recurrent

    slices = params.layout.slices
    h_prev = cache.hiddens[:n_steps]
    if per_sample:
        # (B, 4H, T) @ (B, T, ·) → 每个样本各自的梯度
        dz_b = d_gates.transpose(1, 2, 0)
        grads = np.empty((n_batch, len(params)))
        grads[:, slices["w_input"]] = (dz_b @ cache.inputs.transpose(1, 0, 2)).reshape(n_batch, -1)
        grads[:, slices["w_recurrent"]] = (dz_b @ h_prev.transpose(1, 0, 2)).reshape(n_batch, -1)
        grads[:, slices["b_gates"]] = d_gates.sum(axis=0)
        grads[:, slices["w_head"]] = d_raw[:, None] * h_last
        grads[:, slices["b_head"]] = d_raw[:, None]
    else:
        grads = np.empty(len(params))
        grads[slices["w_input"]] = np.tensordot(d_gates, cache.inputs, axes=([0, 1], [0, 1])).ravel()
        grads[slices["w_recurrent"]] = np.tensordot(d_gates, h_prev, axes=([0, 1], [0, 1])).ravel()
        grads[slices["b_gates"]] = d_gates.sum(axis=(0, 1))
        grads[slices["w_head"]] = d_raw @ h_last
        grads[slices["b_head"]] = d_raw.sum()

    d_inputs = None
    if want_inputs:
        d_inputs = (d_gates @ w_input).transpose(1, 0, 2)  # (B, T, 4)
    return grads, d_inputs


def backward(cache: ForwardCache, upstream: Union[float, np.ndarray] = 1.0) -> GradVector:
    """反向传播：返回 upstream · d(accel)/dθ（批量时对样本求和）"""
    grads, _ = _backprop(cache, upstream, per_sample=False, want_inputs=False)
    return GradVector(values=grads)


def backward_with_inputs(
    cache: ForwardCache, upstream: Union[float, np.ndarray]
) -> Tuple[GradVector, np.ndarray]:
    """反向传播，同时返回对输入窗口的梯度 (B, H, 4)"""
    grads, d_inputs = _backprop(cache, upstream, per_sample=False, want_inputs=True)
    return GradVector(values=grads), d_inputs


def per_sample_backward(
    cache: ForwardCache, upstream: Union[float, np.ndarray], want_inputs: bool = False
) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """逐样本参数梯度 (B, P)，可选输入梯度"""
    return _backprop(cache, upstream, per_sample=True, want_inputs=want_inputs)
