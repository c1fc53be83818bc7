"""检查点 (.dfw) 读写

文件布局（全部小端）：
    b"DFW1" | uint32 hidden_size | uint32 horizon | uint64 参数个数 | float64 参数 ...
之后是可选段，每段为 4 字节标签 + uint64 负载长度 + 负载：
    META  UTF-8 JSON {"method": ..., "stage": ...}
    NORM  8 个 float64（4 个均值、4 个标准差）
    IMPT  uint8 类型(0=fisher, 1=mas) | uint32 tasks_seen | uint64 n | n 个权重 | n 个锚点参数
          阶段 k 的 IMPT 是该阶段训练时使用的正则重要性，阶段 1 与 joint 无此段
"""

import json
import re
import struct
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from ..models.network import ParamVector
from ..models.regularization import ImportanceKind, ImportanceVector
from ..models.training import METHOD_ORDER, Checkpoint, FeatureStats, Method
from ..utils.exceptions import ArtifactIOError, InvalidStateError
from ..utils.logger import get_logger

MAGIC = b"DFW1"
EXTENSION = ".dfw"
_HEADER = struct.Struct("<IIQ")
_SECTION = struct.Struct("<4sQ")
_IMPT_HEADER = struct.Struct("<BIQ")
_KIND_TAGS = {ImportanceKind.FISHER: 0, ImportanceKind.MAS: 1}
_FILENAME = re.compile(r"^(joint|baseline|ewc|mas)_stage([123])\.dfw$")

logger = get_logger(__name__)

PathLike = Union[str, Path]


def _floats(values: np.ndarray) -> bytes:
    return np.asarray(values, dtype="<f8").tobytes()


def encode_params(params: ParamVector) -> bytes:
    """参数向量编码（头部 + 参数）"""
    header = MAGIC + _HEADER.pack(params.hidden_size, params.horizon, len(params))
    return header + _floats(params.values)


def encode_checkpoint(checkpoint: Checkpoint) -> bytes:
    """完整检查点编码"""
    parts = [encode_params(checkpoint.params)]

    meta = json.dumps(
        {"method": checkpoint.method.value, "stage": checkpoint.stage}, sort_keys=True
    ).encode("utf-8")
    parts.append(_SECTION.pack(b"META", len(meta)) + meta)

    norm = _floats(np.concatenate([checkpoint.normalization.mean, checkpoint.normalization.std]))
    parts.append(_SECTION.pack(b"NORM", len(norm)) + norm)

    imp = checkpoint.importance
    if imp is not None:
        payload = (
            _IMPT_HEADER.pack(_KIND_TAGS[imp.kind], imp.tasks_seen, len(imp))
            + _floats(imp.weights)
            + _floats(imp.anchor.values)
        )
        parts.append(_SECTION.pack(b"IMPT", len(payload)) + payload)
    return b"".join(parts)


class _Reader:
    def __init__(self, data: bytes, source: str):
        self.data = data
        self.pos = 0
        self.source = source

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise InvalidStateError(f"{self.source}: truncated checkpoint", "checkpoint")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def floats(self, n: int) -> np.ndarray:
        return np.frombuffer(self.take(8 * n), dtype="<f8").astype(np.float64)

    @property
    def exhausted(self) -> bool:
        return self.pos >= len(self.data)


def decode_params(reader: _Reader) -> ParamVector:
    if reader.take(4) != MAGIC:
        raise InvalidStateError(f"{reader.source}: not a DFW1 checkpoint", "checkpoint")
    hidden_size, horizon, count = _HEADER.unpack(reader.take(_HEADER.size))
    values = reader.floats(count)
    try:
        return ParamVector(values=values, hidden_size=hidden_size, horizon=horizon)
    except ValueError as e:
        raise InvalidStateError(f"{reader.source}: {e}", "checkpoint")


def decode_checkpoint(data: bytes, source: str = "<bytes>") -> Tuple[ParamVector, Dict]:
    """解码为 (参数, 段字典)；段字典键为 meta / norm / importance"""
    reader = _Reader(data, source)
    params = decode_params(reader)
    sections: Dict = {}
    while not reader.exhausted:
        tag, length = _SECTION.unpack(reader.take(_SECTION.size))
        payload = _Reader(reader.take(length), source)
        if tag == b"META":
            sections["meta"] = json.loads(payload.data.decode("utf-8"))
        elif tag == b"NORM":
            values = payload.floats(8)
            sections["norm"] = FeatureStats(mean=values[:4], std=values[4:])
        elif tag == b"IMPT":
            kind_tag, tasks_seen, n = _IMPT_HEADER.unpack(payload.take(_IMPT_HEADER.size))
            kind = {v: k for k, v in _KIND_TAGS.items()}.get(kind_tag)
            if kind is None:
                raise InvalidStateError(f"{source}: unknown importance kind {kind_tag}", "checkpoint")
            weights = payload.floats(n)
            anchor = params.with_values(payload.floats(n))
            sections["importance"] = ImportanceVector(
                weights=weights, anchor=anchor, kind=kind, tasks_seen=tasks_seen
            )
        else:
            logger.warning(f"{source}: skipping unknown section {tag!r}")
    return params, sections


def save_params(params: ParamVector, path: PathLike) -> Path:
    """只保存参数向量"""
    return _write(Path(path), encode_params(params))


def load_params(path: PathLike) -> ParamVector:
    params, _ = decode_checkpoint(_read(Path(path)), str(path))
    return params


def save_checkpoint(checkpoint: Checkpoint, path: PathLike) -> Path:
    """保存检查点；path 为目录（或不带 .dfw 后缀）时使用 <method>_stage<k>.dfw"""
    target = Path(path)
    if target.is_dir() or target.suffix != EXTENSION:
        target = target / checkpoint.filename
    return _write(target, encode_checkpoint(checkpoint))


def load_checkpoint(path: PathLike) -> Checkpoint:
    source = Path(path)
    params, sections = decode_checkpoint(_read(source), str(source))
    meta = sections.get("meta")
    if meta is None or "norm" not in sections:
        raise InvalidStateError(f"{source}: checkpoint lacks META/NORM sections", "checkpoint")
    return Checkpoint(
        params=params,
        importance=sections.get("importance"),
        stage=int(meta["stage"]),
        method=Method(meta["method"]),
        normalization=sections["norm"],
    )


def discover_checkpoints(directory: PathLike) -> List[Checkpoint]:
    """查找目录（及其直接子目录）中的 <method>_stage<k>.dfw，按方法、阶段排序"""
    root = Path(directory)
    if not root.is_dir():
        return []
    found: List[Tuple[int, int, str, Path]] = []
    order = {m.value: i for i, m in enumerate(METHOD_ORDER)}
    candidates = list(root.glob("*" + EXTENSION)) + list(root.glob("*/*" + EXTENSION))
    for entry in candidates:
        match = _FILENAME.match(entry.name)
        if match and entry.is_file():
            found.append((order[match.group(1)], int(match.group(2)), str(entry), entry))
    found.sort()
    checkpoints = [load_checkpoint(path) for *_, path in found]
    logger.debug(f"Discovered {len(checkpoints)} checkpoints in {root}")
    return checkpoints


def _write(path: Path, data: bytes) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(data)
    except OSError as e:
        raise ArtifactIOError(f"cannot write {path}: {e}", str(path))
    return path


def _read(path: Path) -> bytes:
    try:
        return path.read_bytes()
    except OSError as e:
        raise ArtifactIOError(f"cannot read {path}: {e}", str(path))


def find_checkpoint(
    checkpoints: List[Checkpoint], method: Method, stage: int
) -> Optional[Checkpoint]:
    for ckpt in checkpoints:
        if ckpt.method is method and ckpt.stage == stage:
            return ckpt
    return None
