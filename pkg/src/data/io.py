"""事件文件读写

JSON Lines：每行一个事件
    {"event_id": str, "dt": float, "lv_speed": [...], "fv_speed": [...], "spacing": [...]}
任务文件额外带 "split": "train" | "val" | "test"。

CSV 长表（用于导入外部提取的真实事件）：
    event_id,t,lv_speed,fv_speed,spacing
"""

import json
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import ValidationError

from ..models.event import Event, TaskSet
from ..utils.exceptions import (ArtifactIOError, EventParseError,
                                InvalidArgumentError, InvalidInputError)
from ..utils.logger import get_logger
from .tasks import SPLITS, task_ranges

logger = get_logger(__name__)

PathLike = Union[str, Path]
CSV_COLUMNS = ["event_id", "t", "lv_speed", "fv_speed", "spacing"]
MANIFEST_NAME = "manifest.json"
DT_TOLERANCE = 1e-6


def task_filename(task_id: int) -> str:
    return f"task{task_id}.jsonl"


def validate_event(event: Event, horizon: Optional[int] = None) -> Event:
    """检查事件不变量；给出 horizon 时还要求步数 ≥ horizon+2"""
    try:
        checked = Event.model_validate(event.model_dump())
    except ValidationError as e:
        raise InvalidInputError(f"event {event.event_id!r}: {_first_error(e)}", field="event")
    if horizon is not None and len(checked) < horizon + 2:
        raise InvalidArgumentError(
            f"event {event.event_id!r} has {len(checked)} steps, needs at least {horizon + 2}",
            field="event",
            value=event.event_id,
        )
    return checked


def _first_error(error: ValidationError) -> str:
    first = error.errors()[0]
    loc = ".".join(str(p) for p in first.get("loc", ()))
    message = str(first.get("msg", error)).removeprefix("Value error, ")
    return f"{loc}: {message}" if loc else message


def event_record(event: Event, split: Optional[str] = None) -> Dict[str, Any]:
    record: Dict[str, Any] = {
        "event_id": event.event_id,
        "dt": event.dt,
        "lv_speed": event.lv_speed.tolist(),
        "fv_speed": event.fv_speed.tolist(),
        "spacing": event.spacing.tolist(),
    }
    if split is not None:
        record["split"] = split
    return record


def _write_text(path: Path, text: str) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as e:
        raise ArtifactIOError(f"cannot write {path}: {e}", str(path))
    return path


def _read_text(path: Path) -> str:
    if not path.exists():
        raise ArtifactIOError(f"file not found: {path}", str(path))
    try:
        return path.read_text(encoding="utf-8")
    except OSError as e:
        raise ArtifactIOError(f"cannot read {path}: {e}", str(path))


def save_events(
    events: Sequence[Event], path: PathLike, splits: Optional[Sequence[str]] = None
) -> Path:
    """保存事件；.csv 后缀写长表，其余写 JSON Lines"""
    target = Path(path)
    if target.suffix.lower() == ".csv":
        if splits is not None:
            raise InvalidArgumentError("CSV event files carry no split tags", field="splits")
        return _save_csv(events, target)
    tags = list(splits) if splits is not None else [None] * len(events)
    lines = [json.dumps(event_record(e, s)) for e, s in zip(events, tags)]
    text = "".join(line + "\n" for line in lines)
    written = _write_text(target, text)
    logger.info(f"Wrote {len(events)} events to {target}")
    return written


def load_tagged_events(
    path: PathLike, horizon: Optional[int] = None
) -> List[Tuple[Event, Optional[str]]]:
    """读取 JSON Lines 事件及其可选 split 标签"""
    source = Path(path)
    if source.suffix.lower() == ".csv":
        return [(e, None) for e in _load_csv(source, horizon)]

    loaded: List[Tuple[Event, Optional[str]]] = []
    seen: Dict[str, int] = {}
    file_dt: Optional[float] = None
    for number, line in enumerate(_read_text(source).splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as e:
            raise EventParseError(f"malformed JSON: {e.msg}", str(source), number)
        if not isinstance(record, dict):
            raise EventParseError("each line must be a JSON object", str(source), number)
        event_id = record.get("event_id")
        split = record.pop("split", None)
        if split is not None and split not in SPLITS:
            raise EventParseError(f"unknown split tag {split!r}", str(source), number, event_id)
        try:
            event = Event.model_validate(record)
        except ValidationError as e:
            raise EventParseError(_first_error(e), str(source), number, event_id)
        if event.event_id in seen:
            raise EventParseError(
                f"duplicate event id (first seen on line {seen[event.event_id]})",
                str(source),
                number,
                event.event_id,
            )
        if file_dt is None:
            file_dt = event.dt
        elif abs(event.dt - file_dt) > DT_TOLERANCE * file_dt:
            raise EventParseError(
                f"inconsistent dt {event.dt} (file uses {file_dt})", str(source), number, event.event_id
            )
        if horizon is not None and len(event) < horizon + 2:
            raise EventParseError(
                f"event has {len(event)} steps, needs at least {horizon + 2}",
                str(source),
                number,
                event.event_id,
            )
        seen[event.event_id] = number
        loaded.append((event, split))
    return loaded


def load_events(path: PathLike, horizon: Optional[int] = None) -> List[Event]:
    """读取事件文件（空文件返回空列表）"""
    events = [event for event, _ in load_tagged_events(path, horizon)]
    logger.debug(f"Loaded {len(events)} events from {path}")
    return events


def _save_csv(events: Sequence[Event], target: Path) -> Path:
    frames = [
        pd.DataFrame(
            {
                "event_id": e.event_id,
                "t": np.arange(len(e)) * e.dt,
                "lv_speed": e.lv_speed,
                "fv_speed": e.fv_speed,
                "spacing": e.spacing,
            },
            columns=CSV_COLUMNS,
        )
        for e in events
    ]
    frame = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=CSV_COLUMNS)
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(target, index=False, float_format="%.17g", lineterminator="\n")
    except OSError as e:
        raise ArtifactIOError(f"cannot write {target}: {e}", str(target))
    logger.info(f"Wrote {len(events)} events to {target}")
    return target


def _load_csv(source: Path, horizon: Optional[int]) -> List[Event]:
    text = _read_text(source)
    if not text.strip():
        return []
    try:
        frame = pd.read_csv(
            source, dtype={"event_id": str}, skip_blank_lines=False, float_precision="round_trip"
        )
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise EventParseError(f"malformed CSV: {e}", str(source))
    missing = [c for c in CSV_COLUMNS if c not in frame.columns]
    if missing:
        raise EventParseError(f"missing columns {missing}", str(source), 1)

    # 表头是第 1 行
    frame["_line"] = np.arange(len(frame)) + 2
    frame = frame.dropna(how="all", subset=CSV_COLUMNS)
    numeric = CSV_COLUMNS[1:]
    for column in numeric:
        frame[column] = pd.to_numeric(frame[column], errors="coerce")
    for _, row in frame.iterrows():
        line = int(row["_line"])
        event_id = row["event_id"] if isinstance(row["event_id"], str) else None
        if event_id is None or not event_id.strip():
            raise EventParseError("missing event_id", str(source), line)
        bad = [c for c in numeric if not math.isfinite(row[c])]
        if bad:
            raise EventParseError(f"non-numeric or missing {bad}", str(source), line, event_id)
        if row["spacing"] <= 0.0:
            raise EventParseError(f"spacing must be > 0, got {row['spacing']}", str(source), line, event_id)
        if row["lv_speed"] < 0.0 or row["fv_speed"] < 0.0:
            raise EventParseError("speeds must be >= 0", str(source), line, event_id)

    events: List[Event] = []
    file_dt: Optional[float] = None
    for event_id, group in frame.groupby("event_id", sort=False):
        t = group["t"].to_numpy()
        lines = group["_line"].to_numpy()
        first_line = int(lines[0])
        if len(t) < 2:
            raise EventParseError("event needs at least two rows to define dt", str(source), first_line, event_id)
        steps = np.diff(t)
        dt = float(steps[0])
        if dt <= 0.0:
            raise EventParseError("t must be strictly increasing", str(source), int(lines[1]), event_id)
        off = np.flatnonzero(np.abs(steps - dt) > DT_TOLERANCE * max(dt, 1.0))
        if off.size:
            raise EventParseError(
                f"inconsistent dt within event (expected {dt})", str(source), int(lines[off[0] + 1]), event_id
            )
        if file_dt is None:
            file_dt = dt
        elif abs(dt - file_dt) > DT_TOLERANCE * max(file_dt, 1.0):
            raise EventParseError(
                f"inconsistent dt {dt} (file uses {file_dt})", str(source), first_line, event_id
            )
        if horizon is not None and len(t) < horizon + 2:
            raise EventParseError(
                f"event has {len(t)} steps, needs at least {horizon + 2}", str(source), first_line, event_id
            )
        events.append(
            Event(
                event_id=str(event_id),
                dt=file_dt,
                lv_speed=group["lv_speed"].to_numpy(),
                fv_speed=group["fv_speed"].to_numpy(),
                spacing=group["spacing"].to_numpy(),
            )
        )
    return events


def write_task_file(task: TaskSet, path: PathLike) -> Path:
    """写出单个任务集（每行带 split 标签）"""
    events: List[Event] = []
    tags: List[str] = []
    for split in SPLITS:
        members = getattr(task, split)
        events.extend(members)
        tags.extend([split] * len(members))
    return save_events(events, path, tags)


def write_json(data: Dict[str, Any], path: PathLike) -> Path:
    """写出缩进、键排序的 JSON 清单"""
    return _write_text(Path(path), json.dumps(data, indent=2, sort_keys=True) + "\n")


def read_json(path: PathLike) -> Dict[str, Any]:
    source = Path(path)
    try:
        data = json.loads(_read_text(source))
    except json.JSONDecodeError as e:
        raise EventParseError(f"malformed manifest: {e.msg}", str(source), e.lineno)
    if not isinstance(data, dict):
        raise EventParseError("manifest must be a JSON object", str(source))
    return data


def write_manifest(manifest: Dict[str, Any], out_dir: PathLike) -> Path:
    return write_json(manifest, Path(out_dir) / MANIFEST_NAME)


def read_manifest(tasks_dir: PathLike) -> Dict[str, Any]:
    return read_json(Path(tasks_dir) / MANIFEST_NAME)


def load_tasks(tasks_dir: PathLike, horizon: Optional[int] = None) -> Tuple[TaskSet, TaskSet, TaskSet]:
    """读取 split 输出目录中的三个任务集"""
    root = Path(tasks_dir)
    manifest = read_manifest(root)
    try:
        p_low = float(manifest["boundaries"]["p33_3"])
        p_high = float(manifest["boundaries"]["p66_7"])
    except (KeyError, TypeError, ValueError):
        raise EventParseError("manifest lacks percentile boundaries", str(root / MANIFEST_NAME))
    ranges = task_ranges(p_low, p_high)

    tasks = []
    for task_id, speed_range in enumerate(ranges, start=1):
        path = root / task_filename(task_id)
        members: Dict[str, List[Event]] = {split: [] for split in SPLITS}
        for number, (event, split) in enumerate(load_tagged_events(path, horizon), start=1):
            if split is None:
                raise EventParseError("task file rows need a split tag", str(path), number, event.event_id)
            members[split].append(event)
        try:
            tasks.append(TaskSet(task_id=task_id, speed_range=speed_range, **members))
        except ValidationError as e:
            raise EventParseError(_first_error(e), str(path))
    return tasks[0], tasks[1], tasks[2]
