"""轨迹对比导出（记录 FV vs 仿真 SV）"""

from pathlib import Path
from typing import Union

import numpy as np
import pandas as pd

from ..models.event import Event
from ..models.simulation import SimTrajectory
from ..utils.exceptions import ArtifactIOError, InvalidArgumentError

TRAJECTORY_COLUMNS = [
    "t",
    "lv_speed",
    "fv_speed_recorded",
    "sv_speed_sim",
    "spacing_recorded",
    "spacing_sim",
    "accel",
]


def trajectory_frame(event: Event, traj: SimTrajectory) -> pd.DataFrame:
    """计分步（预热之后）的逐步对比表"""
    if traj.event_id and traj.event_id != event.event_id:
        raise InvalidArgumentError(
            f"trajectory of {traj.event_id!r} does not belong to event {event.event_id!r}",
            field="traj",
        )
    index = np.arange(traj.start_index, traj.start_index + len(traj))
    return pd.DataFrame(
        {
            "t": index * event.dt,
            "lv_speed": event.lv_speed[index],
            "fv_speed_recorded": event.fv_speed[index],
            "sv_speed_sim": traj.sv_speed,
            "spacing_recorded": event.spacing[index],
            "spacing_sim": traj.spacing,
            "accel": traj.accel,
        },
        columns=TRAJECTORY_COLUMNS,
    )


def write_frame(frame: pd.DataFrame, path: Union[str, Path]) -> Path:
    """以全精度写出 CSV"""
    target = Path(path)
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(target, index=False, float_format="%.17g", lineterminator="\n")
    except OSError as e:
        raise ArtifactIOError(f"cannot write {target}: {e}", str(target))
    return target
