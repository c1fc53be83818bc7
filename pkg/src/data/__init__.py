"""事件数据模块：文件读写、IDM 合成数据与任务划分"""

from .generator import (REGIME_PROFILES, REGIMES, generate_dataset,
                        generate_events, generator_manifest)
from .idm import equilibrium_gap, idm_accel
from .io import (load_events, load_tasks, read_json, read_manifest,
                 save_events, task_filename, validate_event, write_json,
                 write_manifest, write_task_file)
from .tasks import mean_fv_speed, percentile, speed_distribution, split_tasks

__all__ = [
    "REGIMES",
    "REGIME_PROFILES",
    "equilibrium_gap",
    "generate_dataset",
    "generate_events",
    "generator_manifest",
    "idm_accel",
    "load_events",
    "load_tasks",
    "mean_fv_speed",
    "percentile",
    "read_json",
    "read_manifest",
    "save_events",
    "speed_distribution",
    "split_tasks",
    "task_filename",
    "validate_event",
    "write_json",
    "write_manifest",
    "write_task_file",
]
