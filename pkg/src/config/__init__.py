"""配置模块"""

from .settings import LOG_LEVELS, Settings, env_override, read_yaml_mapping

__all__ = [
    "LOG_LEVELS",
    "Settings",
    "env_override",
    "read_yaml_mapping",
]
