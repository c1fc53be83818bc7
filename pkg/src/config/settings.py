"""配置设置模块"""

import os
from pathlib import Path
from typing import Any, Dict, Optional

import yaml
from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from ..utils.exceptions import ConfigurationError

LOG_LEVELS = ("TRACE", "DEBUG", "INFO", "SUCCESS", "WARNING", "ERROR", "CRITICAL")


class Settings(BaseSettings):
    """应用程序配置设置

    环境变量前缀为 DRIFTFOLLOW_，例如 DRIFTFOLLOW_SEED、DRIFTFOLLOW_LOG_LEVEL。
    """

    model_config = SettingsConfigDict(
        env_prefix="DRIFTFOLLOW_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # 日志配置
    log_level: str = Field(default="INFO", description="日志级别")
    log_file: Optional[str] = Field(default=None, description="日志文件路径")

    # 运行配置
    seed: int = Field(default=42, description="命令行未给出 --seed 时使用的随机种子")
    jobs: int = Field(default=0, description="工作线程数，0 表示可用核心数")

    # 配置文件路径
    config_path: str = Field(
        default="config/config.yaml", description="训练配置文件路径"
    )

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        level = v.upper()
        if level not in LOG_LEVELS:
            raise ValueError(f"log_level must be one of {LOG_LEVELS}")
        return level

    @field_validator("jobs")
    @classmethod
    def validate_jobs(cls, v: int) -> int:
        if v < 0:
            raise ValueError("jobs must be >= 0")
        return v

    @classmethod
    def load_from_yaml(cls, config_path: str) -> "Settings":
        """从 YAML 文件加载配置

        只取本类声明的字段；已由环境变量给出的字段以环境变量为准。
        """
        config_file = Path(config_path)
        if not config_file.exists():
            return cls()

        data = read_yaml_mapping(config_file)
        known = {
            key: value
            for key, value in data.items()
            if key in cls.model_fields and env_override(key) is None
        }
        return cls(**known)


def env_override(key: str) -> Optional[str]:
    """返回 DRIFTFOLLOW_<KEY> 环境变量的值（未设置时为 None）"""
    return os.environ.get(f"DRIFTFOLLOW_{key.upper()}")


def read_yaml_mapping(path: Path) -> Dict[str, Any]:
    """读取平铺的 YAML 键值文件"""
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except OSError as e:
        raise ConfigurationError(f"cannot read config file {path}: {e}")
    except yaml.YAMLError as e:
        raise ConfigurationError(f"malformed config file {path}: {e}")
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigurationError(f"config file {path} must contain a key-value mapping")
    return data
