"""异常定义模块"""

from typing import Any, Dict, Optional


class DriftFollowException(Exception):
    """基础异常类"""

    exit_code: int = 1

    def __init__(
        self,
        message: str,
        code: Optional[str] = None,
        details: Optional[Dict[str, Any]] = None,
    ):
        super().__init__(message)
        self.message = message
        self.code = code
        self.details = details or {}


class InvalidArgumentError(DriftFollowException):
    """参数错误"""

    exit_code = 2

    def __init__(
        self, message: str, field: Optional[str] = None, value: Optional[Any] = None
    ):
        super().__init__(message, code="INVALID_ARGUMENT")
        self.field = field
        self.value = value


class InvalidInputError(DriftFollowException):
    """输入数据错误（非有限值等）"""

    exit_code = 2

    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(message, code="INVALID_INPUT")
        self.field = field


class InvalidStateError(DriftFollowException):
    """状态错误（过期缓存、缺失检查点等）"""

    exit_code = 5

    def __init__(self, message: str, state: Optional[str] = None):
        super().__init__(message, code="INVALID_STATE")
        self.state = state


class ConfigurationError(DriftFollowException):
    """配置错误"""

    exit_code = 2

    def __init__(self, message: str, config_key: Optional[str] = None):
        super().__init__(message, code="CONFIGURATION_ERROR")
        self.config_key = config_key


class EventParseError(DriftFollowException):
    """事件文件解析错误"""

    exit_code = 3

    def __init__(
        self,
        message: str,
        path: Optional[str] = None,
        line: Optional[int] = None,
        event_id: Optional[str] = None,
    ):
        location = []
        if path:
            location.append(str(path))
        if line is not None:
            location.append(f"line {line}")
        if event_id:
            location.append(f"event {event_id!r}")
        prefix = f"{', '.join(location)}: " if location else ""
        super().__init__(
            f"{prefix}{message}",
            code="PARSE_ERROR",
            details={"path": path, "line": line, "event_id": event_id},
        )
        self.path = path
        self.line = line
        self.event_id = event_id


class ArtifactIOError(DriftFollowException):
    """文件读写错误"""

    exit_code = 3

    def __init__(self, message: str, path: Optional[str] = None):
        super().__init__(message, code="IO_ERROR", details={"path": path})
        self.path = path


class NumericError(DriftFollowException):
    """数值错误（训练中出现非有限损失）"""

    exit_code = 4

    def __init__(self, message: str, quantity: Optional[str] = None):
        super().__init__(message, code="NUMERIC_ERROR")
        self.quantity = quantity


class MissingArtifactError(DriftFollowException):
    """缺少所需的产物（检查点等）"""

    exit_code = 5

    def __init__(self, message: str, path: Optional[str] = None):
        super().__init__(message, code="MISSING_ARTIFACT", details={"path": path})
        self.path = path
