"""验证工具模块"""

from typing import Any, Iterable

import numpy as np

from .exceptions import InvalidArgumentError


def validate_positive_integer(value: Any, field_name: str, min_value: int = 1) -> int:
    """验证正整数"""
    if isinstance(value, bool):
        raise InvalidArgumentError(
            f"{field_name} must be an integer", field=field_name, value=value
        )
    try:
        int_value = int(value)
    except (ValueError, TypeError):
        raise InvalidArgumentError(
            f"{field_name} must be an integer", field=field_name, value=value
        )
    if int_value != value and not isinstance(value, str):
        raise InvalidArgumentError(
            f"{field_name} must be an integer", field=field_name, value=value
        )
    if int_value < min_value:
        raise InvalidArgumentError(
            f"{field_name} must be >= {min_value}", field=field_name, value=value
        )
    return int_value


def validate_positive_float(value: Any, field_name: str) -> float:
    """验证正实数"""
    try:
        float_value = float(value)
    except (ValueError, TypeError):
        raise InvalidArgumentError(
            f"{field_name} must be a number", field=field_name, value=value
        )
    if not np.isfinite(float_value) or float_value <= 0.0:
        raise InvalidArgumentError(
            f"{field_name} must be a finite number > 0", field=field_name, value=value
        )
    return float_value


def validate_choice(value: Any, field_name: str, choices: Iterable[str]) -> str:
    """验证枚举取值"""
    valid = list(choices)
    if value not in valid:
        raise InvalidArgumentError(
            f"{field_name} must be one of {valid}", field=field_name, value=value
        )
    return value
