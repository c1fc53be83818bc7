"""有序并行执行工具"""

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def resolve_jobs(jobs: Optional[int]) -> int:
    """解析工作线程数（None 或 0 表示可用核心数）"""
    if not jobs or jobs < 1:
        return max(1, os.cpu_count() or 1)
    return int(jobs)


def ordered_map(fn: Callable[[T], R], items: Sequence[T], jobs: Optional[int] = 1) -> List[R]:
    """并行映射，结果按输入顺序返回

    Args:
        fn: 对单个元素执行的函数（不得修改共享状态）
        items: 输入序列
        jobs: 工作线程数，1 表示串行

    Returns:
        与 items 顺序一致的结果列表
    """
    workers = min(resolve_jobs(jobs), max(1, len(items)))
    if workers == 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def chunked(items: Sequence[T], size: int) -> List[Sequence[T]]:
    """按固定大小切分序列"""
    return [items[i : i + size] for i in range(0, len(items), size)]
