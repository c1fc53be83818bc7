"""任务划分测试"""

import math

import numpy as np
import pytest

from src.data.tasks import (mean_fv_speed, partition, percentile,
                            speed_distribution, split_tasks)
from src.utils.exceptions import InvalidArgumentError


@pytest.fixture
def nine_events(event_factory):
    """平均跟驰速度为 1..9 m/s 的 9 个事件"""
    return [
        event_factory(f"s{speed}", fv_speed=np.full(30, float(speed)), lv_speed=np.full(30, float(speed)))
        for speed in range(1, 10)
    ]


class TestSplitTasks:
    """任务划分测试类"""

    def test_mean_fv_speed(self, event_factory):
        """测试跟驰车平均速度"""
        event = event_factory("m", fv_speed=[8.0, 12.0], lv_speed=[8.0, 12.0])
        assert mean_fv_speed(event) == 10.0

    def test_percentile_interpolates(self):
        """测试分位数线性插值"""
        assert percentile(range(1, 10), 50.0) == 5.0
        assert percentile(range(1, 10), 33.3) == pytest.approx(3.664)

    def test_three_per_task(self, nine_events):
        """测试 9 个事件每个任务 3 个且任务 1 最快"""
        tasks = split_tasks(nine_events, seed=0)
        ids = [{e.event_id for e in task.events} for task in tasks]
        assert ids[0] == {"s7", "s8", "s9"}
        assert ids[1] == {"s4", "s5", "s6"}
        assert ids[2] == {"s1", "s2", "s3"}
        assert math.isinf(tasks[0].speed_range.high)
        assert tasks[2].speed_range.low_inclusive

    def test_partition_is_disjoint_and_complete(self, synthetic_events):
        """测试任务内切分互不相交且覆盖全部事件"""
        train, val, test = partition(synthetic_events, seed=5, task_id=1)
        ids = [e.event_id for e in train + val + test]
        assert sorted(ids) == sorted(e.event_id for e in synthetic_events)
        assert len(train) == 4

    def test_deterministic(self, nine_events):
        """测试同一种子划分相同"""
        a = split_tasks(nine_events, seed=4)
        b = split_tasks(nine_events, seed=4)
        for x, y in zip(a, b):
            assert [e.event_id for e in x.train] == [e.event_id for e in y.train]

    def test_identical_speeds(self, event_factory):
        """测试平均速度完全相同时无法划分"""
        events = [event_factory(f"same{k}") for k in range(9)]
        with pytest.raises(InvalidArgumentError):
            split_tasks(events, seed=0)

    def test_too_few_events(self, nine_events):
        """测试少于 9 个事件报错"""
        with pytest.raises(InvalidArgumentError):
            split_tasks(nine_events[:8], seed=0)

    def test_speed_distribution(self, nine_events):
        """测试速度分布表"""
        frame = speed_distribution(split_tasks(nine_events, seed=0))
        assert list(frame.columns) == ["task", "split", "event_id", "mean_fv_speed"]
        assert len(frame) == 9
        assert set(frame.loc[frame["task"] == 1, "mean_fv_speed"]) == {7.0, 8.0, 9.0}


def sorted_interpolation(values, q: float) -> float:
    """排序后在相邻次序统计量之间线性插值"""
    ordered = sorted(values)
    position = (len(ordered) - 1) * q / 100.0
    lower = math.floor(position)
    upper = min(lower + 1, len(ordered) - 1)
    return ordered[lower] + (ordered[upper] - ordered[lower]) * (position - lower)


class TestPercentile:
    """分位数测试类"""

    def test_matches_sorted_interpolation(self):
        """测试随机输入上与排序插值结果一致"""
        rng = np.random.default_rng(7)
        for _ in range(100):
            values = rng.uniform(0.0, 30.0, size=int(rng.integers(1, 50))).tolist()
            q = float(rng.uniform(0.0, 100.0))
            assert percentile(values, q) == pytest.approx(sorted_interpolation(values, q), rel=1e-12, abs=1e-12)

    def test_endpoints(self):
        """测试 0 与 100 分位为最小、最大值"""
        values = [4.0, 1.0, 9.0, 3.0]
        assert percentile(values, 0.0) == 1.0
        assert percentile(values, 100.0) == 9.0

    @pytest.mark.parametrize("values,q", [([], 50.0), ([1.0], -1.0), ([1.0], 100.5)])
    def test_invalid(self, values, q):
        """测试空序列或 q 越界报错"""
        with pytest.raises(InvalidArgumentError):
            percentile(values, q)
