"""合成数据生成测试"""

import numpy as np
import pytest

from src.data.generator import (MIN_SPACING_FLOOR, generate_dataset,
                                generate_events, generator_manifest,
                                regime_counts)
from src.data.io import validate_event
from src.data.tasks import mean_fv_speed
from src.utils.exceptions import InvalidArgumentError


class TestGenerator:
    """IDM 合成事件测试类"""

    @pytest.mark.slow
    def test_high_regime(self):
        """测试高速工况 100 个事件满足不变量且平均速度 > 9 m/s"""
        events = generate_events("high", 100, 0.1, seed=7, jobs=4)
        assert len(events) == 100
        assert len({e.event_id for e in events}) == 100
        for event in events:
            validate_event(event, horizon=10)
            assert mean_fv_speed(event) > 9.0
            assert np.min(event.spacing) > MIN_SPACING_FLOOR

    def test_deterministic(self):
        """测试同一种子结果相同且与线程数无关"""
        a = generate_events("low", 4, 0.1, seed=3, jobs=1)
        b = generate_events("low", 4, 0.1, seed=3, jobs=3)
        for x, y in zip(a, b):
            assert x.event_id == y.event_id
            assert x.spacing.tobytes() == y.spacing.tobytes()
            assert x.fv_speed.tobytes() == y.fv_speed.tobytes()

    def test_event_length(self):
        """测试事件时长 30–60 s"""
        for event in generate_events("mid", 5, 0.1, seed=1):
            assert 300 <= len(event) <= 600
            assert event.dt == 0.1

    def test_regimes_are_ordered_by_speed(self):
        """测试低、中、高工况平均速度依次升高"""
        dataset = generate_dataset(15, ["low", "mid", "high"], 0.1, seed=11)
        means = {r: np.mean([mean_fv_speed(e) for e in events]) for r, events in dataset.items()}
        assert means["low"] < means["mid"] < means["high"]

    def test_manifest(self):
        """测试生成清单内容"""
        dataset = generate_dataset(3, ["mid"], 0.1, seed=2)
        manifest = generator_manifest(dataset, 0.1, 2)
        assert manifest["counts"] == {"mid": 3}
        assert manifest["seed"] == 2
        assert set(manifest["regime_profiles"]) == {"low", "mid", "high"}
        assert manifest["summary"][0]["count"] == 3


class TestRegimeCounts:
    """工况数量分配测试类"""

    def test_even_split(self):
        """测试 300 个事件每个工况 100 个"""
        assert regime_counts(300, ["low", "mid", "high"]) == {"low": 100, "mid": 100, "high": 100}

    def test_remainder(self):
        """测试余数依次分给前面的工况"""
        assert regime_counts(5, ["low", "mid", "high"]) == {"low": 2, "mid": 2, "high": 1}

    @pytest.mark.parametrize(
        "count,regimes",
        [(0, ["low"]), (3, []), (3, ["fast"]), (3, ["low", "low"])],
    )
    def test_invalid(self, count, regimes):
        """测试非法参数"""
        with pytest.raises(InvalidArgumentError):
            regime_counts(count, regimes)
