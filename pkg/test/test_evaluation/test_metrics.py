"""评估指标测试"""

import numpy as np
import pytest

from src.evaluation.metrics import (collision_rate, evaluate_events,
                                    event_metrics, mean_squared_error,
                                    pool_metrics, taskset_metrics)
from src.models.evaluation import EventMetrics
from src.sim.rollout import ConstantController, ReplayController
from src.utils.exceptions import InvalidArgumentError


class TestBasicMetrics:
    """基础指标测试类"""

    def test_mse(self):
        """测试 MSE([2,0],[0,0]) = 2"""
        assert mean_squared_error([2.0, 0.0], [0.0, 0.0]) == 2.0

    def test_mse_empty(self):
        """测试空序列报错"""
        with pytest.raises(InvalidArgumentError):
            mean_squared_error([], [])

    def test_collision_rate(self):
        """测试 200 个事件中 5 个碰撞为 2.5%"""
        assert collision_rate(5, 200) == 2.5

    def test_collision_rate_no_events(self):
        """测试事件数为 0 报错"""
        with pytest.raises(InvalidArgumentError):
            collision_rate(0, 0)

    def test_mse_matches_loop(self):
        """测试随机输入上 MSE 与逐项循环求和一致"""
        rng = np.random.default_rng(11)
        for _ in range(100):
            n = int(rng.integers(1, 40))
            pred, true = rng.normal(size=n), rng.normal(size=n)
            expected = sum((p - t) ** 2 for p, t in zip(pred.tolist(), true.tolist())) / n
            assert mean_squared_error(pred, true) == pytest.approx(expected, rel=1e-12)

    def test_collision_rate_matches_count(self):
        """测试随机碰撞标记上的碰撞率与逐个计数一致"""
        rng = np.random.default_rng(12)
        for _ in range(100):
            flags = (rng.random(int(rng.integers(1, 300))) < 0.1).tolist()
            count = len([f for f in flags if f])
            assert collision_rate(int(np.sum(flags)), len(flags)) == 100.0 * count / len(flags)

    def test_pool_by_steps(self):
        """测试按步汇总与按事件平均的区别"""
        metrics = [
            EventMetrics(event_id="a", se_spacing_sum=10.0, se_speed_sum=1.0, n_steps=10, collided=False),
            EventMetrics(event_id="b", se_spacing_sum=0.0, se_speed_sum=3.0, n_steps=30, collided=True),
        ]
        cell = pool_metrics(metrics)
        assert cell.mse_spacing == pytest.approx(0.25)
        assert cell.mse_speed == pytest.approx(0.1)
        assert cell.event_mse_spacing == pytest.approx(0.5)
        assert cell.collision_rate == 50.0
        assert cell.n_events == 2


class TestClosedLoopMetrics:
    """闭环评估测试类"""

    def test_replay_is_exact(self, wave_factory):
        """测试回放控制器误差为 0"""
        metrics = event_metrics(ReplayController(0.1), wave_factory("r", 7.0, n_steps=40), 0.1)
        assert metrics.se_spacing_sum < 1e-12
        assert metrics.se_speed_sum < 1e-12
        assert metrics.n_steps == 30
        assert not metrics.collided

    def test_collision_continues(self, closing_event):
        """测试碰撞后继续推演并计分到事件末尾"""
        metrics = event_metrics(ConstantController(0.0), closing_event, 0.1)
        assert metrics.collided
        assert metrics.n_steps == len(closing_event) - 10

    def test_parallel_matches_serial(self, synthetic_events, tiny_params):
        """测试并行评估结果与串行相同"""
        serial = evaluate_events(tiny_params, synthetic_events, 0.1, jobs=1)
        parallel = evaluate_events(tiny_params, synthetic_events, 0.1, jobs=3)
        assert serial == parallel

    def test_empty_test_split(self, task_factory, tiny_params):
        """测试空测试集报错"""
        task = task_factory(n_test=0)[0]
        with pytest.raises(InvalidArgumentError):
            taskset_metrics(tiny_params, task, 0.1)
