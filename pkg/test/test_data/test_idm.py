"""IDM 测试"""

import numpy as np
import pytest

from src.data.idm import desired_gap, equilibrium_gap, idm_accel
from src.models.event import IdmParams
from src.utils.exceptions import InvalidArgumentError


@pytest.fixture
def idm() -> IdmParams:
    return IdmParams(
        desired_speed=20.0, time_headway=1.5, min_gap=2.0, max_accel=1.0, comfortable_decel=1.5
    )


class TestIdm:
    """IDM 加速度测试类"""

    def test_free_flow_equilibrium(self, idm):
        """测试期望速度、远距离时加速度趋于 0"""
        assert abs(idm_accel(20.0, 0.0, 1e6, idm)) < 1e-3

    def test_standstill_free_road(self, idm):
        """测试静止、远距离时加速度约为 a"""
        assert idm_accel(0.0, 0.0, 1e9, idm) == pytest.approx(1.0, abs=1e-6)

    def test_equilibrium_gap(self, idm):
        """测试稳态间距处加速度为 0"""
        gap = equilibrium_gap(12.0, idm)
        assert idm_accel(12.0, 0.0, gap, idm) == pytest.approx(0.0, abs=1e-12)

    def test_approaching_brakes_harder(self, idm):
        """测试接近前车时减速更强"""
        assert idm_accel(12.0, 3.0, 20.0, idm) < idm_accel(12.0, 0.0, 20.0, idm)

    def test_vectorized(self, idm):
        """测试数组输入"""
        accel = idm_accel(np.array([0.0, 10.0]), np.zeros(2), np.array([50.0, 50.0]), idm)
        assert accel.shape == (2,)

    @pytest.mark.parametrize("gap", [0.0, -1.0])
    def test_nonpositive_gap(self, idm, gap):
        """测试间距非正报错"""
        with pytest.raises(InvalidArgumentError):
            idm_accel(10.0, 0.0, gap, idm)

    def test_desired_gap_floor(self, idm):
        """测试前车快速远离时期望间距取 s0，动态项非负时不截断"""
        assert desired_gap(10.0, -30.0, idm) == idm.min_gap
        plain = idm.min_gap + 10.0 * 1.5 + 10.0 * 2.0 / (2.0 * np.sqrt(1.0 * 1.5))
        assert desired_gap(10.0, 2.0, idm) == pytest.approx(plain)
