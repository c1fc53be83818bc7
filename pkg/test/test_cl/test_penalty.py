"""正则项测试"""

import numpy as np
import pytest

from src.models.network import ParamVector, param_count
from src.models.regularization import (ImportanceKind, ImportanceVector,
                                       RegConfig)
from src.cl.penalty import penalty
from src.nn.gradcheck import finite_diff_grad
from src.utils.exceptions import InvalidArgumentError


def vector(values, hidden_size: int = 1) -> ParamVector:
    full = np.zeros(param_count(hidden_size))
    full[: len(values)] = values
    return ParamVector(values=full, hidden_size=hidden_size)


class TestPenalty:
    """EWC / MAS 正则项测试类"""

    def test_zero_at_anchor(self):
        """测试参数等于锚点时为 0"""
        anchor = vector([0.5, -1.0, 2.0])
        imp = ImportanceVector(
            weights=np.ones(len(anchor)), anchor=anchor, kind=ImportanceKind.MAS
        )
        value, grad = penalty(anchor, imp, RegConfig(reg_lambda=7.0))
        assert value == 0.0
        assert np.all(grad.values == 0.0)

    def test_fisher_arithmetic(self):
        """测试 fisher：λ=2，F=[1,2]，θ−θ*=[1,1]"""
        anchor = vector([0.0, 0.0])
        weights = np.zeros(len(anchor))
        weights[:2] = [1.0, 2.0]
        imp = ImportanceVector(weights=weights, anchor=anchor, kind=ImportanceKind.FISHER)
        value, grad = penalty(vector([1.0, 1.0]), imp, RegConfig(reg_lambda=2.0))
        assert value == pytest.approx(3.0)
        assert grad.values[:2] == pytest.approx([2.0, 4.0])
        assert np.all(grad.values[2:] == 0.0)

    def test_mas_arithmetic(self):
        """测试 mas：λ·ΣΩd² 与梯度 2λΩd"""
        anchor = vector([1.0, 1.0])
        weights = np.zeros(len(anchor))
        weights[:2] = [0.5, 3.0]
        imp = ImportanceVector(weights=weights, anchor=anchor, kind=ImportanceKind.MAS)
        value, grad = penalty(vector([3.0, 0.0]), imp, RegConfig(reg_lambda=2.0))
        # d = [2, -1]
        assert value == pytest.approx(2.0 * (0.5 * 4.0 + 3.0 * 1.0))
        assert grad.values[:2] == pytest.approx([2 * 2.0 * 0.5 * 2.0, 2 * 2.0 * 3.0 * -1.0])

    def test_length_mismatch(self):
        """测试长度不一致报错"""
        anchor = vector([], hidden_size=1)
        imp = ImportanceVector(weights=np.ones(len(anchor)), anchor=anchor, kind=ImportanceKind.FISHER)
        with pytest.raises(InvalidArgumentError):
            penalty(vector([], hidden_size=2), imp, RegConfig())

    def test_default_lambdas(self):
        """测试按类型的默认 λ"""
        assert RegConfig.for_kind(ImportanceKind.FISHER).reg_lambda == 1000.0
        assert RegConfig.for_kind(ImportanceKind.MAS).reg_lambda == 100_000.0
        assert RegConfig.for_kind(ImportanceKind.MAS, 5.0).reg_lambda == 5.0

    @pytest.mark.parametrize("kind", [ImportanceKind.FISHER, ImportanceKind.MAS])
    def test_matches_elementwise_sum(self, kind):
        """测试随机输入上正则项与逐元素求和、梯度与中心差分一致"""
        rng = np.random.default_rng(5)
        scale = 0.5 if kind == ImportanceKind.FISHER else 1.0
        for _ in range(100):
            anchor = ParamVector(values=rng.normal(size=param_count(1)), hidden_size=1)
            params = anchor.with_values(anchor.values + rng.normal(scale=0.1, size=len(anchor)))
            weights = rng.uniform(0.0, 5.0, size=len(anchor))
            lam = float(rng.uniform(0.0, 10.0))
            imp = ImportanceVector(weights=weights, anchor=anchor, kind=kind)
            value, grad = penalty(params, imp, RegConfig(reg_lambda=lam))

            expected = scale * lam * sum(
                w * (p - a) ** 2
                for w, p, a in zip(weights.tolist(), params.values.tolist(), anchor.values.tolist())
            )
            assert value == pytest.approx(expected, rel=1e-12)
            numeric = finite_diff_grad(lambda p: penalty(p, imp, RegConfig(reg_lambda=lam))[0], params)
            assert np.allclose(grad.values, numeric.values, rtol=1e-6, atol=1e-8)

    def test_scale_law(self):
        """测试 λ 加倍时取值与梯度恰好加倍"""
        rng = np.random.default_rng(6)
        anchor = ParamVector(values=rng.normal(size=param_count(1)), hidden_size=1)
        params = anchor.with_values(anchor.values + 0.3)
        imp = ImportanceVector(weights=rng.uniform(size=len(anchor)), anchor=anchor, kind=ImportanceKind.FISHER)
        v1, g1 = penalty(params, imp, RegConfig(reg_lambda=3.0))
        v2, g2 = penalty(params, imp, RegConfig(reg_lambda=6.0))
        assert v2 == 2.0 * v1
        assert np.array_equal(g2.values, 2.0 * g1.values)
