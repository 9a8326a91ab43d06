import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from secroute.custom_exceptions import AlphaOutOfRange, InvalidPath
from secroute.model import EavesdropperMode, NetworkModel, Path, ScpMethod
from secroute.scp_analytic import scp_exact_sweep
from secroute.scp_approx import (
    GammaConstants,
    k1,
    k2,
    lemma1_closed_form,
    lemma1_integrals,
    scp_approx_colluding,
    scp_approx_noncolluding,
    scp_colocated_noncolluding,
    scp_noncolluding_upper_bound,
)


class TestGammaConstants:
    """K1 and K2(N)."""

    def test_k1_alpha_four(self) -> None:
        assert math.isclose(k1(4.0, 1.0), math.pi**2 / 2, rel_tol=1e-14)

    def test_k1_zero_density(self) -> None:
        assert k1(4.0, 0.0) == 0.0

    def test_k1_large_alpha_limit(self) -> None:
        assert math.isclose(k1(1000.0, 1.0), math.pi, rel_tol=1e-2)

    def test_k2_two_hops(self) -> None:
        assert math.isclose(k2(2, 4.0, 1.0), 3 * math.pi**2 / 4, rel_tol=1e-13)

    @pytest.mark.parametrize("alpha", [2.5, 3.0, 4.0, 6.0])
    def test_k2_one_hop_equals_k1(self, alpha: float) -> None:
        assert math.isclose(k2(1, alpha, 0.7), k1(alpha, 0.7), rel_tol=1e-12)

    @pytest.mark.parametrize("alpha", [2.5, 4.0, 6.0])
    def test_k2_increasing(self, alpha: float) -> None:
        values = [k2(n, alpha, 1.0) for n in range(1, 40)]
        assert all(a < b for a, b in zip(values, values[1:]))

    @pytest.mark.parametrize("alpha", [2.0, 1.0])
    def test_alpha_out_of_range(self, alpha: float) -> None:
        with pytest.raises(AlphaOutOfRange):
            k1(alpha, 1.0)
        with pytest.raises(AlphaOutOfRange):
            k2(1, alpha, 1.0)
        with pytest.raises(AlphaOutOfRange):
            GammaConstants(alpha, 1.0)

    def test_dataclass_view(self) -> None:
        constants = GammaConstants(4.0, 2.0)
        assert constants.k1 == k1(4.0, 2.0)
        assert constants.k2_of_n(3) == k2(3, 4.0, 2.0)


class TestApproxColluding:
    """Common-anchor upper bound on the colluding SCP."""

    def test_zero_density(self, six_node: NetworkModel) -> None:
        assert scp_approx_colluding(six_node.with_lambda(0.0), Path.of(0, 2, 4)).value == 1.0

    def test_two_equal_hops(self) -> None:
        model = NetworkModel.uniform_power([(0.0, 0.0), (10.0, 0.0), (20.0, 0.0)], alpha=4.0, lambda_e=1e-5)
        est = scp_approx_colluding(model, Path.of(0, 1, 2))
        assert est.method is ScpMethod.APPROX
        assert math.isclose(est.value, math.exp(-(3 * math.pi**2 / 4) * 1e-5 * math.sqrt(20000.0)), rel_tol=1e-12)
        assert abs(est.value - 0.98958) < 1e-5

    def test_single_hop_matches_exact(self, single_hop: NetworkModel) -> None:
        approx = scp_approx_colluding(single_hop, Path.of(0, 1)).value
        exact = scp_exact_sweep(single_hop, Path.of(0, 1), EavesdropperMode.COLLUDING, [1e-4])[0].value
        assert math.isclose(approx, exact, rel_tol=1e-6)

    def test_quadrature_branch_reproduces_closed_form(self, six_node: NetworkModel) -> None:
        path = Path.of(0, 1, 2, 4)
        closed = scp_approx_colluding(six_node, path).value
        numeric = scp_approx_colluding(six_node, path, force_quadrature=True).value
        assert math.isclose(closed, numeric, rel_tol=1e-6)

    def test_upper_bounds_exact(self, six_node: NetworkModel, six_node_paths: list[Path]) -> None:
        lambdas = [1e-6, 3e-6, 1e-5, 3e-5, 1e-4]
        for path in six_node_paths:
            exact = scp_exact_sweep(six_node, path, EavesdropperMode.COLLUDING, lambdas)
            for lam, e in zip(lambdas, exact):
                approx = scp_approx_colluding(six_node.with_lambda(lam), path).value
                assert approx >= e.value - 1e-8
                assert approx - e.value <= 0.05

    def test_unequal_power_anchor_sensitivity(self) -> None:
        model = NetworkModel(((0.0, 0.0), (8.0, 0.0), (8.0, 9.0)), (1.0, 4.0, 1.0), alpha=3.5, lambda_e=1e-4)
        path = Path.of(0, 1, 2)
        at_source = scp_approx_colluding(model, path).value
        at_relay = scp_approx_colluding(model, path, anchor=1).value
        assert 0.0 < at_source < 1.0 and 0.0 < at_relay < 1.0
        with pytest.raises(InvalidPath):
            scp_approx_colluding(model, path, anchor=2)

    def test_decreasing_in_distance(self) -> None:
        values = []
        for d in (5.0, 10.0, 15.0):
            model = NetworkModel.uniform_power([(0.0, 0.0), (d, 0.0), (d, d)], alpha=4.0, lambda_e=1e-4)
            values.append(scp_approx_colluding(model, Path.of(0, 1, 2)).value)
        assert values[0] > values[1] > values[2]


class TestApproxNonColluding:
    """Co-location plus Jensen approximation."""

    def test_two_hops_reference(self) -> None:
        model = NetworkModel.uniform_power([(0.0, 0.0), (5.0, 0.0), (10.0, 0.0)], alpha=4.0, lambda_e=1e-4)
        value = scp_approx_noncolluding(model, Path.of(0, 1, 2)).value
        assert math.isclose(value, math.exp(-(math.pi**2 / 2) * 1e-4 * 50.0), rel_tol=1e-12)
        assert abs(value - 0.97563) < 1e-5

    def test_single_hop_equals_colluding_approx(self, single_hop: NetworkModel) -> None:
        a = scp_approx_noncolluding(single_hop, Path.of(0, 1)).value
        b = scp_approx_colluding(single_hop, Path.of(0, 1)).value
        assert math.isclose(a, b, rel_tol=1e-12)

    def test_close_to_exact(self, six_node: NetworkModel, six_node_paths: list[Path]) -> None:
        lambdas = [1e-6, 1e-5, 3e-5, 1e-4]
        for path in six_node_paths:
            exact = scp_exact_sweep(six_node, path, EavesdropperMode.NON_COLLUDING, lambdas)
            for lam, e in zip(lambdas, exact):
                approx = scp_approx_noncolluding(six_node.with_lambda(lam), path).value
                assert abs(approx - e.value) <= 0.05

    def test_colocated_is_above_jensen(self, six_node: NetworkModel, six_node_paths: list[Path]) -> None:
        for path in six_node_paths:
            for lam in (1e-6, 1e-4, 1e-3):
                model = six_node.with_lambda(lam)
                assert scp_colocated_noncolluding(model, path).value >= scp_approx_noncolluding(model, path).value - 1e-9

    def test_upper_bound_dominates_exact(self, six_node: NetworkModel, six_node_paths: list[Path]) -> None:
        for path in six_node_paths:
            exact = scp_exact_sweep(six_node, path, EavesdropperMode.NON_COLLUDING, [1e-5])[0].value
            assert scp_noncolluding_upper_bound(six_node, path).value >= exact - 1e-6


class TestLemma1:
    """Distinct-anchor vs common-anchor line integrals."""

    def test_single_term(self) -> None:
        f_1, g_1 = lemma1_integrals([3.0], [1.0])
        assert math.isclose(f_1, math.pi, rel_tol=1e-9)
        assert math.isclose(g_1, math.pi, rel_tol=1e-9)

    def test_two_terms_match_closed_forms(self) -> None:
        f_2, g_2 = lemma1_integrals([0.0, 1.0], [1.0, 1.0])
        cf_f, cf_g = lemma1_closed_form(1.0, 1.0, 1.0)
        assert math.isclose(f_2, cf_f, rel_tol=1e-8)
        assert math.isclose(g_2, cf_g, rel_tol=1e-8)
        assert abs((f_2 - g_2) / math.pi - 0.1) < 1e-6

    def test_common_anchor_gives_equality(self) -> None:
        f_2, g_2 = lemma1_integrals([2.5, 2.5], [3.0, 7.0])
        assert math.isclose(f_2, g_2, rel_tol=1e-10)

    def test_zero_scale_contributes_nothing(self) -> None:
        f, g = lemma1_integrals([0.0, 4.0], [4.0, 0.0])
        assert math.isclose(f, 2 * math.pi, rel_tol=1e-9)
        assert math.isclose(g, 2 * math.pi, rel_tol=1e-9)

    def test_shape_validation(self) -> None:
        with pytest.raises(ValueError):
            lemma1_integrals([0.0, 1.0], [1.0])
        with pytest.raises(ValueError):
            lemma1_integrals([0.0], [-1.0])

    @settings(max_examples=200, deadline=None)
    @given(
        data=st.integers(min_value=1, max_value=5).flatmap(
            lambda n: st.tuples(
                st.lists(st.floats(min_value=-10, max_value=10), min_size=n, max_size=n),
                st.lists(st.floats(min_value=0, max_value=100), min_size=n, max_size=n),
            )
        )
    )
    def test_distinct_anchors_never_below_common(self, data) -> None:
        anchors, scales = data
        f_n, g_n = lemma1_integrals(np.asarray(anchors), np.asarray(scales))
        assert f_n >= g_n - 1e-9 * max(1.0, g_n)
