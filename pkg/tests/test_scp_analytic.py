import math
import time

import numpy as np
import pytest

from secroute.model import EavesdropperMode, NetworkModel, Path, ScpMethod
from secroute.scp_analytic import (
    bottleneck_expectation,
    laguerre_rule,
    scp_exact_colluding,
    scp_exact_noncolluding,
    scp_exact_sweep,
)


def single_hop_closed_form(lambda_e: float, d: float) -> float:
    return math.exp(-(math.pi**2 / 2) * lambda_e * d * d)


class TestExactColluding:
    """Colluding eavesdroppers, plane-integral form."""

    def test_zero_density_is_one(self, six_node: NetworkModel) -> None:
        est = scp_exact_colluding(six_node.with_lambda(0.0), Path.of(0, 2, 4))
        assert est.value == 1.0
        assert est.method is ScpMethod.EXACT

    @pytest.mark.parametrize("d", [1.0, 5.0, 10.0, 20.0])
    def test_single_hop_closed_form(self, d: float) -> None:
        model = NetworkModel.uniform_power([(0.0, 0.0), (d, 0.0)], alpha=4.0, lambda_e=1e-4)
        value = scp_exact_colluding(model, Path.of(0, 1)).value
        assert math.isclose(value, single_hop_closed_form(1e-4, d), rel_tol=1e-5)

    def test_single_hop_reference_value(self, single_hop: NetworkModel) -> None:
        assert abs(scp_exact_colluding(single_hop, Path.of(0, 1)).value - 0.95174) < 1e-5

    def test_decreasing_in_density(self, six_node: NetworkModel) -> None:
        values = [e.value for e in scp_exact_sweep(six_node, Path.of(0, 2, 4), EavesdropperMode.COLLUDING, [1e-6, 1e-5, 1e-4])]
        assert values[0] > values[1] > values[2]

    def test_sweep_matches_single_calls(self, six_node: NetworkModel) -> None:
        path = Path.of(0, 2, 4)
        swept = scp_exact_sweep(six_node, path, EavesdropperMode.COLLUDING, [0.0, 3e-5])
        assert swept[0].value == 1.0
        assert swept[1].value == scp_exact_colluding(six_node.with_lambda(3e-5), path).value

    def test_detour_lowers_scp(self) -> None:
        # the detour lengthens every hop beyond the direct one
        model = NetworkModel.uniform_power([(0.0, 0.0), (0.0, 30.0), (12.0, 0.0)], alpha=4.0, lambda_e=1e-4)
        direct = scp_exact_colluding(model, Path.of(0, 2)).value
        detour = scp_exact_colluding(model, Path.of(0, 1, 2)).value
        assert detour < direct


class TestExactNonColluding:
    """Non-colluding eavesdroppers, bottleneck expectation form."""

    def test_zero_density_is_one(self, six_node: NetworkModel) -> None:
        assert scp_exact_noncolluding(six_node.with_lambda(0.0), Path.of(0, 2, 4)).value == 1.0

    def test_dominates_colluding(self, six_node: NetworkModel, six_node_paths: list[Path]) -> None:
        lambdas = [1e-6, 1e-5, 1e-4]
        for path in six_node_paths:
            colluding = scp_exact_sweep(six_node, path, EavesdropperMode.COLLUDING, lambdas)
            noncolluding = scp_exact_sweep(six_node, path, EavesdropperMode.NON_COLLUDING, lambdas)
            for c, n in zip(colluding, noncolluding):
                assert c.value <= n.value + 1e-8

    def test_single_hop_above_colluding(self, single_hop: NetworkModel) -> None:
        colluding = scp_exact_colluding(single_hop, Path.of(0, 1)).value
        noncolluding = scp_exact_noncolluding(single_hop, Path.of(0, 1)).value
        assert colluding < noncolluding < 1.0

    def test_single_hop_closed_form(self) -> None:
        # one hop: the leak integral is pi * Gamma(3/2) * sqrt(p / m) and m ~ Exp(S)
        model = NetworkModel.uniform_power([(0.0, 0.0), (10.0, 0.0)], alpha=4.0, lambda_e=1e-4)
        rate = 10.0**4
        nodes, _ = laguerre_rule(4.0, 64)
        c = 1e-4 * math.pi * math.gamma(1.5) * math.sqrt(rate)
        expected = bottleneck_expectation(4.0, 64, c / np.sqrt(nodes), nodes)
        assert math.isclose(scp_exact_noncolluding(model, Path.of(0, 1)).value, expected, rel_tol=1e-6)

    def test_detour_lowers_scp(self) -> None:
        model = NetworkModel.uniform_power([(0.0, 0.0), (0.0, 30.0), (12.0, 0.0)], alpha=4.0, lambda_e=1e-4)
        direct = scp_exact_noncolluding(model, Path.of(0, 2)).value
        detour = scp_exact_noncolluding(model, Path.of(0, 1, 2)).value
        assert detour < direct

    def test_six_node_paths_evaluate_quickly(self, six_node: NetworkModel) -> None:
        started = time.perf_counter()
        scp_exact_noncolluding(six_node, Path.of(0, 2, 4))
        scp_exact_noncolluding(six_node.with_lambda(1e-4), Path.of(0, 1, 2, 3, 4))
        assert time.perf_counter() - started < 20.0

    def test_decreasing_in_density(self, six_node: NetworkModel) -> None:
        swept = scp_exact_sweep(six_node, Path.of(0, 2, 4), EavesdropperMode.NON_COLLUDING, [1e-6, 1e-5, 1e-4])
        assert swept[0].value > swept[1].value > swept[2].value


def test_laguerre_expectation_of_constant():
    # E[1 - (1 - exp(-x))] with x = 0 is exactly one
    nodes, _ = laguerre_rule(4.0, 64)
    assert bottleneck_expectation(4.0, 64, np.zeros_like(nodes), nodes) == 1.0


def test_laguerre_weights_total_mass():
    # the generalized weight u^(-2/alpha) e^-u integrates to Gamma(1 - 2/alpha)
    _, weights = laguerre_rule(3.0, 64)
    assert math.isclose(float(np.sum(weights)), math.gamma(1.0 / 3.0), rel_tol=1e-8)
