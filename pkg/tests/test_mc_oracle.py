import math

import numpy as np
import pytest

from secroute.custom_exceptions import DegenerateWindow
from secroute.mc_oracle import (
    EavesdropperRealization,
    McConfig,
    SamplingWindow,
    _TrialKernel,
    resolve_window,
    sample_ppp,
    simulate_scp,
    simulate_scp_sweep,
    tail_bound,
    trial_rng,
)
from secroute.model import EavesdropperMode, NetworkModel, Path, ScpMethod
from secroute.scp_analytic import scp_exact_sweep


def test_zero_density_is_always_secure(six_node: NetworkModel, fast_mc: McConfig):
    est = simulate_scp(six_node.with_lambda(0.0), Path.of(0, 2, 4), EavesdropperMode.COLLUDING, fast_mc)
    assert est.value == 1.0
    assert est.ci_halfwidth == 0.0
    assert est.method is ScpMethod.MONTE_CARLO
    assert est.trials == fast_mc.trials


def test_poisson_counts_match_density_times_area(collinear: NetworkModel):
    cfg = McConfig(trials=2000, seed=3, window=100.0)
    sweep = simulate_scp_sweep(collinear, Path.of(0, 1, 2), [1e-3], cfg)
    expected = 1e-3 * sweep.window.area
    assert sweep.window.area == 40000.0
    assert abs(sweep.eavesdropper_counts.mean() - expected) < 5 * math.sqrt(expected / cfg.trials)


class TestSweepCoupling:
    """Outcomes across modes and densities come from shared draws."""

    @pytest.fixture
    def sweep(self, six_node: NetworkModel, fast_mc: McConfig):
        return simulate_scp_sweep(six_node, Path.of(0, 1, 2, 4), [1e-6, 1e-5, 1e-4], fast_mc)

    def test_colluding_never_beats_noncolluding(self, sweep) -> None:
        assert np.all(sweep.colluding <= sweep.noncolluding)

    def test_outcomes_monotone_in_density(self, sweep) -> None:
        for outcomes in (sweep.colluding, sweep.noncolluding):
            assert np.all(outcomes[:, 1:] <= outcomes[:, :-1])

    def test_estimates_decrease(self, sweep) -> None:
        values = [sweep.estimate(EavesdropperMode.COLLUDING, i).value for i in range(3)]
        assert values[0] >= values[1] >= values[2]

    def test_shapes(self, sweep, fast_mc: McConfig) -> None:
        assert sweep.colluding.shape == (fast_mc.trials, 3)
        assert sweep.lambdas == (1e-6, 1e-5, 1e-4)
        assert sweep.trials == fast_mc.trials


class TestDeterminism:
    """Same seed, same answer."""

    def test_worker_count_does_not_matter(self, six_node: NetworkModel) -> None:
        path = Path.of(0, 2, 4)
        one = simulate_scp_sweep(six_node, path, [1e-5, 1e-4], McConfig(trials=600, seed=5, workers=1))
        many = simulate_scp_sweep(six_node, path, [1e-5, 1e-4], McConfig(trials=600, seed=5, workers=4))
        np.testing.assert_array_equal(one.colluding, many.colluding)
        np.testing.assert_array_equal(one.noncolluding, many.noncolluding)
        np.testing.assert_array_equal(one.eavesdropper_counts, many.eavesdropper_counts)

    def test_seed_changes_draws(self) -> None:
        a = trial_rng(1, 0).uniform(size=4)
        b = trial_rng(2, 0).uniform(size=4)
        c = trial_rng(1, 1).uniform(size=4)
        assert not np.array_equal(a, b)
        assert not np.array_equal(a, c)
        np.testing.assert_array_equal(a, trial_rng(1, 0).uniform(size=4))


def test_single_hop_agrees_with_closed_form(single_hop: NetworkModel, fast_mc: McConfig):
    est = simulate_scp(single_hop, Path.of(0, 1), EavesdropperMode.COLLUDING, fast_mc)
    expected = math.exp(-(math.pi**2 / 2) * 1e-4 * 100.0)
    sigma = math.sqrt(expected * (1 - expected) / fast_mc.trials)
    assert abs(est.value - expected) < 4 * sigma + fast_mc.tail_tolerance


@pytest.mark.slow
@pytest.mark.parametrize("mode", list(EavesdropperMode))
def test_agreement_with_exact_engines(six_node: NetworkModel, six_node_paths: list[Path], mode: EavesdropperMode):
    cfg = McConfig(trials=100_000, seed=20160101, tail_tolerance=1e-4, workers=4)
    lambdas = [1e-6, 1e-5, 1e-4]
    for path in six_node_paths:
        sweep = simulate_scp_sweep(six_node, path, lambdas, cfg)
        exact = scp_exact_sweep(six_node, path, mode, lambdas)
        for i, reference in enumerate(exact):
            est = sweep.estimate(mode, i)
            sigma = math.sqrt(max(reference.value * (1 - reference.value), 1e-12) / cfg.trials)
            assert abs(est.value - reference.value) <= 3 * sigma + cfg.tail_tolerance


class TestWindow:
    """Sampling window selection."""

    def test_fixed_window_is_used_as_given(self, collinear: NetworkModel) -> None:
        window = resolve_window(collinear, Path.of(0, 2), McConfig(window=25.0), 1e-3)
        assert window.half_width == 25.0
        assert window.center == (5.0, 0.0)

    def test_auto_window_meets_tail_tolerance(self, six_node: NetworkModel) -> None:
        cfg = McConfig(tail_tolerance=1e-4)
        path = Path.of(0, 1, 2, 4)
        window = resolve_window(six_node, path, cfg, 1e-4)
        assert 1e-4 * tail_bound(six_node, path, window.half_width) <= 1e-4
        assert 1e-4 * tail_bound(six_node, path, window.half_width / 2) > 1e-4

    def test_auto_window_grows_with_density(self, six_node: NetworkModel) -> None:
        path = Path.of(0, 2, 4)
        small = resolve_window(six_node, path, McConfig(), 1e-6)
        large = resolve_window(six_node, path, McConfig(), 1e-3)
        assert large.half_width >= small.half_width

    @pytest.mark.parametrize("mode", list(EavesdropperMode))
    def test_doubling_auto_window_stays_within_ci(self, six_node: NetworkModel, mode: EavesdropperMode) -> None:
        path = Path.of(0, 1, 2, 4)
        cfg = McConfig(trials=20_000, seed=8, tail_tolerance=1e-4, workers=2)
        auto = simulate_scp(six_node, path, mode, cfg)
        window = resolve_window(six_node, path, cfg, six_node.lambda_e)
        doubled_cfg = McConfig(trials=20_000, seed=8, window=2 * window.half_width, workers=2)
        doubled = simulate_scp(six_node, path, mode, doubled_cfg)
        assert abs(auto.value - doubled.value) < auto.ci_halfwidth + doubled.ci_halfwidth

    def test_tail_bound_infinite_inside_reach(self, collinear: NetworkModel) -> None:
        assert tail_bound(collinear, Path.of(0, 1, 2), 1.0) == math.inf

    def test_realization_must_fit_window(self) -> None:
        window = SamplingWindow((0.0, 0.0), 1.0)
        with pytest.raises(ValueError):
            EavesdropperRealization(np.array([[2.0, 0.0]]), window)

    def test_sample_ppp_inside_window(self) -> None:
        window = SamplingWindow((3.0, -1.0), 10.0)
        realization = sample_ppp(0.05, window, trial_rng(0, 0))
        assert window.contains(realization.points)
        assert sample_ppp(0.0, window, trial_rng(0, 0)).points.shape == (0, 2)


class _StuckRng:
    """Keeps returning the origin, where a transmitter sits."""

    def uniform(self, low, high, size):
        return np.zeros(size)


def test_coincident_samples_eventually_raise(collinear: NetworkModel):
    window = SamplingWindow((5.0, 0.0), 10.0)
    kernel = _TrialKernel(collinear, Path.of(0, 1, 2), np.array([1e-3]), window, seed=0)
    realization = EavesdropperRealization(np.zeros((3, 2)), window)
    with pytest.raises(DegenerateWindow):
        kernel._resample_coincident(realization, _StuckRng())


@pytest.mark.parametrize(
    "kwargs",
    [{"trials": 0}, {"seed": -1}, {"window": -5.0}, {"window": "big"}, {"confidence_level": 1.0}, {"workers": 0}],
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        McConfig(**kwargs)
