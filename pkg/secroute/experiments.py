"""
Experiment drivers behind the CLI subcommands.

Every driver is a pure function of a resolved ``ScenarioConfig``: it returns records and
a ``CsvTable`` and leaves file output to the caller.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from secroute.custom_exceptions import SecRouteException, TooLarge
from secroute.hypoexp import hypoexp_cdf
from secroute.mc_oracle import simulate_scp_sweep
from secroute.model import EavesdropperMode, NetworkModel, Path, ScpMethod
from secroute.quadrature import QuadratureConfig, integrate_r2
from secroute.reporting import CsvTable
from secroute.routing import exhaustive_route, path_metric, route
from secroute.scenario import ScenarioConfig, parse_scenario
from secroute.scp_analytic import scp_exact_sweep
from secroute.scp_approx import (
    k1,
    k2,
    lemma1_closed_form,
    lemma1_integrals,
    scp_approx_colluding,
    scp_approx_noncolluding,
    scp_noncolluding_upper_bound,
)

LOGGER = logging.getLogger(__name__)

# quadrature error allowance when an approximation is used as a search bound
BOUND_SLACK = 1e-6


@dataclass(frozen=True)
class ExperimentRecord:
    scenario: str
    lambda_e: float
    method: ScpMethod
    mode: EavesdropperMode
    path: Path
    scp: float
    ci_halfwidth: float | None
    wall_time: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.scp <= 1.0:
            raise ValueError(f"scp must lie in [0, 1], got {self.scp}")


# -----------------------------
# scp-eval
# -----------------------------


def cmd_scp_eval(config: ScenarioConfig, quad: QuadratureConfig | None = None) -> list[ExperimentRecord]:
    """One record per (lambda_e, method, mode) for the scenario's explicit path."""
    model = config.network()
    path = config.scp_path()
    lambdas = list(config.lambdas)
    records: list[ExperimentRecord] = []

    def add(method: ScpMethod, mode: EavesdropperMode, lam: float, value: float, ci: float | None, wall: float) -> None:
        records.append(ExperimentRecord(config.name, lam, method, mode, path, value, ci, wall))

    if ScpMethod.MONTE_CARLO in config.methods:
        started = time.perf_counter()
        sweep = simulate_scp_sweep(model, path, lambdas, config.mc_config())
        wall = time.perf_counter() - started
        for mode in config.modes:
            for index, lam in enumerate(lambdas):
                est = sweep.estimate(mode, index)
                add(ScpMethod.MONTE_CARLO, mode, lam, est.value, est.ci_halfwidth, wall)
        LOGGER.info("monte-carlo: %d trials in %.2fs", config.trials, wall)

    if ScpMethod.EXACT in config.methods:
        for mode in config.modes:
            started = time.perf_counter()
            estimates = scp_exact_sweep(model, path, mode, lambdas, quad)
            wall = time.perf_counter() - started
            for lam, est in zip(lambdas, estimates):
                add(ScpMethod.EXACT, mode, lam, est.value, None, wall)
            LOGGER.info("exact %s in %.2fs", mode.value, wall)

    if ScpMethod.APPROX in config.methods:
        for mode in config.modes:
            for lam in lambdas:
                started = time.perf_counter()
                at_lam = model.with_lambda(lam)
                if mode is EavesdropperMode.COLLUDING:
                    est = scp_approx_colluding(at_lam, path, quad)
                else:
                    est = scp_approx_noncolluding(at_lam, path)
                add(ScpMethod.APPROX, mode, lam, est.value, None, time.perf_counter() - started)
    return records


def scp_eval_table(records: list[ExperimentRecord]) -> CsvTable:
    table = CsvTable("scp-eval", ("lambda_e", "mode", "method", "scp", "ci_halfwidth"))
    for r in records:
        table.add(r.lambda_e, r.mode, r.method, r.scp, r.ci_halfwidth)
    return table


# -----------------------------
# route
# -----------------------------


@dataclass(frozen=True)
class RouteRow:
    lambda_e: float
    mode: EavesdropperMode
    algorithm: str
    path: Path
    metric: float
    scp_exact: float


@dataclass
class RouteReport:
    scenario: str
    n_nodes: int
    rows: list[RouteRow] = field(default_factory=list)
    skipped: list[str] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)

    def table(self) -> CsvTable:
        table = CsvTable("route", ("lambda_e", "mode", "algorithm", "path", "hops", "metric", "scp_exact"))
        for r in self.rows:
            table.add(r.lambda_e, r.mode, r.algorithm, r.path.node_indices, r.path.hops, r.metric, r.scp_exact)
        return table

    def template_data(self) -> dict[str, Any]:
        return {
            "scenario": self.scenario,
            "n_nodes": self.n_nodes,
            "rows": [
                {
                    "lambda_e": r.lambda_e,
                    "mode": r.mode.value,
                    "algorithm": r.algorithm,
                    "path": str(r.path),
                    "hops": r.path.hops,
                    "metric": r.metric,
                    "scp": r.scp_exact,
                }
                for r in sorted(self.rows, key=lambda r: (r.mode.value, r.lambda_e, r.algorithm))
            ],
            "skipped": self.skipped,
        }


class _ExactCache:
    """Exact SCP per (path, mode) across a density sweep; each path is integrated once."""

    def __init__(self, model: NetworkModel, lambdas: list[float], quad: QuadratureConfig | None) -> None:
        self.model = model
        self.lambdas = lambdas
        self.quad = quad
        self._cache: dict[tuple[Path, EavesdropperMode], list[float]] = {}

    def values(self, path: Path, mode: EavesdropperMode) -> list[float]:
        key = (path, mode)
        if key not in self._cache:
            self._cache[key] = [e.value for e in scp_exact_sweep(self.model, path, mode, self.lambdas, self.quad)]
        return self._cache[key]

    def at(self, path: Path, mode: EavesdropperMode, lam: float) -> float:
        return self.values(path, mode)[self.lambdas.index(lam)]


def _upper_bound(model: NetworkModel, mode: EavesdropperMode, quad: QuadratureConfig | None) -> Callable[[Path], float]:
    """Cheap upper bound on the exact SCP of a path, used to prune the exhaustive search."""
    if mode is EavesdropperMode.COLLUDING:
        return lambda p: scp_approx_colluding(model, p, quad).value
    return lambda p: scp_noncolluding_upper_bound(model, p, quad).value


def best_exact_route(
    model: NetworkModel,
    src: int,
    dst: int,
    mode: EavesdropperMode,
    exact: Callable[[Path], float],
    *,
    max_nodes_guard: int,
    quad: QuadratureConfig | None = None,
    connectivity_radius: float | None = None,
) -> Path:
    """Exhaustive search over the exact SCP, pruned by an analytic upper bound."""
    bound = _upper_bound(model, mode, quad)
    return exhaustive_route(
        model,
        src,
        dst,
        lambda p: -exact(p),
        max_nodes_guard=max_nodes_guard,
        lower_bound=lambda p: -bound(p) - BOUND_SLACK,
        connectivity_radius=connectivity_radius,
    )


def cmd_route(config: ScenarioConfig, quad: QuadratureConfig | None = None) -> RouteReport:
    """
    Proposed route per mode, the exhaustive metric benchmark when the network is small
    enough, and the exhaustive exact-SCP benchmark when requested; each scored by its
    exact SCP at every density of the sweep.
    """
    model = config.network()
    lambdas = list(config.lambdas)
    src, dst = config.src, config.destination
    unit = model.with_lambda(1.0)
    cache = _ExactCache(model, lambdas, quad)
    report = RouteReport(config.name, model.n_nodes)

    for mode in config.modes:
        started = time.perf_counter()
        proposed = route(model, src, dst, mode, connectivity_radius=config.connectivity_radius).path
        report.timings[f"route_{mode.value}"] = time.perf_counter() - started
        candidates: list[tuple[str, Path | None]] = [("proposed", proposed)]

        if model.n_nodes <= config.metric_benchmark_max:
            started = time.perf_counter()
            benchmark = exhaustive_route(
                model,
                src,
                dst,
                lambda p, m=mode: path_metric(unit, p, m),
                max_nodes_guard=config.metric_benchmark_max,
                connectivity_radius=config.connectivity_radius,
            )
            report.timings[f"metric_benchmark_{mode.value}"] = time.perf_counter() - started
            candidates.append(("metric_benchmark", benchmark))
        else:
            report.skipped.append(f"metric_benchmark/{mode.value}: {model.n_nodes} nodes > {config.metric_benchmark_max}")

        for algorithm, path in candidates:
            for lam in lambdas:
                report.rows.append(
                    RouteRow(lam, mode, algorithm, path, path_metric(model.with_lambda(lam), path, mode), cache.at(path, mode, lam))
                )

        if not config.exact_benchmark:
            continue
        if model.n_nodes > config.exact_benchmark_max:
            report.skipped.append(f"exact_benchmark/{mode.value}: {model.n_nodes} nodes > {config.exact_benchmark_max}")
            continue
        started = time.perf_counter()
        for lam in lambdas:
            at_lam = model.with_lambda(lam)
            best = best_exact_route(
                at_lam,
                src,
                dst,
                mode,
                lambda p, m=mode, lam=lam: cache.at(p, m, lam),
                max_nodes_guard=config.exact_benchmark_max,
                quad=quad,
                connectivity_radius=config.connectivity_radius,
            )
            report.rows.append(RouteRow(lam, mode, "exact_benchmark", best, path_metric(at_lam, best, mode), cache.at(best, mode, lam)))
        report.timings[f"exact_benchmark_{mode.value}"] = time.perf_counter() - started

    for note in report.skipped:
        LOGGER.info("skipped %s", note)
    return report


# -----------------------------
# route-study
# -----------------------------


@dataclass(frozen=True)
class StudyRow:
    n_nodes: int
    mode: EavesdropperMode
    lambda_e: float
    trials: int
    scp_proposed: float
    scp_best: float
    coincidence: float


def _study_trial(
    config: ScenarioConfig, n_nodes: int, trial: int, mode: EavesdropperMode, quad: QuadratureConfig | None
) -> list[tuple[float, float, bool]]:
    lambdas = list(config.lambdas)
    model = config.network(trial=trial, n_nodes=n_nodes)
    cache = _ExactCache(model, lambdas, quad)
    dst = n_nodes - 1
    proposed = route(model, 0, dst, mode).path
    out = []
    for lam in lambdas:
        best = best_exact_route(
            model.with_lambda(lam),
            0,
            dst,
            mode,
            lambda p: cache.at(p, mode, lam),
            max_nodes_guard=config.exact_benchmark_max,
            quad=quad,
        )
        out.append((cache.at(proposed, mode, lam), cache.at(best, mode, lam), best == proposed))
    return out


def cmd_route_study(config: ScenarioConfig, quad: QuadratureConfig | None = None) -> list[StudyRow]:
    """
    Mean exact SCP of the proposed route and of the exhaustive exact-SCP benchmark over
    random placements, with the rate at which the two coincide.
    """
    too_big = [n for n in config.study_nodes if n > config.exact_benchmark_max]
    if too_big:
        raise TooLarge(f"study sizes {too_big} exceed exact_benchmark_max={config.exact_benchmark_max}")
    rows: list[StudyRow] = []
    for n_nodes in config.study_nodes:
        for mode in config.modes:
            started = time.perf_counter()

            def run(trial: int, n: int = n_nodes, m: EavesdropperMode = mode) -> list[tuple[float, float, bool]]:
                return _study_trial(config, n, trial, m, quad)

            if config.workers > 1:
                with ThreadPoolExecutor(max_workers=config.workers) as pool:
                    outcomes = list(pool.map(run, range(config.study_trials)))
            else:
                outcomes = [run(t) for t in range(config.study_trials)]
            for index, lam in enumerate(config.lambdas):
                proposed = [o[index][0] for o in outcomes]
                best = [o[index][1] for o in outcomes]
                same = [o[index][2] for o in outcomes]
                rows.append(
                    StudyRow(
                        n_nodes,
                        mode,
                        lam,
                        config.study_trials,
                        math.fsum(proposed) / len(proposed),
                        math.fsum(best) / len(best),
                        sum(same) / len(same),
                    )
                )
            LOGGER.info(
                "route-study N_L=%d %s: %d trials in %.1fs", n_nodes, mode.value, config.study_trials, time.perf_counter() - started
            )
    return rows


def study_table(rows: list[StudyRow]) -> CsvTable:
    table = CsvTable(
        "route-study", ("n_nodes", "mode", "lambda_e", "trials", "scp_proposed", "scp_best", "coincidence_rate")
    )
    for r in rows:
        table.add(r.n_nodes, r.mode, r.lambda_e, r.trials, r.scp_proposed, r.scp_best, r.coincidence)
    return table


# -----------------------------
# lemma1-check
# -----------------------------


def cmd_lemma1_check(seed: int, instances: int = 200, tolerance: float = 1e-9) -> tuple[CsvTable, bool]:
    """
    f_n >= g_n on seeded random instances (n <= 5, anchors in [-10, 10], scales in
    [0, 100]) plus the two-term closed forms.
    """
    rng = np.random.default_rng(seed)
    table = CsvTable("lemma1-check", ("kind", "instance", "n", "f_n", "g_n", "difference", "passed"))
    ok = True
    for instance in range(instances):
        n = int(rng.integers(1, 6))
        anchors = rng.uniform(-10.0, 10.0, size=n)
        scales = rng.uniform(0.0, 100.0, size=n)
        f_n, g_n = lemma1_integrals(anchors, scales)
        passed = f_n >= g_n - tolerance * max(1.0, abs(g_n))
        ok &= passed
        table.add("random", instance, n, f_n, g_n, f_n - g_n, passed)

    f_2, g_2 = lemma1_integrals([0.0, 1.0], [1.0, 1.0])
    cf_f, cf_g = lemma1_closed_form(1.0, 1.0, 1.0)
    passed = (
        math.isclose(f_2, cf_f, rel_tol=1e-8)
        and math.isclose(g_2, cf_g, rel_tol=1e-8)
        and abs((f_2 - g_2) / math.pi - 0.1) <= 1e-6
    )
    ok &= passed
    table.add("closed_form", 0, 2, f_2, g_2, f_2 - g_2, passed)
    return table, ok


# -----------------------------
# selftest
# -----------------------------


@dataclass(frozen=True)
class SelftestCheck:
    name: str
    passed: bool
    detail: str


def _check(name: str, value: float, expected: float, rel_tol: float) -> SelftestCheck:
    passed = math.isclose(value, expected, rel_tol=rel_tol)
    return SelftestCheck(name, passed, f"got {value:.10g}, expected {expected:.10g}")


def _selftest_battery() -> list[Callable[[], SelftestCheck]]:
    def quartic() -> SelftestCheck:
        value = integrate_r2(lambda x, y: 1.0 / (1.0 + (x * x + y * y) ** 2))
        return _check("integrate_r2 1/(1+r^4)", float(value), math.pi**2 / 2, 1e-6)

    def gaussian() -> SelftestCheck:
        value = integrate_r2(lambda x, y: np.exp(-(x * x + y * y)))
        return _check("integrate_r2 exp(-r^2)", float(value), math.pi, 1e-6)

    def single_hop() -> SelftestCheck:
        model = NetworkModel.uniform_power([(0.0, 0.0), (10.0, 0.0)], alpha=4.0, lambda_e=1e-4)
        value = scp_exact_sweep(model, Path.of(0, 1), EavesdropperMode.COLLUDING, [1e-4])[0].value
        return _check("single-hop exact colluding", value, math.exp(-(math.pi**2 / 2) * 1e-4 * 100), 1e-5)

    def gamma_identity() -> SelftestCheck:
        worst = max(abs(k2(1, a, 1.0) / k1(a, 1.0) - 1.0) for a in (2.5, 3.0, 4.0, 6.0))
        return SelftestCheck("k2(1) == k1", worst <= 1e-12, f"worst relative gap {worst:.3g}")

    def hypoexp_pair() -> SelftestCheck:
        return _check("hypoexp_cdf [1, 2] at 1", hypoexp_cdf([1.0, 2.0], 1.0), 1 - 2 * math.exp(-1) + math.exp(-2), 1e-9)

    def hypoexp_erlang() -> SelftestCheck:
        return _check("hypoexp_cdf Erlang limit", hypoexp_cdf([1.0, 1.0 + 1e-12], 1.0), 1 - 2 * math.exp(-1), 1e-6)

    def lemma1() -> SelftestCheck:
        f_2, g_2 = lemma1_integrals([0.0, 1.0], [1.0, 1.0])
        return _check("common-anchor gap (f2 - g2)/pi", (f_2 - g_2) / math.pi, 0.1, 1e-6)

    def collinear_route() -> SelftestCheck:
        model = NetworkModel.uniform_power([(0.0, 0.0), (5.0, 0.0), (10.0, 0.0)], alpha=4.0, lambda_e=1e-5)
        paths = {mode: route(model, 0, 2, mode).path for mode in EavesdropperMode}
        passed = all(p == Path.of(0, 1, 2) for p in paths.values())
        return SelftestCheck("collinear routing", passed, ", ".join(f"{m.value}: {p}" for m, p in paths.items()))

    def domination() -> SelftestCheck:
        config = parse_scenario("builtin:six_node")
        model, path = config.network(), config.scp_path()
        colluding = scp_exact_sweep(model, path, EavesdropperMode.COLLUDING, [1e-4])[0].value
        noncolluding = scp_exact_sweep(model, path, EavesdropperMode.NON_COLLUDING, [1e-4])[0].value
        return SelftestCheck(
            "colluding <= non-colluding", colluding <= noncolluding + 1e-8, f"{colluding:.8f} <= {noncolluding:.8f}"
        )

    return [quartic, gaussian, single_hop, gamma_identity, hypoexp_pair, hypoexp_erlang, lemma1, collinear_route, domination]


def cmd_selftest() -> list[SelftestCheck]:
    results = []
    for check in _selftest_battery():
        try:
            results.append(check())
        except SecRouteException as e:
            results.append(SelftestCheck(check.__name__, False, f"raised {type(e).__name__}: {e}"))
    return results
