"""
Highest-SCP route selection.

The colluding and non-colluding approximations both rank a path by a function of its
hop count and of ``sum d^alpha`` that grows in each argument. Round ``v`` of a
Bellman-Ford pass gives the lightest path with at most ``v`` hops, so scanning every
round and keeping the best metric finds the optimum over all simple paths.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import networkx as nx
import numpy as np

from secroute.custom_exceptions import InvalidPath, NoRoute, TooLarge, UnequalPowers
from secroute.model import EavesdropperMode, NetworkModel, Path, legit_min_snr_rate, path_weight_sum
from secroute.scp_approx import k2

LOGGER = logging.getLogger(__name__)

Objective = Callable[[Path], float]


@dataclass(frozen=True)
class WeightedGraph:
    """Symmetric ``d^alpha`` link weights; ``inf`` marks a pruned link."""

    weights: np.ndarray

    def __post_init__(self) -> None:
        w = self.weights
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError(f"weights must be square, got shape {w.shape}")
        if w.shape[0] < 2:
            raise ValueError("a graph needs at least 2 nodes")

    @property
    def n_nodes(self) -> int:
        return int(self.weights.shape[0])

    def has_edge(self, i: int, j: int) -> bool:
        return i != j and math.isfinite(self.weights[i, j])

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(range(self.n_nodes))
        for i in range(self.n_nodes):
            for j in range(i + 1, self.n_nodes):
                if self.has_edge(i, j):
                    graph.add_edge(i, j, weight=float(self.weights[i, j]))
        return graph


def build_graph(model: NetworkModel, connectivity_radius: float | None = None) -> WeightedGraph:
    """
    Link weights ``d_ij^alpha``, computed per pair the same way ``path_weight_sum``
    computes a hop so path sums agree to the last bit.
    """
    n = model.n_nodes
    weights = np.full((n, n), np.inf)
    for i in range(n):
        xi, yi = model.nodes[i]
        for j in range(n):
            if i == j:
                continue
            xj, yj = model.nodes[j]
            d = math.hypot(xj - xi, yj - yi)
            if d == 0.0:
                continue
            if connectivity_radius is not None and d > connectivity_radius:
                continue
            weights[i, j] = d**model.alpha
    return WeightedGraph(weights)


@dataclass(frozen=True)
class HopBoundedEntry:
    hop_bound: int
    path: Path
    weight_sum: float

    @property
    def hops(self) -> int:
        return self.path.hops


@dataclass(frozen=True)
class HopBoundedTable:
    src: int
    dst: int
    entries: tuple[HopBoundedEntry, ...]

    def entry(self, hop_bound: int) -> HopBoundedEntry | None:
        for e in self.entries:
            if e.hop_bound == hop_bound:
                return e
        return None

    def __len__(self) -> int:
        return len(self.entries)


def _path_key(weight: float, path: tuple[int, ...]) -> tuple[float, int, tuple[int, ...]]:
    return weight, len(path), path


def hop_bounded_shortest_paths(graph: WeightedGraph, src: int, dst: int) -> HopBoundedTable:
    """
    For every hop bound v in 1..N-1, the lightest simple src->dst path of at most v hops.

    Ties go to fewer hops, then to the lexicographically smallest node sequence.
    """
    n = graph.n_nodes
    if src == dst:
        raise InvalidPath("source and destination must differ")
    if not (0 <= src < n and 0 <= dst < n):
        raise InvalidPath(f"endpoints {src}, {dst} outside 0..{n - 1}")

    weights = graph.weights
    dist = np.full(n, np.inf)
    dist[src] = 0.0
    paths: list[tuple[int, ...] | None] = [None] * n
    paths[src] = (src,)
    on_path = np.zeros((n, n), dtype=bool)
    on_path[src, src] = True

    entries: list[HopBoundedEntry] = []
    for v in range(1, n):
        candidate = dist[:, None] + weights
        # a predecessor whose stored path already visits j cannot extend to j
        candidate[on_path] = np.inf
        best = candidate.min(axis=0)
        new_dist = dist.copy()
        new_paths = list(paths)
        changed = False
        for j in np.flatnonzero(best <= dist).tolist():
            if j == src or not math.isfinite(best[j]):
                continue
            current = _path_key(dist[j], paths[j]) if paths[j] is not None else None
            for i in np.flatnonzero(candidate[:, j] == best[j]).tolist():
                key = _path_key(float(best[j]), paths[i] + (j,))
                if current is None or key < current:
                    current = key
            if current is not None and current[2] != paths[j]:
                new_dist[j], new_paths[j] = current[0], current[2]
                changed = True
        for j in range(n):
            if new_paths[j] != paths[j]:
                on_path[j] = False
                on_path[j, list(new_paths[j])] = True
        dist, paths = new_dist, new_paths
        if paths[dst] is not None:
            entries.append(HopBoundedEntry(v, Path(paths[dst]), float(dist[dst])))
        if not changed:
            last = entries[-1] if entries else None
            if last is not None:
                entries.extend(HopBoundedEntry(u, last.path, last.weight_sum) for u in range(v + 1, n))
            LOGGER.debug("bellman-ford %d->%d settled after %d rounds", src, dst, v)
            break
    return HopBoundedTable(src, dst, tuple(entries))


def colluding_metric(weight_sum: float, hops: int, alpha: float, lambda_e: float) -> float:
    """K2(hops) * weight_sum^(2/alpha); smaller is more secure."""
    if weight_sum <= 0:
        raise ValueError(f"weight_sum must be > 0, got {weight_sum}")
    return k2(hops, alpha, lambda_e) * weight_sum ** (2.0 / alpha)


def noncolluding_metric(weight_sum: float, hops: int, alpha: float) -> float:
    """(hops * weight_sum)^(2/alpha); the constant K1 factor is dropped."""
    if hops < 1 or weight_sum <= 0:
        raise ValueError("hops must be >= 1 and weight_sum > 0")
    return (hops * weight_sum) ** (2.0 / alpha)


def general_noncolluding_metric(model: NetworkModel, path: Path) -> float:
    """(sum_k p_k * sum_i d_i^alpha / p_i)^(2/alpha), valid for unequal powers."""
    total_power = math.fsum(model.powers[i] for i in path.transmitters)
    return (total_power * legit_min_snr_rate(model, path)) ** (2.0 / model.alpha)


def path_metric(model: NetworkModel, path: Path, mode: EavesdropperMode) -> float:
    weight_sum = path_weight_sum(model, path)
    if mode is EavesdropperMode.COLLUDING:
        return colluding_metric(weight_sum, path.hops, model.alpha, model.lambda_e)
    return noncolluding_metric(weight_sum, path.hops, model.alpha)


def _ranking_metric(entry: HopBoundedEntry, alpha: float, mode: EavesdropperMode) -> float:
    # density is a positive factor of the colluding metric, so rank with lambda_e = 1
    if mode is EavesdropperMode.COLLUDING:
        return colluding_metric(entry.weight_sum, entry.hops, alpha, 1.0)
    return noncolluding_metric(entry.weight_sum, entry.hops, alpha)


@dataclass(frozen=True)
class RouteResult:
    path: Path
    metric_value: float
    mode: EavesdropperMode
    table: HopBoundedTable


def route(
    model: NetworkModel,
    src: int,
    dst: int,
    mode: EavesdropperMode,
    *,
    connectivity_radius: float | None = None,
) -> RouteResult:
    """
    Highest-SCP path under the mode's approximation.

    Raises:
        UnequalPowers: node powers differ beyond relative 1e-12.
        NoRoute: ``connectivity_radius`` leaves ``dst`` unreachable.
    """
    if not model.equal_powers():
        raise UnequalPowers(f"routing assumes equal transmit powers, got {sorted(set(model.powers))}")
    graph = build_graph(model, connectivity_radius)
    table = hop_bounded_shortest_paths(graph, src, dst)
    if not table.entries:
        raise NoRoute(f"node {dst} is unreachable from {src}")

    distinct = {e.path: e for e in table.entries}
    chosen = min(
        distinct.values(),
        key=lambda e: (_ranking_metric(e, model.alpha, mode), e.hops, e.path.node_indices),
    )
    metric = path_metric(model, chosen.path, mode)
    LOGGER.debug("route %s %d->%d: %s metric %.10g", mode.value, src, dst, chosen.path, metric)
    return RouteResult(chosen.path, metric, mode, table)


def exhaustive_route(
    model: NetworkModel,
    src: int,
    dst: int,
    objective: Objective,
    *,
    max_nodes_guard: int = 12,
    lower_bound: Objective | None = None,
    connectivity_radius: float | None = None,
) -> Path:
    """
    Objective-minimal simple path by enumeration.

    With ``lower_bound`` (``lower_bound(p) <= objective(p)`` for every path), paths are
    visited in increasing bound order and enumeration stops once the bound exceeds the
    best objective seen. Ties go to fewer hops, then to the lexicographic node sequence.

    Raises:
        TooLarge: the model has more than ``max_nodes_guard`` nodes.
        NoRoute: no simple path joins ``src`` and ``dst``.
    """
    if model.n_nodes > max_nodes_guard:
        raise TooLarge(f"{model.n_nodes} nodes exceeds the exhaustive-search guard of {max_nodes_guard}")
    if src == dst:
        raise InvalidPath("source and destination must differ")
    graph = build_graph(model, connectivity_radius).to_networkx()
    candidates = [Path(tuple(p)) for p in nx.all_simple_paths(graph, src, dst)]
    if not candidates:
        raise NoRoute(f"node {dst} is unreachable from {src}")

    def tiebreak(p: Path) -> tuple[int, tuple[int, ...]]:
        return p.hops, p.node_indices

    if lower_bound is not None:
        bounded = sorted(((lower_bound(p), tiebreak(p), p) for p in candidates), key=lambda t: (t[0], t[1]))
        order: Sequence[tuple[float, Path]] = [(b, p) for b, _, p in bounded]
    else:
        order = [(-math.inf, p) for p in sorted(candidates, key=tiebreak)]

    best: tuple[float, tuple[int, tuple[int, ...]], Path] | None = None
    evaluated = 0
    for bound, path in order:
        if best is not None and bound > best[0]:
            break
        value = objective(path)
        evaluated += 1
        key = (value, tiebreak(path), path)
        if best is None or key[:2] < best[:2]:
            best = key
    assert best is not None
    LOGGER.debug("exhaustive %d->%d: %d of %d paths evaluated", src, dst, evaluated, len(candidates))
    return best[2]
