"""
Domain types, geometry and the secrecy-condition quantities shared by every engine.

Noise power is normalized to one, so a node's ``power`` is its transmit-power-to-noise
ratio and the legitimate SNR of hop i is ``p_i |h_i|^2 / d_i^alpha``.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from secroute.custom_exceptions import AlphaOutOfRange, InvalidModel, InvalidPath, ZeroDistance


class EavesdropperMode(str, Enum):
    COLLUDING = "colluding"
    NON_COLLUDING = "noncolluding"


class ScpMethod(str, Enum):
    MONTE_CARLO = "mc"
    EXACT = "exact"
    APPROX = "approx"


@dataclass(frozen=True)
class NetworkModel:
    """
    Legitimate node layout plus the propagation and eavesdropper parameters.

    Args:
        nodes: 2-D positions, dimensionless length units.
        powers: per-node transmit power (linear, noise normalized to 1).
        alpha: path-loss exponent, strictly greater than 2.
        lambda_e: eavesdropper density in points per unit area.
    """

    nodes: tuple[tuple[float, float], ...]
    powers: tuple[float, ...]
    alpha: float
    lambda_e: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", tuple((float(x), float(y)) for x, y in self.nodes))
        object.__setattr__(self, "powers", tuple(float(p) for p in self.powers))
        if not self.alpha > 2 or not math.isfinite(self.alpha):
            raise AlphaOutOfRange(self.alpha)
        if len(self.nodes) != len(self.powers):
            raise InvalidModel(f"{len(self.nodes)} nodes but {len(self.powers)} powers")
        if not self.lambda_e >= 0 or not math.isfinite(self.lambda_e):
            raise InvalidModel(f"lambda_e must be finite and >= 0, got {self.lambda_e!r}")
        for p in self.powers:
            if not p > 0 or not math.isfinite(p):
                raise InvalidModel(f"powers must be finite and > 0, got {p!r}")
        for x, y in self.nodes:
            if not (math.isfinite(x) and math.isfinite(y)):
                raise InvalidModel(f"node position ({x}, {y}) is not finite")

    @classmethod
    def uniform_power(
        cls, nodes: Sequence[tuple[float, float]], alpha: float, lambda_e: float, power: float = 1.0
    ) -> NetworkModel:
        return cls(nodes=tuple(nodes), powers=(power,) * len(nodes), alpha=alpha, lambda_e=lambda_e)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def positions(self) -> np.ndarray:
        return np.asarray(self.nodes, dtype=float).reshape(-1, 2)

    def with_lambda(self, lambda_e: float) -> NetworkModel:
        return dataclasses.replace(self, lambda_e=lambda_e)

    def equal_powers(self, rel_tol: float = 1e-12) -> bool:
        ref = self.powers[0]
        return all(math.isclose(p, ref, rel_tol=rel_tol, abs_tol=0.0) for p in self.powers)


@dataclass(frozen=True)
class Path:
    """Ordered legitimate node indices from source to destination."""

    node_indices: tuple[int, ...]

    def __post_init__(self) -> None:
        indices = tuple(int(i) for i in self.node_indices)
        object.__setattr__(self, "node_indices", indices)
        if len(indices) < 2:
            raise InvalidPath(f"a path needs at least 2 nodes, got {list(indices)}")
        if len(set(indices)) != len(indices):
            raise InvalidPath(f"path repeats a node: {list(indices)}")

    @classmethod
    def of(cls, *indices: int) -> Path:
        return cls(tuple(indices))

    @property
    def hops(self) -> int:
        return len(self.node_indices) - 1

    @property
    def transmitters(self) -> tuple[int, ...]:
        return self.node_indices[:-1]

    def __str__(self) -> str:
        return "-".join(str(i) for i in self.node_indices)


@dataclass(frozen=True)
class ScpEstimate:
    value: float
    method: ScpMethod
    ci_halfwidth: float | None = None
    trials: int | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"SCP must lie in [0, 1], got {self.value!r}")
        is_mc = self.method is ScpMethod.MONTE_CARLO
        if is_mc != (self.ci_halfwidth is not None):
            raise ValueError("ci_halfwidth is present exactly for Monte-Carlo estimates")
        if self.ci_halfwidth is not None and self.ci_halfwidth < 0:
            raise ValueError("ci_halfwidth must be non-negative")


def _check_indices(model: NetworkModel, path: Path) -> None:
    for i in path.node_indices:
        if not 0 <= i < model.n_nodes:
            raise InvalidPath(f"node index {i} outside 0..{model.n_nodes - 1}")


def hop_distances(model: NetworkModel, path: Path) -> list[float]:
    """Euclidean length of every hop, source first."""
    _check_indices(model, path)
    distances = []
    for a, b in zip(path.node_indices, path.node_indices[1:]):
        (xa, ya), (xb, yb) = model.nodes[a], model.nodes[b]
        d = math.hypot(xb - xa, yb - ya)
        if d == 0.0:
            raise ZeroDistance(f"nodes {a} and {b} are co-located")
        distances.append(d)
    return distances


def legit_min_snr_rate(model: NetworkModel, path: Path) -> float:
    """
    Rate of the exponential bottleneck SNR min_i p_i |h_i|^2 / d_i^alpha.

    Returns:
        sum_i d_i^alpha / p_i over the hops of the path.
    """
    distances = hop_distances(model, path)
    return math.fsum(d**model.alpha / model.powers[i] for d, i in zip(distances, path.transmitters))


def path_weight_sum(model: NetworkModel, path: Path) -> float:
    """Sum of d^alpha accumulated from the source, in path order."""
    total = 0.0
    for d in hop_distances(model, path):
        total += d**model.alpha
    return total


def transmitter_positions(model: NetworkModel, path: Path) -> np.ndarray:
    _check_indices(model, path)
    return model.positions[list(path.transmitters)]


def transmitter_powers(model: NetworkModel, path: Path) -> np.ndarray:
    return np.asarray([model.powers[i] for i in path.transmitters], dtype=float)
