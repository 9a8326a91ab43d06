"""
Exact secure connection probability of a fixed DF path.

Colluding eavesdroppers: the PGFL turns the expectation over the PPP into
``exp(-lambda_e * I)`` with ``I`` a plane integral of ``1 - prod_k 1 / (1 + p_k S / d_k^alpha)``.

Non-colluding eavesdroppers: the per-eavesdropper leak probability is a hypoexponential
survival function of the bottleneck SNR ``m``; ``m`` is exponential with rate
``S = sum_i d_i^alpha / p_i``, so the fading expectation is one-dimensional and is
taken with generalized Gauss-Laguerre nodes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.special import roots_genlaguerre

from secroute.hypoexp import HypoExpRates, hypoexp_cdf, survival_grid
from secroute.model import (
    EavesdropperMode,
    NetworkModel,
    Path,
    ScpEstimate,
    ScpMethod,
    legit_min_snr_rate,
    transmitter_positions,
    transmitter_powers,
)
from secroute.quadrature import QuadratureConfig, integrate_r2

__all__ = [
    "HypoExpRates",
    "PathGeometry",
    "QuadratureConfig",
    "hypoexp_cdf",
    "integrate_r2",
    "laguerre_rule",
    "noncolluding_leak_integrals",
    "path_geometry",
    "scp_exact_colluding",
    "scp_exact_noncolluding",
    "scp_exact_sweep",
]

LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class PathGeometry:
    transmitters: np.ndarray
    powers: np.ndarray
    rate: float
    alpha: float

    @property
    def centroid(self) -> np.ndarray:
        return self.transmitters.mean(axis=0)

    @property
    def radius(self) -> float:
        """Distance at which a single transmitter's term of the colluding integrand is 1/2."""
        return float(np.max((self.powers * self.rate) ** (1.0 / self.alpha)))

    def distances_alpha(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        dx = x[..., None] - self.transmitters[:, 0]
        dy = y[..., None] - self.transmitters[:, 1]
        return (dx * dx + dy * dy) ** (0.5 * self.alpha)


def path_geometry(model: NetworkModel, path: Path) -> PathGeometry:
    return PathGeometry(
        transmitters=transmitter_positions(model, path),
        powers=transmitter_powers(model, path),
        rate=legit_min_snr_rate(model, path),
        alpha=model.alpha,
    )


@lru_cache(maxsize=32)
def laguerre_rule(alpha: float, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights for the weight ``u**(-2/alpha) * exp(-u)`` on (0, inf)."""
    nodes, weights = roots_genlaguerre(order, -2.0 / alpha)
    return np.asarray(nodes), np.asarray(weights)


def bottleneck_expectation(alpha: float, order: int, exponent: np.ndarray, nodes: np.ndarray) -> float:
    """
    E[exp(-exponent(u))] for u ~ Exp(1), given ``exponent`` evaluated at ``nodes``.

    The leak exponent blows up like ``u**(-2/alpha)`` at the origin, so ``1 - exp(-x)``
    is integrated against the generalized weight and the result subtracted from one.
    """
    _, weights = laguerre_rule(alpha, order)
    leak = -np.expm1(-np.asarray(exponent, dtype=float))
    return float(1.0 - np.sum(weights * nodes ** (2.0 / alpha) * leak))


def _clip_probability(value: float) -> float:
    return min(1.0, max(0.0, value))


def colluding_exponent_integral(model: NetworkModel, path: Path, quad: QuadratureConfig | None = None) -> float:
    """Plane integral ``I`` with ``P_C = exp(-lambda_e * I)``."""
    geo = path_geometry(model, path)
    scaled = geo.powers * geo.rate

    def integrand(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        dist_a = geo.distances_alpha(x, y)
        with np.errstate(divide="ignore", invalid="ignore"):
            eps = scaled / (dist_a + scaled)
            return -np.expm1(np.sum(np.log1p(-eps), axis=-1))

    return integrate_r2(integrand, geo.centroid, quad, features=geo.transmitters, scale=geo.radius)


def scp_exact_colluding(model: NetworkModel, path: Path, quad: QuadratureConfig | None = None) -> ScpEstimate:
    """
    Exact SCP against colluding eavesdroppers.

    Raises:
        QuadratureNonConvergence: the plane integral did not meet tolerance.
    """
    if model.lambda_e == 0.0:
        return ScpEstimate(1.0, ScpMethod.EXACT)
    integral = colluding_exponent_integral(model, path, quad)
    value = float(np.exp(-model.lambda_e * integral))
    LOGGER.debug("exact colluding %s: I=%.10g scp=%.10g", path, integral, value)
    return ScpEstimate(_clip_probability(value), ScpMethod.EXACT)


def noncolluding_leak_integrals(
    model: NetworkModel, path: Path, quad: QuadratureConfig | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """
    Gauss-Laguerre nodes ``u_j`` and the plane integrals ``J(u_j / S)`` of the
    per-eavesdropper leak probability; all nodes share a single vector-valued pass.
    """
    quad = quad or QuadratureConfig()
    geo = path_geometry(model, path)
    nodes, _ = laguerre_rule(model.alpha, quad.fading_quadrature_order)
    thresholds = nodes / geo.rate

    def integrand(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        rates = geo.distances_alpha(x, y) / geo.powers
        return survival_grid(rates, thresholds)

    leak = integrate_r2(integrand, geo.centroid, quad, features=geo.transmitters, scale=geo.radius)
    return nodes, np.asarray(leak, dtype=float)


def scp_exact_noncolluding(model: NetworkModel, path: Path, quad: QuadratureConfig | None = None) -> ScpEstimate:
    """
    Exact SCP against non-colluding eavesdroppers.

    For each Gauss-Laguerre node ``u_j`` the bottleneck SNR is ``m_j = u_j / S`` and the
    leak integral ``J(m_j)`` of the hypoexponential survival is computed over the plane.
    """
    return scp_exact_sweep(model, path, EavesdropperMode.NON_COLLUDING, [model.lambda_e], quad)[0]


def scp_exact_sweep(
    model: NetworkModel,
    path: Path,
    mode: EavesdropperMode,
    lambdas: Sequence[float],
    quad: QuadratureConfig | None = None,
) -> list[ScpEstimate]:
    """
    Exact SCP at every density in ``lambdas``; the plane integrals do not depend on the
    density, so they are computed once.
    """
    quad = quad or QuadratureConfig()
    if all(lam == 0.0 for lam in lambdas):
        return [ScpEstimate(1.0, ScpMethod.EXACT) for _ in lambdas]
    out: list[ScpEstimate] = []
    if mode is EavesdropperMode.COLLUDING:
        integral = colluding_exponent_integral(model, path, quad)
        for lam in lambdas:
            value = 1.0 if lam == 0.0 else float(np.exp(-lam * integral))
            out.append(ScpEstimate(_clip_probability(value), ScpMethod.EXACT))
        return out
    nodes, leak = noncolluding_leak_integrals(model, path, quad)
    for lam in lambdas:
        value = 1.0 if lam == 0.0 else bottleneck_expectation(model.alpha, quad.fading_quadrature_order, lam * leak, nodes)
        out.append(ScpEstimate(_clip_probability(value), ScpMethod.EXACT))
    LOGGER.debug("exact %s %s at %d densities", mode.value, path, len(out))
    return out
