"""Closed-form SCP approximations and the gamma-function constants behind them."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import integrate
from scipy.special import gamma, gammaln

from secroute.custom_exceptions import AlphaOutOfRange, InvalidPath, QuadratureNonConvergence
from secroute.model import NetworkModel, Path, ScpEstimate, ScpMethod, legit_min_snr_rate, path_weight_sum
from secroute.quadrature import QuadratureConfig, integrate_r2
from secroute.scp_analytic import bottleneck_expectation, laguerre_rule, path_geometry

LOGGER = logging.getLogger(__name__)


def _check_alpha(alpha: float) -> None:
    if not alpha > 2 or not math.isfinite(alpha):
        raise AlphaOutOfRange(alpha)


def k1(alpha: float, lambda_e: float) -> float:
    """pi * lambda_e * Gamma(1 + 2/alpha) * Gamma(1 - 2/alpha)."""
    _check_alpha(alpha)
    return float(math.pi * lambda_e * gamma(1.0 + 2.0 / alpha) * gamma(1.0 - 2.0 / alpha))


def k2(n_hops: int, alpha: float, lambda_e: float) -> float:
    """lambda_e * pi * Gamma(1 - 2/alpha) * Gamma(2/alpha + N) / Gamma(N)."""
    _check_alpha(alpha)
    if n_hops < 1:
        raise ValueError(f"n_hops must be >= 1, got {n_hops}")
    ratio = math.exp(gammaln(2.0 / alpha + n_hops) - gammaln(n_hops))
    return float(lambda_e * math.pi * gamma(1.0 - 2.0 / alpha) * ratio)


@dataclass(frozen=True)
class GammaConstants:
    alpha: float
    lambda_e: float

    def __post_init__(self) -> None:
        _check_alpha(self.alpha)

    @property
    def k1(self) -> float:
        return k1(self.alpha, self.lambda_e)

    def k2_of_n(self, n_hops: int) -> float:
        return k2(n_hops, self.alpha, self.lambda_e)


def scp_approx_colluding(
    model: NetworkModel,
    path: Path,
    quad: QuadratureConfig | None = None,
    *,
    anchor: int | None = None,
    force_quadrature: bool = False,
) -> ScpEstimate:
    """
    Colluding upper bound: every transmitter moved onto a common anchor node.

    With equal powers this is ``exp(-K2(N) * (sum d^alpha)^(2/alpha))``; otherwise the
    anchored plane integral is evaluated numerically. ``anchor`` is a position along the
    path's transmitters (default the source) and only matters for unequal powers.
    """
    if model.lambda_e == 0.0:
        return ScpEstimate(1.0, ScpMethod.APPROX)
    if model.equal_powers() and not force_quadrature:
        exponent = k2(path.hops, model.alpha, model.lambda_e) * path_weight_sum(model, path) ** (2.0 / model.alpha)
        return ScpEstimate(math.exp(-exponent), ScpMethod.APPROX)

    position = 0 if anchor is None else anchor
    if not 0 <= position < path.hops:
        raise InvalidPath(f"anchor position {position} outside 0..{path.hops - 1}")
    geo = path_geometry(model, path)
    scaled = geo.powers * geo.rate
    center = geo.transmitters[position]

    def integrand(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        r_a = ((x - center[0]) ** 2 + (y - center[1]) ** 2) ** (0.5 * model.alpha)
        with np.errstate(divide="ignore", invalid="ignore"):
            eps = scaled / (r_a[..., None] + scaled)
            return -np.expm1(np.sum(np.log1p(-eps), axis=-1))

    integral = integrate_r2(integrand, center, quad, scale=geo.radius)
    return ScpEstimate(min(1.0, math.exp(-model.lambda_e * integral)), ScpMethod.APPROX)


def scp_approx_noncolluding(model: NetworkModel, path: Path) -> ScpEstimate:
    """exp(-K1 * (sum_k p_k * sum_i d_i^alpha / p_i)^(2/alpha)), any powers."""
    if model.lambda_e == 0.0:
        return ScpEstimate(1.0, ScpMethod.APPROX)
    total_power = math.fsum(model.powers[i] for i in path.transmitters)
    base = total_power * legit_min_snr_rate(model, path)
    exponent = k1(model.alpha, model.lambda_e) * base ** (2.0 / model.alpha)
    return ScpEstimate(math.exp(-exponent), ScpMethod.APPROX)


def scp_colocated_noncolluding(model: NetworkModel, path: Path, quad: QuadratureConfig | None = None) -> ScpEstimate:
    """
    Non-colluding approximation with the transmitters co-located but the fading
    expectation kept outside the exponential; never below ``scp_approx_noncolluding``.
    """
    total_power = math.fsum(model.powers[i] for i in path.transmitters)
    return _single_source_expectation(model, path, total_power, quad)


def scp_noncolluding_upper_bound(model: NetworkModel, path: Path, quad: QuadratureConfig | None = None) -> ScpEstimate:
    """
    Upper bound on the exact non-colluding SCP: each eavesdropper's MRC sum is at least
    its strongest single-hop term, so only the largest transmit power is kept.
    """
    strongest = max(model.powers[i] for i in path.transmitters)
    return _single_source_expectation(model, path, strongest, quad)


def _single_source_expectation(
    model: NetworkModel, path: Path, power: float, quad: QuadratureConfig | None
) -> ScpEstimate:
    """E_m[exp(-lambda_e * pi * Gamma(1 + 2/alpha) * (power / m)^(2/alpha))], m ~ Exp(S)."""
    if model.lambda_e == 0.0:
        return ScpEstimate(1.0, ScpMethod.APPROX)
    quad = quad or QuadratureConfig()
    alpha = model.alpha
    scale = model.lambda_e * math.pi * gamma(1.0 + 2.0 / alpha) * (power * legit_min_snr_rate(model, path)) ** (2.0 / alpha)
    nodes, _ = laguerre_rule(alpha, quad.fading_quadrature_order)
    value = bottleneck_expectation(alpha, quad.fading_quadrature_order, scale * nodes ** (-2.0 / alpha), nodes)
    return ScpEstimate(min(1.0, max(0.0, value)), ScpMethod.APPROX)


def _one_minus_product(x: float, shifts: np.ndarray, scales: np.ndarray) -> float:
    y2 = (x + shifts) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        eps = np.where(scales > 0, scales / (y2 + scales), 0.0)
        return float(-np.expm1(np.sum(np.log1p(-eps))))


def _line_integral(shifts: np.ndarray, scales: np.ndarray, rel_tol: float, abs_tol: float, limit: int) -> float:
    breaks = sorted(set((-shifts).tolist()))
    segments = [(-np.inf, breaks[0])] + list(zip(breaks, breaks[1:])) + [(breaks[-1], np.inf)]
    parts = []
    for lo, hi in segments:
        result = integrate.quad(
            _one_minus_product, lo, hi, args=(shifts, scales), epsabs=abs_tol, epsrel=rel_tol, limit=limit, full_output=1
        )
        value, abserr = result[0], result[1]
        if len(result) == 4 and abserr > 10 * max(abs_tol, rel_tol * abs(value)):
            raise QuadratureNonConvergence(f"line integral on ({lo}, {hi}): {result[3]}")
        parts.append(value)
    return math.fsum(parts)


def lemma1_integrals(
    anchors: Sequence[float],
    scales: Sequence[float],
    *,
    common: int = 0,
    rel_tol: float = 1e-11,
    abs_tol: float = 1e-12,
    limit: int = 500,
) -> tuple[float, float]:
    """
    The two line integrals compared by the common-anchor bound.

    ``f_n`` integrates ``1 - prod_k 1 / (1 + B_k (x + a_k)^-2)`` with distinct anchors,
    ``g_n`` the same with every anchor replaced by ``anchors[common]``; ``f_n >= g_n``.
    """
    a = np.asarray(anchors, dtype=float)
    b = np.asarray(scales, dtype=float)
    if a.shape != b.shape or a.ndim != 1 or a.size == 0:
        raise ValueError("anchors and scales must be equal-length, non-empty 1-D sequences")
    if np.any(b < 0):
        raise ValueError("scales must be non-negative")
    f_n = _line_integral(a, b, rel_tol, abs_tol, limit)
    g_n = _line_integral(np.full_like(a, a[common]), b, rel_tol, abs_tol, limit)
    return f_n, g_n


def lemma1_closed_form(b1: float, b2: float, a_hat: float) -> tuple[float, float]:
    """Closed-form (f_2, g_2) for two terms whose anchors differ by ``a_hat``."""
    s1, s2 = math.sqrt(b1), math.sqrt(b2)
    cross = math.sqrt(b1 * b2)
    f2 = math.pi * (s1 + s2) * (b1 + cross + b2 + a_hat**2) / (b1 + 2 * cross + b2 + a_hat**2)
    g2 = math.pi * (b1 + cross + b2) / (s1 + s2) if s1 + s2 > 0 else 0.0
    return f2, g2
