"""
Sums of independent exponential variables with (possibly) distinct rates.

The closed form ``sum_i delta_i (1 - exp(-lambda_i y))`` divides by rate gaps, so rates
closer than ``MERGE_REL_GAP`` are merged. Vectors with a gap under ``CLOSED_FORM_REL_GAP``
or a weight above ``DELTA_LIMIT`` are evaluated phase by phase instead: the survival is the
sum over phases of the probability of still being in that phase at ``y``, and each term is a
divided difference of ``exp`` at ``-lambda_i y``. Divided differences over clusters narrower
than one unit come from a Taylor series about the cluster midpoint, so equal rates reach the
Erlang limit without cancellation.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import factorial

from secroute.custom_exceptions import NumericallyDegenerateRates

LOGGER = logging.getLogger(__name__)

MERGE_REL_GAP = 1e-6
CLOSED_FORM_REL_GAP = 1e-2
# largest partial-fraction weight the closed form may carry before cancellation shows
DELTA_LIMIT = 1e6
# phases with lambda * y above this are over long before y
SCALED_RATE_CAP = 1e12
TAYLOR_TERMS = 20

@dataclass(frozen=True)
class HypoExpRates:
    rates: tuple[float, ...]

    def __post_init__(self) -> None:
        rates = tuple(float(r) for r in self.rates)
        object.__setattr__(self, "rates", rates)
        if not rates:
            raise ValueError("at least one rate is required")
        if any(not r > 0 or not np.isfinite(r) for r in rates):
            raise ValueError(f"rates must be finite and > 0, got {rates}")

    def merged(self) -> tuple[float, ...]:
        """Rates sorted, with clusters closer than MERGE_REL_GAP replaced by their mean."""
        ordered = sorted(self.rates)
        clusters: list[list[float]] = [[ordered[0]]]
        for r in ordered[1:]:
            if (r - clusters[-1][-1]) / r < MERGE_REL_GAP:
                clusters[-1].append(r)
            else:
                clusters.append([r])
        out: list[float] = []
        for cluster in clusters:
            mean = float(np.mean(cluster))
            out.extend([mean] * len(cluster))
        return tuple(out)

    def deltas(self) -> np.ndarray:
        """Partial-fraction weights delta_i = prod_{j != i} lambda_j / (lambda_j - lambda_i)."""
        return _closed_form_deltas(np.asarray(self.rates))


def _min_rel_gap(rates: np.ndarray) -> np.ndarray:
    """Smallest relative gap between any two rates, along the last axis."""
    if rates.shape[-1] < 2:
        return np.full(rates.shape[:-1], np.inf)
    ordered = np.sort(rates, axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        gaps = np.diff(ordered, axis=-1) / ordered[..., 1:]
    gaps = np.where(np.isnan(gaps), 0.0, gaps)
    return gaps.min(axis=-1)


def _closed_form_deltas(rates: np.ndarray) -> np.ndarray:
    n = rates.shape[-1]
    diff = rates[..., None, :] - rates[..., :, None]
    eye = np.eye(n, dtype=bool)
    diff = np.where(eye, 1.0, diff)
    ratio = np.where(eye, 1.0, rates[..., None, :] / diff)
    return np.prod(ratio, axis=-1)


def _closed_form_ok(rates: np.ndarray) -> np.ndarray:
    """Rows of ``rates`` that the partial-fraction form evaluates without cancellation."""
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        ok = _min_rel_gap(rates) >= CLOSED_FORM_REL_GAP
        if ok.any():
            ok[ok] = np.max(np.abs(_closed_form_deltas(rates[ok])), axis=-1) <= DELTA_LIMIT
    return ok


def _exp_divided_difference_taylor(points: np.ndarray) -> np.ndarray:
    """exp[z_0, ..., z_m] for rows of ``points`` whose spread is below one."""
    m = points.shape[-1] - 1
    centre = 0.5 * (points.max(axis=-1) + points.min(axis=-1))
    shifted = points - centre[:, None]
    # complete homogeneous symmetric polynomials h_k of the shifted points
    h = np.zeros((points.shape[0], TAYLOR_TERMS))
    h[:, 0] = 1.0
    for column in shifted.T:
        for k in range(1, TAYLOR_TERMS):
            h[:, k] += column * h[:, k - 1]
    weights = 1.0 / factorial(np.arange(TAYLOR_TERMS) + m)
    return np.exp(centre) * (h @ weights)


def _divided_difference_survival(rates: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """
    P(sum > y) as sum_j prod_{i<j} (lambda_i y) * exp[w_0, ..., w_j] * exp(-lambda_0 y).

    Rates are sorted ascending and ``w_i = -(lambda_i - lambda_0) y``. Every term is
    non-negative, so the sum carries no cancellation. Returns shape (P, K).
    """
    n = rates.shape[-1]
    ordered = np.sort(rates, axis=-1)
    scaled = np.minimum(ordered[:, None, :] * ys[None, :, None], SCALED_RATE_CAP).reshape(-1, n)
    w = scaled[:, :1] - scaled
    table = np.exp(w)
    prefix = [table[:, 0]]
    for level in range(1, n):
        spread = w[:, :-level] - w[:, level:]
        with np.errstate(divide="ignore", invalid="ignore"):
            table = (table[:, :-1] - table[:, 1:]) / spread
        narrow = spread < 1.0
        if narrow.any():
            windows = sliding_window_view(w, level + 1, axis=1)
            table[narrow] = _exp_divided_difference_taylor(windows[narrow])
        prefix.append(table[:, 0])
    top = np.stack(prefix, axis=1)
    with np.errstate(divide="ignore"):
        log_scaled = np.log(scaled[:, :-1])
        log_weight = np.concatenate([np.zeros((scaled.shape[0], 1)), np.cumsum(log_scaled, axis=1)], axis=1)
        terms = np.exp(log_weight - scaled[:, :1] + np.log(np.maximum(top, 0.0)))
    survival = terms.sum(axis=1).reshape(rates.shape[0], ys.size)
    if not np.all(np.isfinite(survival)):
        raise NumericallyDegenerateRates(f"divided differences failed for rates {rates.tolist()}")
    return survival


def survival_grid(rates: np.ndarray, ys: Sequence[float] | np.ndarray) -> np.ndarray:
    """
    Vectorized P(sum_k X_k > y) for X_k ~ Exp(rates[..., k]) at every threshold in ``ys``.

    Args:
        rates: shape (..., n), rates along the last axis; zero rates give survival 1.
        ys: 1-D thresholds.

    Returns:
        Array of shape ``rates.shape[:-1] + (len(ys),)``.
    """
    rates = np.asarray(rates, dtype=float)
    ys = np.asarray(ys, dtype=float).reshape(-1)
    lead = rates.shape[:-1]
    flat = rates.reshape(-1, rates.shape[-1])
    out = np.empty((flat.shape[0], ys.size))
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        stable = _closed_form_ok(flat)
        if stable.any():
            sub = flat[stable]
            delta = _closed_form_deltas(sub)
            decay = np.exp(-sub[:, None, :] * ys[None, :, None])
            out[stable] = np.einsum("pn,pkn->pk", delta, decay)
    if (~stable).any():
        LOGGER.debug("divided-difference branch for %d near-degenerate rate vectors", int((~stable).sum()))
        out[~stable] = _divided_difference_survival(flat[~stable], ys)
    return np.clip(out, 0.0, 1.0).reshape(lead + (ys.size,))


def hypoexp_survival(rates: HypoExpRates | Sequence[float], y: float) -> float:
    if not isinstance(rates, HypoExpRates):
        rates = HypoExpRates(tuple(rates))
    if y < 0:
        raise ValueError(f"y must be >= 0, got {y}")
    merged = np.asarray(rates.merged())
    return float(survival_grid(merged, [y])[0])


def hypoexp_cdf(rates: HypoExpRates | Sequence[float], y: float) -> float:
    """
    CDF of a sum of independent exponentials at ``y``.

    Well-separated rates use the partial-fraction form with ``expm1`` terms; near-equal
    rates are merged and evaluated through the confluent (Erlang) limit.
    """
    if not isinstance(rates, HypoExpRates):
        rates = HypoExpRates(tuple(rates))
    if y < 0:
        raise ValueError(f"y must be >= 0, got {y}")
    merged = np.asarray(rates.merged())
    if _closed_form_ok(merged[None, :])[0]:
        delta = HypoExpRates(tuple(merged)).deltas()
        value = float(np.sum(delta * -np.expm1(-merged * y)))
    else:
        value = 1.0 - float(_divided_difference_survival(merged[None, :], np.asarray([y]))[0, 0])
    return min(1.0, max(0.0, value))
