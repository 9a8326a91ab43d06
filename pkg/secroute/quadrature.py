"""
Adaptive polar quadrature over the whole plane.

Panels are (angle, t) rectangles with the radius mapped by ``r = scale * t / (1 - t)``;
each panel is integrated with tensor Gauss-Legendre rules of order n and 2n, and the
difference is its error estimate. Panels carrying more than their share of the error
are split in four until the total estimate meets tolerance.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from secroute.custom_exceptions import QuadratureNonConvergence

LOGGER = logging.getLogger(__name__)

Integrand = Callable[[np.ndarray, np.ndarray], np.ndarray]

_BASE_RADIAL_BREAKS = (0.0, 0.5, 0.8, 0.95, 0.99, 1.0)


@dataclass(frozen=True)
class QuadratureConfig:
    rel_tol: float = 1e-6
    abs_tol: float = 1e-10
    max_subdivisions: int = 20000
    fading_quadrature_order: int = 64
    gauss_order: int = 8
    angular_panels: int = 8

    def __post_init__(self) -> None:
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("quadrature tolerances must be > 0")
        if self.max_subdivisions < 1 or self.fading_quadrature_order < 1:
            raise ValueError("subdivision budget and fading order must be >= 1")
        if self.gauss_order < 2 or self.angular_panels < 1:
            raise ValueError("gauss_order must be >= 2 and angular_panels >= 1")


@lru_cache(maxsize=16)
def _gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(n)
    return nodes, weights


def _merge_breaks(values: Sequence[float], lo: float, hi: float, min_gap: float) -> list[float]:
    out: list[float] = []
    for v in sorted(values):
        if v < lo or v > hi:
            continue
        if out and v - out[-1] < min_gap:
            continue
        out.append(v)
    if out[-1] != hi:
        if hi - out[-1] < min_gap:
            out[-1] = hi
        else:
            out.append(hi)
    return out


class _PanelRule:
    """Evaluates batches of panels with the order-n and order-2n tensor rules."""

    def __init__(self, f: Integrand, center: np.ndarray, scale: float, order: int) -> None:
        self.f = f
        self.cx, self.cy = float(center[0]), float(center[1])
        self.scale = scale
        self.low = _gauss_legendre(order)
        self.high = _gauss_legendre(2 * order)
        self.vector = False

    def _apply(self, panels: np.ndarray, rule: tuple[np.ndarray, np.ndarray]) -> np.ndarray:
        x, w = rule
        th_a, th_b, t_a, t_b = panels.T
        th_half = 0.5 * (th_b - th_a)
        t_half = 0.5 * (t_b - t_a)
        theta = (0.5 * (th_a + th_b))[:, None] + th_half[:, None] * x[None, :]
        t = (0.5 * (t_a + t_b))[:, None] + t_half[:, None] * x[None, :]
        one_minus = 1.0 - t
        r = self.scale * t / one_minus
        # polar area element r dr dtheta, with dr/dt = scale / (1 - t)^2
        radial_w = w[None, :] * t_half[:, None] * r * self.scale / one_minus**2
        angular_w = w[None, :] * th_half[:, None]
        xs = self.cx + r[:, None, :] * np.cos(theta)[:, :, None]
        ys = self.cy + r[:, None, :] * np.sin(theta)[:, :, None]
        values = np.asarray(self.f(xs, ys), dtype=float)
        weight = angular_w[:, :, None] * radial_w[:, None, :]
        if values.ndim == 3:
            return np.einsum("pij,pij->p", values, weight)[:, None]
        self.vector = True
        return np.einsum("pijk,pij->pk", values, weight)

    def __call__(self, panels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        coarse = self._apply(panels, self.low)
        fine = self._apply(panels, self.high)
        return fine, np.abs(fine - coarse)


def integrate_r2(
    f: Integrand,
    center: Sequence[float] = (0.0, 0.0),
    quad: QuadratureConfig | None = None,
    *,
    features: Sequence[Sequence[float]] = (),
    scale: float | None = None,
) -> float | np.ndarray:
    """
    Integrate ``f`` over the plane.

    Args:
        f: vectorized integrand ``f(x, y)``; returns an array shaped like ``x`` or, for a
            vector-valued integrand, ``x.shape + (K,)``. Must be non-negative and decay at
            least like ``r**-alpha`` with ``alpha > 2``.
        center: polar origin.
        quad: tolerances and panel budget.
        features: points where the integrand has structure; angular panel boundaries are
            forced toward each one and radial boundaries to its distance.
        scale: radial length scale of the ``t / (1 - t)`` map; defaults to the farthest
            feature distance, or 1.

    Returns:
        The integral, a float or an array of K components.

    Raises:
        QuadratureNonConvergence: the panel budget ran out before tolerance was met.
    """
    quad = quad or QuadratureConfig()
    c = np.asarray(center, dtype=float)
    feats = np.asarray(features, dtype=float).reshape(-1, 2) - c
    dists = np.hypot(feats[:, 0], feats[:, 1])
    if scale is None:
        scale = float(dists.max()) if dists.size and dists.max() > 0 else 1.0

    two_pi = 2.0 * math.pi
    angle_breaks = [two_pi * k / quad.angular_panels for k in range(quad.angular_panels + 1)]
    for (fx, fy), d in zip(feats, dists):
        if d > 0:
            angle_breaks.append(math.atan2(fy, fx) % two_pi)
    angles = _merge_breaks(angle_breaks, 0.0, two_pi, 1e-9)

    radial_breaks = list(_BASE_RADIAL_BREAKS) + [d / (scale + d) for d in dists if d > 0]
    radii = _merge_breaks(radial_breaks, 0.0, 1.0, 1e-9)

    panels = np.array(
        [(a0, a1, t0, t1) for a0, a1 in zip(angles, angles[1:]) for t0, t1 in zip(radii, radii[1:])],
        dtype=float,
    )
    rule = _PanelRule(f, c, scale, quad.gauss_order)
    values, errors = rule(panels)
    rounds = 0
    while True:
        totals = np.array([math.fsum(col) for col in values.T])
        total_err = errors.sum(axis=0)
        tol = np.maximum(quad.abs_tol, quad.rel_tol * np.abs(totals))
        if np.all(total_err <= tol):
            break
        if len(panels) > quad.max_subdivisions:
            raise QuadratureNonConvergence(
                f"{len(panels)} panels, error {float(np.max(total_err / tol)):.3g}x tolerance"
            )
        share = np.max(errors / tol[None, :], axis=1)
        split = share > 1.0 / len(panels)
        children = _split(panels[split])
        child_values, child_errors = rule(children)
        # keep parent order so summation order is a pure function of the inputs
        keep = ~split
        order = np.concatenate([np.flatnonzero(keep), np.repeat(np.flatnonzero(split), 4)])
        merged_panels = np.concatenate([panels[keep], children])
        merged_values = np.concatenate([values[keep], child_values])
        merged_errors = np.concatenate([errors[keep], child_errors])
        ranking = np.argsort(order, kind="stable")
        panels = merged_panels[ranking]
        values = merged_values[ranking]
        errors = merged_errors[ranking]
        rounds += 1
    LOGGER.debug("integrate_r2: %d panels after %d refinement rounds", len(panels), rounds)
    if not rule.vector:
        return float(totals[0])
    return totals


def _split(panels: np.ndarray) -> np.ndarray:
    th_a, th_b, t_a, t_b = panels.T
    th_m = 0.5 * (th_a + th_b)
    t_m = 0.5 * (t_a + t_b)
    quads = [
        (th_a, th_m, t_a, t_m),
        (th_a, th_m, t_m, t_b),
        (th_m, th_b, t_a, t_m),
        (th_m, th_b, t_m, t_b),
    ]
    stacked = np.stack([np.stack(q, axis=1) for q in quads], axis=1)
    return stacked.reshape(-1, 4)
