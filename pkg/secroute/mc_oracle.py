"""
Monte-Carlo reference estimator of the secure connection probability.

Each trial draws the legitimate hop fades, one PPP realization of eavesdroppers at the
largest requested density with a uniform mark per point, and the per-hop eavesdropper
fades. A point belongs to the density-lambda sample when its mark is below
``lambda / lambda_max``, so every density in a sweep shares the same draws.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np
from scipy.stats import norm

from secroute.custom_exceptions import DegenerateWindow
from secroute.model import (
    EavesdropperMode,
    NetworkModel,
    Path,
    ScpEstimate,
    ScpMethod,
    hop_distances,
    legit_min_snr_rate,
    transmitter_positions,
    transmitter_powers,
)

LOGGER = logging.getLogger(__name__)

MAX_RESAMPLES = 100
WINDOW_CAP = 1e6


@dataclass(frozen=True)
class McConfig:
    """
    Args:
        trials: number of independent trials.
        seed: non-negative 64-bit key of the per-trial random streams.
        window: half-width of the square sampling window, or ``"auto"``.
        confidence_level: level of the Wald interval.
        tail_tolerance: bound on the far-field contribution the auto window may ignore.
        workers: threads the trials are split across; never changes the result.
    """

    trials: int = 10000
    seed: int = 0
    window: float | Literal["auto"] = "auto"
    confidence_level: float = 0.95
    tail_tolerance: float = 1e-3
    workers: int = 1

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must fit in an unsigned 64-bit integer, got {self.seed}")
        if self.window != "auto" and not (isinstance(self.window, (int, float)) and self.window > 0):
            raise ValueError(f"window must be 'auto' or a positive half-width, got {self.window!r}")
        if not 0.0 < self.confidence_level < 1.0:
            raise ValueError("confidence_level must lie in (0, 1)")
        if not self.tail_tolerance > 0:
            raise ValueError("tail_tolerance must be > 0")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass(frozen=True)
class SamplingWindow:
    center: tuple[float, float]
    half_width: float

    @property
    def area(self) -> float:
        return (2.0 * self.half_width) ** 2

    @property
    def low(self) -> np.ndarray:
        return np.asarray(self.center) - self.half_width

    @property
    def high(self) -> np.ndarray:
        return np.asarray(self.center) + self.half_width

    def contains(self, points: np.ndarray) -> bool:
        return bool(np.all((points >= self.low) & (points <= self.high)))


@dataclass(frozen=True)
class EavesdropperRealization:
    points: np.ndarray
    window: SamplingWindow

    def __post_init__(self) -> None:
        if not self.window.contains(self.points.reshape(-1, 2)):
            raise ValueError("eavesdropper realization has points outside its window")

    def __len__(self) -> int:
        return len(self.points)


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent stream for one trial; counter word 3 carries the trial index."""
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, 0, trial]))


def sample_ppp(lambda_e: float, window: SamplingWindow, rng: np.random.Generator) -> EavesdropperRealization:
    """Homogeneous PPP on the window: Poisson(lambda_e * area) points, i.i.d. uniform."""
    if lambda_e < 0:
        raise ValueError(f"lambda_e must be >= 0, got {lambda_e}")
    count = int(rng.poisson(lambda_e * window.area)) if lambda_e > 0 else 0
    points = rng.uniform(window.low, window.high, size=(count, 2))
    return EavesdropperRealization(points, window)


def path_center(model: NetworkModel, path: Path) -> tuple[float, float]:
    """Centre of the bounding box of the path's nodes."""
    pos = model.positions[list(path.node_indices)]
    mid = 0.5 * (pos.min(axis=0) + pos.max(axis=0))
    return float(mid[0]), float(mid[1])


def tail_bound(model: NetworkModel, path: Path, half_width: float) -> float:
    """Expected far-field leak per unit density from eavesdroppers beyond the window."""
    center = np.asarray(path_center(model, path))
    offsets = transmitter_positions(model, path) - center
    reach = float(np.max(np.hypot(offsets[:, 0], offsets[:, 1])))
    if half_width <= reach:
        return math.inf
    alpha = model.alpha
    weight = float(np.sum(transmitter_powers(model, path))) * legit_min_snr_rate(model, path)
    return 2.0 * math.pi * weight * (half_width - reach) ** (2.0 - alpha) / (alpha - 2.0)


def resolve_window(model: NetworkModel, path: Path, cfg: McConfig, lambda_max: float) -> SamplingWindow:
    """
    The sampling window for a run; ``auto`` doubles the half-width until the far-field
    leak bound falls under ``cfg.tail_tolerance``.
    """
    center = path_center(model, path)
    if cfg.window != "auto":
        return SamplingWindow(center, float(cfg.window))
    pos = model.positions[list(path.node_indices)]
    half_width = max(1.0, float(np.max(np.abs(pos - np.asarray(center)))) * 2.0)
    while lambda_max * tail_bound(model, path, half_width) > cfg.tail_tolerance:
        half_width *= 2.0
        if half_width >= WINDOW_CAP:
            LOGGER.warning("auto window reached its cap of %g for path %s", WINDOW_CAP, path)
            half_width = WINDOW_CAP
            break
    LOGGER.debug("auto window half-width %g for path %s at lambda %g", half_width, path, lambda_max)
    return SamplingWindow(center, half_width)


@dataclass(frozen=True)
class McSweep:
    """Per-trial secrecy outcomes, shape (trials, len(lambdas)), for both modes."""

    lambdas: tuple[float, ...]
    window: SamplingWindow
    colluding: np.ndarray
    noncolluding: np.ndarray
    confidence_level: float = 0.95
    eavesdropper_counts: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    @property
    def trials(self) -> int:
        return int(self.colluding.shape[0])

    def outcomes(self, mode: EavesdropperMode) -> np.ndarray:
        return self.colluding if mode is EavesdropperMode.COLLUDING else self.noncolluding

    def estimate(self, mode: EavesdropperMode, index: int = 0) -> ScpEstimate:
        hits = self.outcomes(mode)[:, index]
        p = float(np.mean(hits))
        z = float(norm.ppf(0.5 * (1.0 + self.confidence_level)))
        half = z * math.sqrt(p * (1.0 - p) / self.trials)
        return ScpEstimate(p, ScpMethod.MONTE_CARLO, ci_halfwidth=half, trials=self.trials)


class _TrialKernel:
    """Runs single trials of one (model, path, window) against a list of densities."""

    def __init__(self, model: NetworkModel, path: Path, lambdas: np.ndarray, window: SamplingWindow, seed: int) -> None:
        distances = np.asarray(hop_distances(model, path))
        self.alpha = model.alpha
        self.tx = transmitter_positions(model, path)
        self.powers = transmitter_powers(model, path)
        self.hop_gain = self.powers / distances**self.alpha
        self.lambda_max = float(lambdas.max())
        self.fractions = lambdas / self.lambda_max if self.lambda_max > 0 else np.zeros_like(lambdas)
        self.window = window
        self.seed = seed

    def _distances(self, points: np.ndarray) -> np.ndarray:
        delta = points[:, None, :] - self.tx[None, :, :]
        return np.hypot(delta[..., 0], delta[..., 1])

    def _resample_coincident(self, realization: EavesdropperRealization, rng: np.random.Generator) -> np.ndarray:
        points = realization.points
        dist = self._distances(points)
        resamples = 0
        while np.any(dist == 0.0):
            bad = np.flatnonzero(np.any(dist == 0.0, axis=1))
            resamples += len(bad)
            if resamples > MAX_RESAMPLES:
                raise DegenerateWindow(f"{resamples} eavesdropper samples coincided with a transmitter")
            points[bad] = rng.uniform(self.window.low, self.window.high, size=(len(bad), 2))
            dist = self._distances(points)
        return dist

    def __call__(self, trial: int) -> tuple[np.ndarray, np.ndarray, int]:
        rng = trial_rng(self.seed, trial)
        legit = float(np.min(self.hop_gain * rng.exponential(size=self.hop_gain.shape)))
        realization = sample_ppp(self.lambda_max, self.window, rng)
        dist = self._resample_coincident(realization, rng)
        count = len(realization)
        marks = rng.uniform(size=count)
        fades = rng.exponential(size=(count, len(self.powers)))
        # MRC over all hops at each eavesdropper
        snr = np.sum(self.powers * fades / dist**self.alpha, axis=1)
        active = marks[None, :] < self.fractions[:, None]
        pooled = np.where(active, snr[None, :], 0.0)
        colluding = pooled.sum(axis=1)
        strongest = pooled.max(axis=1, initial=0.0)
        return legit > colluding, legit > strongest, count


def simulate_scp_sweep(
    model: NetworkModel, path: Path, lambdas: Sequence[float], cfg: McConfig | None = None
) -> McSweep:
    """
    Estimate SCP for every density in ``lambdas`` and both eavesdropper modes from one
    set of draws. Deterministic in ``(cfg.seed, cfg.trials, window)`` for any worker count.
    """
    cfg = cfg or McConfig()
    lam = np.asarray(lambdas, dtype=float).reshape(-1)
    if lam.size == 0:
        raise ValueError("at least one lambda_e is required")
    if np.any(lam < 0) or not np.all(np.isfinite(lam)):
        raise ValueError(f"lambda_e values must be finite and >= 0, got {lam.tolist()}")
    hop_distances(model, path)
    window = resolve_window(model, path, cfg, float(lam.max()))
    kernel = _TrialKernel(model, path, lam, window, cfg.seed)

    def run_chunk(bounds: tuple[int, int]) -> list[tuple[np.ndarray, np.ndarray, int]]:
        return [kernel(t) for t in range(*bounds)]

    edges = np.linspace(0, cfg.trials, min(cfg.workers, cfg.trials) + 1).astype(int)
    chunks = list(zip(edges[:-1].tolist(), edges[1:].tolist()))
    if len(chunks) == 1:
        results = run_chunk(chunks[0])
    else:
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            results = [row for part in pool.map(run_chunk, chunks) for row in part]

    colluding = np.stack([r[0] for r in results])
    noncolluding = np.stack([r[1] for r in results])
    counts = np.asarray([r[2] for r in results], dtype=np.int64)
    LOGGER.debug(
        "mc %s: %d trials, window %g, mean eavesdroppers %.2f", path, cfg.trials, window.half_width, counts.mean()
    )
    return McSweep(tuple(lam.tolist()), window, colluding, noncolluding, cfg.confidence_level, counts)


def simulate_scp(model: NetworkModel, path: Path, mode: EavesdropperMode, cfg: McConfig | None = None) -> ScpEstimate:
    """Monte-Carlo SCP of ``path`` at the model's own density."""
    return simulate_scp_sweep(model, path, [model.lambda_e], cfg).estimate(mode, 0)
