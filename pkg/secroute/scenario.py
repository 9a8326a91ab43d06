"""
Scenario files.

A scenario is a line-oriented ``key = value`` file; ``#`` starts a comment and ``node``
may repeat (``node = x, y[, power]``). ``builtin:<name>`` loads one of the scenarios
shipped in ``secroute/scenarios``.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path as FsPath
from typing import Any, Callable, Literal

import numpy as np

from secroute.custom_exceptions import AlphaOutOfRange, InvalidModel, ScenarioError
from secroute.mc_oracle import McConfig
from secroute.model import EavesdropperMode, NetworkModel, Path, ScpMethod

LOGGER = logging.getLogger(__name__)

BUILTIN_PREFIX = "builtin:"

ALL_MODES = (EavesdropperMode.COLLUDING, EavesdropperMode.NON_COLLUDING)
ALL_METHODS = (ScpMethod.MONTE_CARLO, ScpMethod.EXACT, ScpMethod.APPROX)

# keys that never change a result and so stay out of the config hash
HASH_NEUTRAL_KEYS = frozenset({"workers", "out"})


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything a CLI command needs; defaults follow the evaluation setup (alpha 4, 50x50 square)."""

    name: str = "<scenario>"
    nodes: tuple[tuple[float, float], ...] | None = None
    node_powers: tuple[float, ...] | None = None
    power: float = 1.0
    random_nodes: int | None = None
    side: float = 50.0
    alpha: float = 4.0
    lambdas: tuple[float, ...] = (1e-5,)
    src: int = 0
    dst: int | None = None
    path: tuple[int, ...] | None = None
    modes: tuple[EavesdropperMode, ...] = ALL_MODES
    methods: tuple[ScpMethod, ...] = ALL_METHODS
    trials: int = 10000
    seed: int = 0
    window: float | Literal["auto"] = "auto"
    confidence: float = 0.95
    tail_tolerance: float = 1e-3
    workers: int = 1
    out: str | None = None
    study_nodes: tuple[int, ...] = (4, 6, 8)
    study_trials: int = 200
    exact_benchmark: bool = True
    exact_benchmark_max: int = 10
    metric_benchmark_max: int = 12
    connectivity_radius: float | None = None

    def __post_init__(self) -> None:
        if not self.alpha > 2 or not math.isfinite(self.alpha):
            raise AlphaOutOfRange(self.alpha)
        if (self.nodes is None) == (self.random_nodes is None):
            raise ScenarioError("exactly one of 'node' entries or 'random_nodes' is required", self.name)
        if self.n_nodes < 2:
            raise ScenarioError(f"a scenario needs at least 2 nodes, got {self.n_nodes}", self.name)
        if any(not lam >= 0 or not math.isfinite(lam) for lam in self.lambdas) or not self.lambdas:
            raise ScenarioError(f"lambda_e values must be finite and >= 0, got {list(self.lambdas)}", self.name)
        if not 0 <= self.src < self.n_nodes or not 0 <= self.destination < self.n_nodes:
            raise ScenarioError(f"src/dst must lie in 0..{self.n_nodes - 1}", self.name)
        if self.src == self.destination:
            raise ScenarioError("src and dst must differ", self.name)
        if self.path is not None:
            if any(not 0 <= i < self.n_nodes for i in self.path):
                raise ScenarioError(f"path {list(self.path)} references nodes outside 0..{self.n_nodes - 1}", self.name)
            if len(self.path) < 2:
                raise ScenarioError("path needs at least 2 nodes", self.name)
        if any(n < 2 for n in self.study_nodes):
            raise ScenarioError(f"study_nodes must all be >= 2, got {list(self.study_nodes)}", self.name)
        if self.study_trials < 1:
            raise ScenarioError(f"study_trials must be >= 1, got {self.study_trials}", self.name)
        if self.side <= 0 or self.power <= 0:
            raise ScenarioError("side and power must be > 0", self.name)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes) if self.nodes is not None else int(self.random_nodes or 0)

    @property
    def destination(self) -> int:
        return self.n_nodes - 1 if self.dst is None else self.dst

    @property
    def lambda_max(self) -> float:
        return max(self.lambdas)

    def network(self, trial: int = 0, n_nodes: int | None = None) -> NetworkModel:
        """The legitimate network; random layouts are a pure function of (seed, N_L, trial)."""
        if self.nodes is not None and n_nodes is None:
            powers = self.node_powers or (self.power,) * len(self.nodes)
            return NetworkModel(self.nodes, powers, self.alpha, self.lambda_max)
        count = n_nodes if n_nodes is not None else self.n_nodes
        layout = random_placement(count, self.side, self.seed, trial)
        return NetworkModel.uniform_power(layout, self.alpha, self.lambda_max, self.power)

    def scp_path(self) -> Path:
        if self.path is None:
            raise ScenarioError("this command needs a 'path' entry", self.name)
        return Path(self.path)

    def mc_config(self) -> McConfig:
        return McConfig(
            trials=self.trials,
            seed=self.seed,
            window=self.window,
            confidence_level=self.confidence,
            tail_tolerance=self.tail_tolerance,
            workers=self.workers,
        )

    def with_overrides(self, **overrides: Any) -> ScenarioConfig:
        """Copy with non-None overrides applied (CLI flags win over file values)."""
        changes = {k: v for k, v in overrides.items() if v is not None}
        return dataclasses.replace(self, **changes) if changes else self

    def as_dict(self) -> dict[str, Any]:
        """JSON-ready view used for the config hash and sidecar reports."""
        out: dict[str, Any] = {}
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                value = [v.value if isinstance(v, (EavesdropperMode, ScpMethod)) else v for v in value]
                value = [list(v) if isinstance(v, tuple) else v for v in value]
            out[f.name] = value
        out.pop("name")
        return out


def random_placement(n_nodes: int, side: float, seed: int, trial: int) -> tuple[tuple[float, float], ...]:
    """
    Source at the lower-left corner, destination at the upper-right one and ``n_nodes - 2``
    relays uniform on the square in between.
    """
    if n_nodes < 2:
        raise InvalidModel(f"random placement needs at least 2 nodes, got {n_nodes}")
    rng = np.random.default_rng([seed, n_nodes, trial])
    relays = rng.uniform(0.0, side, size=(n_nodes - 2, 2))
    return ((0.0, 0.0),) + tuple((float(x), float(y)) for x, y in relays) + ((float(side), float(side)),)


# -----------------------------
# Parsing
# -----------------------------


def _floats(text: str) -> list[float]:
    return [float(part) for part in text.split(",") if part.strip()]


def _ints(text: str) -> list[int]:
    return [int(part) for part in text.split(",") if part.strip()]


def _bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "on", "1"):
        return True
    if lowered in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _modes(text: str) -> tuple[EavesdropperMode, ...]:
    if text.strip() == "both":
        return ALL_MODES
    return tuple(EavesdropperMode(part.strip()) for part in text.split(","))


def _methods(text: str) -> tuple[ScpMethod, ...]:
    if text.strip() == "all":
        return ALL_METHODS
    return tuple(ScpMethod(part.strip()) for part in text.split(","))


def _window(text: str) -> float | Literal["auto"]:
    return "auto" if text.strip() == "auto" else float(text)


def _optional_float(text: str) -> float | None:
    return None if text.strip() in ("none", "") else float(text)


_SCALARS: dict[str, tuple[str, Callable[[str], Any]]] = {
    "alpha": ("alpha", float),
    "lambda_e": ("lambdas", lambda t: tuple(_floats(t))),
    "power": ("power", float),
    "random_nodes": ("random_nodes", int),
    "side": ("side", float),
    "src": ("src", int),
    "dst": ("dst", int),
    "path": ("path", lambda t: tuple(_ints(t))),
    "mode": ("modes", _modes),
    "method": ("methods", _methods),
    "trials": ("trials", int),
    "seed": ("seed", int),
    "window": ("window", _window),
    "confidence": ("confidence", float),
    "tail_tolerance": ("tail_tolerance", float),
    "workers": ("workers", int),
    "out": ("out", str),
    "study_nodes": ("study_nodes", lambda t: tuple(_ints(t))),
    "study_trials": ("study_trials", int),
    "exact_benchmark": ("exact_benchmark", _bool),
    "exact_benchmark_max": ("exact_benchmark_max", int),
    "metric_benchmark_max": ("metric_benchmark_max", int),
    "connectivity_radius": ("connectivity_radius", _optional_float),
}


def parse_scenario_text(text: str, source: str = "<scenario>") -> ScenarioConfig:
    """
    Parse scenario text.

    Raises:
        ScenarioError: syntax errors, unknown or repeated keys, and bad values, with line numbers.
        AlphaOutOfRange: ``alpha`` is not above 2.
    """
    values: dict[str, Any] = {}
    seen: dict[str, int] = {}
    nodes: list[tuple[float, float]] = []
    node_powers: list[float | None] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioError(f"expected 'key = value', got {line!r}", source, lineno)
        key, _, value = (part.strip() for part in line.partition("="))
        if key == "node":
            try:
                parts = _floats(value)
            except ValueError as e:
                raise ScenarioError(f"bad node entry {value!r}: {e}", source, lineno) from e
            if len(parts) not in (2, 3):
                raise ScenarioError(f"node needs 'x, y[, power]', got {value!r}", source, lineno)
            nodes.append((parts[0], parts[1]))
            node_powers.append(parts[2] if len(parts) == 3 else None)
            continue
        if key not in _SCALARS:
            raise ScenarioError(f"unknown key {key!r}", source, lineno)
        if key in seen:
            raise ScenarioError(f"key {key!r} already set on line {seen[key]}", source, lineno)
        seen[key] = lineno
        field_name, convert = _SCALARS[key]
        try:
            values[field_name] = convert(value)
        except ValueError as e:
            raise ScenarioError(f"bad value for {key!r}: {e}", source, lineno) from e
        if key == "alpha" and not values["alpha"] > 2:
            raise AlphaOutOfRange(values["alpha"])

    if nodes:
        values["nodes"] = tuple(nodes)
        if any(p is not None for p in node_powers):
            default = values.get("power", 1.0)
            values["node_powers"] = tuple(default if p is None else p for p in node_powers)
    try:
        config = ScenarioConfig(name=source, **values)
    except InvalidModel:
        raise
    except ValueError as e:
        raise ScenarioError(str(e), source) from e
    if config.node_powers is not None:
        # validates powers eagerly so bad values surface as scenario errors
        try:
            config.network()
        except InvalidModel as e:
            raise ScenarioError(str(e), source) from e
    LOGGER.debug("parsed scenario %s: %d nodes, %d lambda values", source, config.n_nodes, len(config.lambdas))
    return config


def builtin_names() -> list[str]:
    folder = resources.files("secroute") / "scenarios"
    return sorted(item.name[: -len(".conf")] for item in folder.iterdir() if item.name.endswith(".conf"))


def parse_scenario(location: str | FsPath) -> ScenarioConfig:
    """Load a scenario file, or a bundled one named ``builtin:<name>``."""
    location = str(location)
    if location.startswith(BUILTIN_PREFIX):
        name = location[len(BUILTIN_PREFIX) :]
        resource = resources.files("secroute") / "scenarios" / f"{name}.conf"
        if not resource.is_file():
            raise ScenarioError(f"no builtin scenario {name!r}; available: {', '.join(builtin_names())}", location)
        return parse_scenario_text(resource.read_text(encoding="utf-8"), location)
    path = FsPath(location)
    if not path.is_file():
        raise ScenarioError("scenario file does not exist", location)
    return parse_scenario_text(path.read_text(encoding="utf-8"), location)
