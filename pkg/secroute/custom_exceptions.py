from __future__ import annotations


class SecRouteException(Exception):
    """Something went wrong evaluating or routing a path"""


class InvalidModel(SecRouteException):
    """Network model parameters are out of range"""


class AlphaOutOfRange(InvalidModel):
    """Path-loss exponent must be strictly greater than 2"""

    def __init__(self, alpha: float) -> None:
        super().__init__(f"alpha must be > 2, got {alpha!r}")
        self.alpha = alpha


class InvalidPath(SecRouteException):
    """Path indices are malformed or do not fit the model"""


class ZeroDistance(SecRouteException):
    """Two consecutive path nodes are co-located"""


class DegenerateWindow(SecRouteException):
    """Eavesdropper samples kept landing on a transmitter"""


class QuadratureNonConvergence(SecRouteException):
    """Tolerance not met within the subdivision budget"""


class NumericallyDegenerateRates(SecRouteException):
    """Hypoexponential rates could not be evaluated stably"""


class UnequalPowers(SecRouteException):
    """Routing requires equal transmit powers on every node"""


class NoRoute(SecRouteException):
    """Destination is unreachable from the source"""


class TooLarge(SecRouteException):
    """Exhaustive search was asked to enumerate too many nodes"""


class ScenarioError(SecRouteException):
    """Scenario file could not be parsed or validated"""

    def __init__(self, message: str, source: str = "<scenario>", line: int | None = None) -> None:
        where = f"{source}:{line}" if line is not None else source
        super().__init__(f"{where}: {message}")
        self.source = source
        self.line = line
