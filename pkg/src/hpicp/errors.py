__all__ = [
    "HpicpError",
    "UsageError",
    "MeshMismatch",
    "NonFiniteValues",
    "UnsupportedConfiguration",
    "ConfigError",
    "SolveError",
    "ConvergenceError",
    "InnerSolverDivergence",
    "LinearSolverDivergence",
    "Stagnation",
]

from typing import Any, Optional


class HpicpError(Exception):
    pass


class UsageError(HpicpError):
    pass


class MeshMismatch(UsageError):
    pass


class NonFiniteValues(HpicpError):
    pass


class UnsupportedConfiguration(HpicpError):
    pass


class ConfigError(HpicpError):
    pass


class SolveError(HpicpError):
    pass


class ConvergenceError(HpicpError):
    """An iterative solver ran out of iterations

    :param message: Human readable description
    :param last_iterate: Last iterate produced by the solver
    :param residual: Stopping quantity reached when the solver gave up
    """

    def __init__(
        self, message: str, last_iterate: Optional[Any] = None, residual: float = 0.0
    ):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residual = residual


class InnerSolverDivergence(ConvergenceError):
    pass


class LinearSolverDivergence(ConvergenceError):
    pass


class Stagnation(HpicpError):
    pass
