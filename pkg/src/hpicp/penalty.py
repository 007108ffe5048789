__all__ = [
    "PenaltyKind",
    "TvSolver",
    "PenaltySpec",
    "theta_value",
    "tv_seminorm",
    "initial_subgradient",
    "conjugate_grad",
    "soft_threshold",
    "conjugate_value",
]
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .const import TV_INNER_MAX_ITERS, TV_INNER_TOL
from .errors import UnsupportedConfiguration
from .mesh import Mesh
from .rof import RofScratch, fista_rof, taut_string_prox, tv_value
from .spaces import GridFunction, weighted_sum

logger = logging.getLogger(__name__)


class PenaltyKind(str, Enum):
    L2 = "L2"
    L2L1 = "L2L1"
    L2TV = "L2TV"


class TvSolver(str, Enum):
    FISTA = "fista"
    TAUT_STRING = "taut-string"


@dataclass(frozen=True)
class PenaltySpec:
    """Convex penalty in force

    Theta(x) = 1/(2 beta) |x|_2^2 + R(x) with R = 0 (``L2``), the L1 norm
    (``L2L1``) or the total variation (``L2TV``). Every kind is 2-convex with
    c0 = 1 / (2 beta).

    :param kind: Which penalty
    :param beta: Weight of the quadratic term, beta > 0
    :param tv_inner_max_iters: Iteration budget of the inner ROF solver
    :param tv_inner_tol: Tolerance of the inner ROF solver
    :param tv_solver: Inner ROF solver; the taut string is exact but 1D only
    """

    kind: PenaltyKind = PenaltyKind.L2TV
    beta: float = 1.0
    tv_inner_max_iters: int = TV_INNER_MAX_ITERS
    tv_inner_tol: float = TV_INNER_TOL
    tv_solver: TvSolver = TvSolver.FISTA

    def __post_init__(self):
        object.__setattr__(self, "kind", PenaltyKind(self.kind))
        object.__setattr__(self, "tv_solver", TvSolver(self.tv_solver))
        if not self.beta > 0:
            raise UnsupportedConfiguration(f"beta must be positive, got {self.beta}")
        if self.tv_inner_max_iters < 1 or not self.tv_inner_tol > 0:
            raise UnsupportedConfiguration("TV inner solver controls must be positive")

    @property
    def c0(self) -> float:
        return 1.0 / (2.0 * self.beta)


def tv_seminorm(x: GridFunction, mesh: Mesh) -> float:
    """Discrete total variation

    1D: sum of absolute increments. 2D: isotropic, h * sum over nodes of the
    Euclidean norm of the forward increments, zero-padded at the top/right
    boundary.
    """
    return tv_value(x.values, mesh)


def theta_value(spec: PenaltySpec, x: GridFunction, mesh: Mesh) -> float:
    value = weighted_sum(x.values * x.values, mesh) / (2.0 * spec.beta)
    if spec.kind is PenaltyKind.L2L1:
        value += weighted_sum(np.abs(x.values), mesh)
    elif spec.kind is PenaltyKind.L2TV:
        value += tv_seminorm(x, mesh)
    return value


def initial_subgradient(spec: PenaltySpec, x0: GridFunction) -> GridFunction:
    """Subgradient xi0 of Theta at the initial guess

    Only x0 = 0 is supported, where 0 is a subgradient of every kind.
    """
    if not x0.is_zero():
        raise UnsupportedConfiguration(
            "Only the zero initial guess has a certified subgradient"
        )
    return GridFunction.zeros(x0.mesh)


def soft_threshold(values: np.ndarray, threshold: float = 1.0) -> np.ndarray:
    return np.sign(values) * np.maximum(np.abs(values) - threshold, 0.0)


def conjugate_grad(
    spec: PenaltySpec,
    xi: GridFunction,
    mesh: Mesh,
    scratch: Optional[RofScratch] = None,
) -> GridFunction:
    """Gradient of the conjugate, argmin_z { Theta(z) - <xi, z> }

    :param spec: Penalty in force
    :param xi: Dual element
    :param mesh: Mesh of ``xi``
    :param scratch: Warm-start state for the FISTA inner solver

    :raises InnerSolverDivergence: FISTA missed its tolerance
    """
    if spec.kind is PenaltyKind.L2:
        return GridFunction(spec.beta * xi.values, mesh)
    if spec.kind is PenaltyKind.L2L1:
        return GridFunction(spec.beta * soft_threshold(xi.values), mesh)
    data = GridFunction(spec.beta * xi.values, mesh)
    if spec.tv_solver is TvSolver.TAUT_STRING:
        return taut_string_prox(data, spec.beta, mesh)
    return fista_rof(
        data,
        spec.beta,
        mesh,
        max_iters=spec.tv_inner_max_iters,
        tol=spec.tv_inner_tol,
        scratch=scratch,
    )


def conjugate_value(
    spec: PenaltySpec, xi: GridFunction, x: GridFunction, mesh: Mesh
) -> float:
    """Theta*(xi) evaluated at its maximizer x = conjugate_grad(xi)"""
    return math.fsum(
        [weighted_sum(xi.values * x.values, mesh), -theta_value(spec, x, mesh)]
    )
