"""Solvers for the weighted ROF problem

    min_x  weight * TV(x) + 1/2 sum_i w_i (x_i - data_i)^2

with lumped quadrature weights w_i. ``fista_rof`` runs FISTA on the dual
problem; ``taut_string_prox`` is the exact one-dimensional solution.
"""

__all__ = [
    "RofScratch",
    "fista_rof",
    "taut_string_prox",
    "tv_value",
]
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .const import TV_INNER_MAX_ITERS, TV_INNER_TOL
from .errors import InnerSolverDivergence, MeshMismatch, UnsupportedConfiguration
from .mesh import Mesh
from .spaces import GridFunction

logger = logging.getLogger(__name__)

_TINY = np.finfo(float).tiny


@dataclass
class RofScratch:
    """Warm-start state owned by one caller

    :ivar dual: Last dual variable (stacked TV groups); None before the
        first solve
    :ivar iterations: Iterations used by the last solve
    :ivar gap: Duality gap of the last solve
    """

    dual: Optional[np.ndarray] = None
    iterations: int = 0
    gap: float = 0.0


def tv_value(values: np.ndarray, mesh: Mesh) -> float:
    """Discrete TV of nodal values, sum_g a_g |(K x)_g|"""
    grad = (mesh.difference_operator @ values).reshape(mesh.tv_group_size, -1)
    return math.fsum(mesh.tv_group_scale * np.sqrt(np.sum(grad * grad, axis=0)))


def _project(q: np.ndarray, radius: np.ndarray, group_size: int) -> np.ndarray:
    groups = q.reshape(group_size, -1)
    norms = np.sqrt(np.sum(groups * groups, axis=0))
    scale = np.maximum(1.0, norms / radius)
    return (groups / scale).ravel()


def fista_rof(
    data: GridFunction,
    weight: float,
    mesh: Mesh,
    max_iters: int = TV_INNER_MAX_ITERS,
    tol: float = TV_INNER_TOL,
    scratch: Optional[RofScratch] = None,
) -> GridFunction:
    """Approximate the weighted ROF minimizer by FISTA on the dual

    The dual variable q lives in the TV groups, |q_g| <= weight * a_g, and
    the primal iterate is x(q) = data - W^-1 K^T q. The solver stops once the
    relative change of the dual objective drops below ``tol``. Momentum is
    reset whenever it points against the projected gradient step.

    :param data: Data term
    :param weight: TV weight, must be positive
    :param mesh: Mesh of ``data``
    :param max_iters: Iteration budget
    :param tol: Relative dual-objective change that counts as converged
    :param scratch: Warm-start state; updated in place when given

    :raises InnerSolverDivergence: ``tol`` not reached within ``max_iters``
    """
    if not weight > 0:
        raise UnsupportedConfiguration(f"ROF weight must be positive, got {weight}")
    if data.mesh is not mesh:
        raise MeshMismatch("ROF data does not live on the given mesh")
    k = mesh.difference_operator
    kt = k.T.tocsr()
    w = mesh.quad_weights
    d = data.values
    group_size = mesh.tv_group_size
    radius = weight * mesh.tv_group_scale
    step = 1.0 / mesh.tv_lipschitz

    def primal(q: np.ndarray) -> np.ndarray:
        return d - (kt @ q) / w

    def dual_objective(x: np.ndarray) -> float:
        return 0.5 * (math.fsum(w * x * x) - math.fsum(w * d * d))

    if scratch is not None and scratch.dual is not None and scratch.dual.shape == (
        k.shape[0],
    ):
        q = _project(scratch.dual, radius, group_size)
    else:
        q = np.zeros(k.shape[0])
    z = q
    t = 1.0
    x = primal(q)
    obj = dual_objective(x)
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        q_new = _project(z + step * (k @ primal(z)), radius, group_size)
        x_new = primal(q_new)
        obj_new = dual_objective(x_new)
        if np.dot(z - q_new, q_new - q) > 0.0:
            t = 1.0
            z = q_new
        else:
            t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
            z = q_new + ((t - 1.0) / t_new) * (q_new - q)
            t = t_new
        converged = abs(obj_new - obj) <= tol * max(abs(obj_new), _TINY)
        q, x, obj = q_new, x_new, obj_new
        if converged:
            break

    primal_value = weight * tv_value(x, mesh) + 0.5 * math.fsum(w * (x - d) ** 2)
    gap = primal_value + obj
    if scratch is not None:
        scratch.dual = q
        scratch.iterations = it
        scratch.gap = gap
    logger.hpicp_trace("FISTA finished after %s iterations, gap %s", it, gap)
    if not converged:
        raise InnerSolverDivergence(
            f"FISTA did not reach tol={tol} within {max_iters} iterations",
            last_iterate=GridFunction(x, mesh),
            residual=gap,
        )
    return GridFunction(x, mesh)


def taut_string_prox(data: GridFunction, weight: float, mesh: Mesh) -> GridFunction:
    """Exact weighted ROF minimizer on a 1D mesh by the taut-string method

    The string runs through the tube of half-width ``weight`` around the
    cumulative weighted data sums, over abscissae given by the cumulative
    quadrature weights; the minimizer is its slope per node.
    """
    if mesh.dimension != 1:
        raise UnsupportedConfiguration("The taut-string prox needs a 1D mesh")
    if not weight > 0:
        raise UnsupportedConfiguration(f"ROF weight must be positive, got {weight}")
    w = mesh.quad_weights
    n = w.shape[0]
    abscissa = np.concatenate([[0.0], np.cumsum(w)])
    sums = np.concatenate([[0.0], np.cumsum(w * data.values)])
    lower = sums - weight
    upper = sums + weight
    lower[0] = upper[0] = 0.0
    lower[n] = upper[n] = sums[n]

    y = np.empty(n + 1)
    y[0] = 0.0
    k = 0
    while k < n:
        js = np.arange(k + 1, n + 1)
        dt = abscissa[js] - abscissa[k]
        a = (lower[js] - y[k]) / dt
        b = (upper[js] - y[k]) / dt
        slope_min = np.maximum.accumulate(a)
        slope_max = np.minimum.accumulate(b)
        infeasible = np.nonzero(slope_min > slope_max)[0]
        if infeasible.size == 0:
            bend, slope, edge = n, slope_min[-1], sums
        else:
            m = infeasible[0]
            if a[m] > slope_max[m - 1]:
                # string touches the upper edge, slope increases after it
                idx = m - 1 - int(np.argmin(b[m - 1 :: -1]))
                slope = slope_max[m - 1]
                edge = upper
            else:
                idx = m - 1 - int(np.argmax(a[m - 1 :: -1]))
                slope = slope_min[m - 1]
                edge = lower
            bend = int(js[idx])
        seg = np.arange(k + 1, bend + 1)
        y[seg] = y[k] + slope * (abscissa[seg] - abscissa[k])
        y[bend] = edge[bend]
        k = bend
    return GridFunction(np.diff(y) / w, mesh)
