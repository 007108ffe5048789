__all__ = [
    "GridFunction",
    "Exponents",
    "lr_norm",
    "duality_map",
    "pairing",
    "weighted_sum",
]
import logging
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import MeshMismatch, NonFiniteValues, UnsupportedConfiguration
from .mesh import Mesh

logger = logging.getLogger(__name__)

Scalar = Union[int, float]


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Nodal field on a mesh

    Primal fields (c, u, x) and dual fields (xi, residual duals) share this
    representation; :func:`pairing` supplies the dual interpretation.

    :param values: One real value per mesh node. The array is copied and
        frozen.
    :param mesh: Mesh the values live on
    """

    values: np.ndarray
    mesh: Mesh = field(repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.mesh.n_nodes,):
            raise MeshMismatch(
                f"Expected {self.mesh.n_nodes} nodal values, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise NonFiniteValues("Grid function contains NaN or Inf entries")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, mesh: Mesh) -> "GridFunction":
        return cls(np.zeros(mesh.n_nodes), mesh)

    @classmethod
    def constant(cls, value: float, mesh: Mesh) -> "GridFunction":
        return cls(np.full(mesh.n_nodes, float(value)), mesh)

    def same_mesh(self, other: "GridFunction") -> None:
        if other.mesh is not self.mesh:
            raise MeshMismatch("Grid functions live on different meshes")

    def _combine(self, other, op) -> "GridFunction":
        if isinstance(other, GridFunction):
            self.same_mesh(other)
            return GridFunction(op(self.values, other.values), self.mesh)
        return GridFunction(op(self.values, other), self.mesh)

    def __add__(self, other) -> "GridFunction":
        return self._combine(other, np.add)

    def __sub__(self, other) -> "GridFunction":
        return self._combine(other, np.subtract)

    def __mul__(self, other) -> "GridFunction":
        return self._combine(other, np.multiply)

    __radd__ = __add__
    __rmul__ = __mul__

    def __neg__(self) -> "GridFunction":
        return GridFunction(-self.values, self.mesh)

    def is_zero(self) -> bool:
        return not np.any(self.values)


@dataclass(frozen=True)
class Exponents:
    """Exponents of the space setting

    X = L^2 is fixed, so p = s = 2; only the data-space exponent r varies.
    """

    r: float
    p: float = 2.0
    s: float = 2.0

    def __post_init__(self):
        if not self.r > 1.0:
            raise UnsupportedConfiguration(f"Data exponent r must exceed 1, got {self.r}")
        if self.p != 2.0 or self.s != 2.0:
            raise UnsupportedConfiguration("Only p = s = 2 is supported")

    @property
    def r_star(self) -> float:
        return self.r / (self.r - 1.0)


def _check_mesh(v: GridFunction, mesh: Mesh) -> None:
    if v.mesh is not mesh:
        raise MeshMismatch("Grid function does not live on the given mesh")


def weighted_sum(values: np.ndarray, mesh: Mesh) -> float:
    """Compensated quadrature sum of nodal values"""
    return math.fsum(mesh.quad_weights * values)


def lr_norm(v: GridFunction, r: Scalar, mesh: Mesh) -> float:
    """Discrete L^r norm with lumped nodal quadrature

    :param v: Function to measure
    :param r: Exponent, r > 1
    :param mesh: Mesh providing the quadrature weights
    """
    if not r > 1.0:
        raise UnsupportedConfiguration(f"L^r norm needs r > 1, got {r}")
    _check_mesh(v, mesh)
    if r == 2:
        return math.sqrt(weighted_sum(v.values * v.values, mesh))
    return weighted_sum(np.abs(v.values) ** r, mesh) ** (1.0 / r)


def duality_map(v: GridFunction, r: Scalar) -> GridFunction:
    """Pointwise duality mapping J_r(v) = |v|^(r-1) sign(v)"""
    if not r > 1.0:
        raise UnsupportedConfiguration(f"Duality mapping needs r > 1, got {r}")
    if r == 2:
        return v
    return GridFunction(np.abs(v.values) ** (r - 1.0) * np.sign(v.values), v.mesh)


def pairing(xi: GridFunction, x: GridFunction, mesh: Mesh) -> float:
    """Weighted duality pairing <xi, x> = sum_i w_i xi_i x_i"""
    _check_mesh(xi, mesh)
    _check_mesh(x, mesh)
    return weighted_sum(xi.values * x.values, mesh)
