__all__ = [
    "Mesh",
    "interval_mesh",
    "square_mesh",
]
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .const import QUADRATURE_RTOL
from .errors import MeshMismatch

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Mesh:
    """Uniform P1 finite element mesh on [-1, 1] or [-1, 1]^2

    :param dimension: 1 or 2
    :param node_coords: Node coordinates, shape (N,) in 1D and (N, 2) in 2D
    :param quad_weights: Lumped quadrature weight per node (row sums of the
        P1 mass matrix)
    :param h: Uniform mesh spacing
    :param connectivity: Element-to-node table, shape (n_elements, 3); 2D only
    :param shape: Nodes per axis of the tensor grid; 2D only
    """

    dimension: int
    node_coords: np.ndarray
    quad_weights: np.ndarray
    h: float
    connectivity: Optional[np.ndarray] = None
    shape: Optional[tuple[int, int]] = None
    measure: float = field(init=False)

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise MeshMismatch(f"Unsupported mesh dimension {self.dimension}")
        if np.any(self.quad_weights <= 0):
            raise MeshMismatch("Quadrature weights must be strictly positive")
        expected = 2.0 if self.dimension == 1 else 4.0
        total = math.fsum(self.quad_weights)
        if abs(total - expected) > QUADRATURE_RTOL * expected:
            raise MeshMismatch(
                f"Quadrature weights sum to {total!r}, expected {expected!r}"
            )
        for arr in (self.node_coords, self.quad_weights, self.connectivity):
            if arr is not None:
                arr.setflags(write=False)
        object.__setattr__(self, "measure", expected)

    @property
    def n_nodes(self) -> int:
        return self.quad_weights.shape[0]

    @property
    def n_elements(self) -> int:
        if self.dimension == 1:
            return self.n_nodes - 1
        return self.connectivity.shape[0]

    @cached_property
    def difference_operator(self) -> sp.csr_matrix:
        """Forward differences whose grouped norms sum to the discrete TV

        1D: (N-1) x N matrix of increments x_{i+1} - x_i.
        2D: 2N x N matrix stacking the x- and y-increments per node, zero
        on the top/right boundary rows of the nodal grid.
        """
        n = self.n_nodes
        if self.dimension == 1:
            return sp.diags(
                [-np.ones(n - 1), np.ones(n - 1)], [0, 1], shape=(n - 1, n)
            ).tocsr()
        nx, ny = self.shape
        ex = sp.diags([-np.ones(nx), np.ones(nx - 1)], [0, 1], shape=(nx, nx)).tolil()
        ex[nx - 1, nx - 1] = 0.0
        ey = sp.diags([-np.ones(ny), np.ones(ny - 1)], [0, 1], shape=(ny, ny)).tolil()
        ey[ny - 1, ny - 1] = 0.0
        # node index k = j * nx + i, i along x
        dx = sp.kron(sp.identity(ny), ex.tocsr())
        dy = sp.kron(ey.tocsr(), sp.identity(nx))
        return sp.vstack([dx, dy]).tocsr()

    @property
    def tv_group_size(self) -> int:
        return self.dimension

    @cached_property
    def tv_group_scale(self) -> np.ndarray:
        """Per-group factor a_g with TV(x) = sum_g a_g |(K x)_g|"""
        if self.dimension == 1:
            return np.ones(self.n_nodes - 1)
        return np.full(self.n_nodes, self.h)

    @cached_property
    def tv_lipschitz(self) -> float:
        """Gershgorin bound on the spectral norm of K W^-1 K^T"""
        k = self.difference_operator
        gram = k @ sp.diags(1.0 / self.quad_weights) @ k.T
        return float(np.max(np.asarray(abs(gram).sum(axis=1)).ravel()))


def interval_mesh(elements: int) -> Mesh:
    """Uniform mesh of [-1, 1] with the given number of elements"""
    if elements < 1:
        raise MeshMismatch("An interval mesh needs at least one element")
    h = 2.0 / elements
    coords = np.linspace(-1.0, 1.0, elements + 1)
    weights = np.full(elements + 1, h)
    weights[0] = weights[-1] = h / 2.0
    logger.debug("Built 1D mesh with %s elements", elements)
    return Mesh(dimension=1, node_coords=coords, quad_weights=weights, h=h)


def square_mesh(squares: int) -> Mesh:
    """Uniform triangulation of [-1, 1]^2

    The (m+1)^2 tensor grid is split into 2 m^2 right triangles whose
    diagonals alternate direction between neighbouring squares.

    :param squares: Number of squares m per side
    """
    if squares < 1:
        raise MeshMismatch("A square mesh needs at least one square per side")
    m = squares
    nx = ny = m + 1
    h = 2.0 / m
    grid = np.linspace(-1.0, 1.0, nx)
    xx, yy = np.meshgrid(grid, grid, indexing="xy")
    coords = np.column_stack([xx.ravel(), yy.ravel()])

    i, j = np.meshgrid(np.arange(m), np.arange(m), indexing="xy")
    i, j = i.ravel(), j.ravel()
    a = j * nx + i
    b = a + 1
    c = a + nx + 1
    d = a + nx
    even = (i + j) % 2 == 0
    tri = np.concatenate(
        [
            np.column_stack([a, b, c])[even],
            np.column_stack([a, c, d])[even],
            np.column_stack([a, b, d])[~even],
            np.column_stack([b, c, d])[~even],
        ]
    )
    area = h * h / 2.0
    weights = np.bincount(tri.ravel(), minlength=nx * ny) * (area / 3.0)
    logger.debug("Built 2D mesh with %s triangles", tri.shape[0])
    return Mesh(
        dimension=2,
        node_coords=coords,
        quad_weights=weights.astype(float),
        h=h,
        connectivity=tri,
        shape=(nx, ny),
    )
