__all__ = [
    "LinearSolve",
    "ForwardModel",
    "LinearSystem",
    "assemble_forward_model",
    "forward",
    "derivative_apply",
    "adjoint_apply",
    "operator_norm_bound",
]
import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Optional

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .const import LIN_TOL, POWER_ITERATIONS
from .errors import LinearSolverDivergence, MeshMismatch, SolveError
from .mesh import Mesh
from .spaces import GridFunction, lr_norm

logger = logging.getLogger(__name__)


class LinearSolve(str, Enum):
    DIRECT_BANDED = "direct-banded"
    CONJUGATE_GRADIENT = "conjugate-gradient"


@dataclass(frozen=True, eq=False)
class ForwardModel:
    """Discrete operator c -> u(c) of -Lap u + c u = f with Neumann BC

    :param mesh: Mesh the problem is discretized on
    :param f: Source term
    :param stiffness: P1 stiffness matrix (symmetric positive semidefinite,
        kernel spanned by constants)
    :param mass: Lumped mass diagonal, equal to the mesh quadrature weights
    :param linsolve: Direct banded solves (1D) or Jacobi-preconditioned CG (2D)
    :param lin_tol: Relative residual tolerance of CG
    :param c_floor: Floor of the admissible coefficients (informational; no
        projection is applied)
    :param background: Known constant background potential; the penalized
        unknown is x = c - background
    """

    mesh: Mesh
    f: GridFunction
    stiffness: sp.csr_matrix
    mass: np.ndarray
    linsolve: LinearSolve
    lin_tol: float = LIN_TOL
    c_floor: float = 0.0
    background: float = 0.0

    @cached_property
    def bands(self) -> np.ndarray:
        """Stiffness in LAPACK banded storage (1D only)"""
        n = self.mesh.n_nodes
        ab = np.zeros((3, n))
        ab[0, 1:] = self.stiffness.diagonal(1)
        ab[1, :] = self.stiffness.diagonal(0)
        ab[2, :-1] = self.stiffness.diagonal(-1)
        return ab

    def coefficient(self, x: GridFunction) -> GridFunction:
        """Coefficient c = background + x for a penalized unknown x"""
        return x + self.background

    def system(self, c: GridFunction) -> "LinearSystem":
        return LinearSystem(self, c)


def _stiffness_1d(mesh: Mesh) -> sp.csr_matrix:
    n = mesh.n_nodes
    main = np.full(n, 2.0)
    main[0] = main[-1] = 1.0
    off = -np.ones(n - 1)
    return (sp.diags([off, main, off], [-1, 0, 1]) / mesh.h).tocsr()


def _stiffness_2d(mesh: Mesh) -> sp.csr_matrix:
    tri = mesh.connectivity
    pts = mesh.node_coords[tri]
    x, y = pts[..., 0], pts[..., 1]
    b = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
    c = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
    area = 0.5 * np.abs(
        (x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0])
        - (x[:, 2] - x[:, 0]) * (y[:, 1] - y[:, 0])
    )
    local = (
        np.einsum("ei,ej->eij", b, b) + np.einsum("ei,ej->eij", c, c)
    ) / (4.0 * area[:, None, None])
    rows = np.repeat(tri, 3, axis=1)
    cols = np.tile(tri, (1, 3))
    n = mesh.n_nodes
    return sp.coo_matrix(
        (local.ravel(), (rows.ravel(), cols.ravel())), shape=(n, n)
    ).tocsr()


def assemble_forward_model(
    mesh: Mesh,
    f: Optional[GridFunction] = None,
    lin_tol: float = LIN_TOL,
    c_floor: float = 0.0,
    background: float = 0.0,
) -> ForwardModel:
    """Assemble the P1 discretization of the elliptic forward problem

    :param mesh: 1D interval or 2D square mesh
    :param f: Source term; defaults to f = 1
    :param lin_tol: CG tolerance for 2D solves
    :param c_floor: Admissible-set floor
    :param background: Background potential of the penalized unknown
    """
    if f is None:
        f = GridFunction.constant(1.0, mesh)
    if f.mesh is not mesh:
        raise MeshMismatch("Source term does not live on the given mesh")
    if mesh.dimension == 1:
        stiffness, linsolve = _stiffness_1d(mesh), LinearSolve.DIRECT_BANDED
    else:
        stiffness, linsolve = _stiffness_2d(mesh), LinearSolve.CONJUGATE_GRADIENT
    logger.debug(
        "Assembled %sD forward model with %s nodes", mesh.dimension, mesh.n_nodes
    )
    return ForwardModel(
        mesh=mesh,
        f=f,
        stiffness=stiffness,
        mass=mesh.quad_weights,
        linsolve=linsolve,
        lin_tol=lin_tol,
        c_floor=c_floor,
        background=background,
    )


class LinearSystem:
    """The operator A(c) = stiffness + mass diag(c), ready for repeated solves

    :param model: Forward model
    :param c: Coefficient

    :raises SolveError: c vanishes identically, or the CG operator has a
        non-positive diagonal
    """

    def __init__(self, model: ForwardModel, c: GridFunction):
        if c.mesh is not model.mesh:
            raise MeshMismatch("Coefficient does not live on the model mesh")
        if c.is_zero():
            raise SolveError("c = 0 leaves the pure Neumann operator singular")
        self.model = model
        reaction = model.mass * c.values
        if model.linsolve is LinearSolve.DIRECT_BANDED:
            self._bands = model.bands.copy()
            self._bands[1] += reaction
        else:
            self._matrix = (model.stiffness + sp.diags(reaction)).tocsr()
            diagonal = self._matrix.diagonal()
            if np.any(diagonal <= 0.0):
                raise SolveError("Operator has a non-positive diagonal entry")
            self._jacobi = spla.LinearOperator(
                self._matrix.shape, matvec=lambda v: v / diagonal, dtype=float
            )

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        if self.model.linsolve is LinearSolve.DIRECT_BANDED:
            try:
                sol = scipy.linalg.solve_banded(
                    (1, 1), self._bands, rhs, check_finite=False
                )
            except np.linalg.LinAlgError as err:
                raise SolveError("Singular tridiagonal system") from err
        else:
            if not np.any(rhs):
                return np.zeros_like(rhs)
            sol, info = spla.cg(
                self._matrix,
                rhs,
                rtol=self.model.lin_tol,
                atol=0.0,
                M=self._jacobi,
            )
            if info != 0:
                residual = np.linalg.norm(rhs - self._matrix @ sol) / np.linalg.norm(rhs)
                if info < 0:
                    raise SolveError("Conjugate gradients broke down")
                raise LinearSolverDivergence(
                    f"CG stopped after {info} iterations at relative residual {residual}",
                    last_iterate=sol,
                    residual=residual,
                )
        if not np.all(np.isfinite(sol)):
            raise SolveError("Linear solve produced non-finite values")
        return sol


def forward(
    model: ForwardModel, c: GridFunction, system: Optional[LinearSystem] = None
) -> GridFunction:
    """Solve (stiffness + mass diag(c)) u = mass f"""
    system = system or model.system(c)
    return GridFunction(system.solve(model.mass * model.f.values), model.mesh)


def derivative_apply(
    model: ForwardModel,
    c: GridFunction,
    u_c: GridFunction,
    h: GridFunction,
    system: Optional[LinearSystem] = None,
) -> GridFunction:
    """Frechet derivative F'(c) h = w with A(c) w = -mass (h * u_c)"""
    system = system or model.system(c)
    return GridFunction(
        system.solve(-model.mass * h.values * u_c.values), model.mesh
    )


def adjoint_apply(
    model: ForwardModel,
    c: GridFunction,
    u_c: GridFunction,
    zeta: GridFunction,
    system: Optional[LinearSystem] = None,
) -> GridFunction:
    """Adjoint F'(c)* zeta = -u_c * psi with A(c) psi = mass zeta

    Adjoint with respect to the weighted pairings on both sides.
    """
    system = system or model.system(c)
    psi = system.solve(model.mass * zeta.values)
    return GridFunction(-u_c.values * psi, model.mesh)


def operator_norm_bound(
    model: ForwardModel, c: GridFunction, iterations: int = POWER_ITERATIONS
) -> float:
    """Estimate |F'(c)| by power iteration on F'(c)* F'(c)

    Diagnostics and the theoretical step rule only.
    """
    system = model.system(c)
    u_c = forward(model, c, system)
    v = GridFunction.constant(1.0, model.mesh)
    v = v * (1.0 / lr_norm(v, 2, model.mesh))
    estimate = 0.0
    for _ in range(iterations):
        w = adjoint_apply(
            model, c, u_c, derivative_apply(model, c, u_c, v, system), system
        )
        norm = lr_norm(w, 2, model.mesh)
        if norm == 0.0:
            return 0.0
        estimate = math.sqrt(norm)
        v = w * (1.0 / norm)
    logger.debug("Operator norm estimate %s after %s iterations", estimate, iterations)
    return estimate
