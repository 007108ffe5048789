import math

import numpy as np
import pytest

from hpicp.errors import MeshMismatch
from hpicp.mesh import Mesh, interval_mesh, square_mesh


@pytest.mark.parametrize("elements", [1, 7, 64, 256])
def test_interval_mesh(elements):
    mesh = interval_mesh(elements)
    assert mesh.dimension == 1
    assert mesh.n_nodes == elements + 1
    assert mesh.n_elements == elements
    assert mesh.h == pytest.approx(2.0 / elements)
    assert math.fsum(mesh.quad_weights) == pytest.approx(2.0, rel=1e-12)
    assert mesh.quad_weights[0] == pytest.approx(mesh.h / 2)
    assert mesh.node_coords[0] == -1.0 and mesh.node_coords[-1] == 1.0


@pytest.mark.parametrize(
    "squares,triangles",
    [
        (1, 2),
        (8, 128),
        (32, 2048),
        (63, 7938),
    ],
)
def test_square_mesh(squares, triangles):
    mesh = square_mesh(squares)
    assert mesh.dimension == 2
    assert mesh.n_elements == triangles
    assert mesh.n_nodes == (squares + 1) ** 2
    assert math.fsum(mesh.quad_weights) == pytest.approx(4.0, rel=1e-12)
    assert np.all(mesh.quad_weights > 0)


def test_square_mesh_triangles_cover_square():
    mesh = square_mesh(4)
    pts = mesh.node_coords[mesh.connectivity]
    x, y = pts[..., 0], pts[..., 1]
    area = 0.5 * np.abs(
        (x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0])
        - (x[:, 2] - x[:, 0]) * (y[:, 1] - y[:, 0])
    )
    assert area.sum() == pytest.approx(4.0)
    assert np.allclose(area, mesh.h**2 / 2)


def test_mesh_is_immutable(mesh_1d):
    with pytest.raises(ValueError):
        mesh_1d.quad_weights[0] = 1.0
    with pytest.raises(AttributeError):
        mesh_1d.h = 0.5


@pytest.mark.parametrize(
    "weights",
    [
        np.array([1.0, 1.0, 0.0]),
        np.array([0.5, 0.5, 0.5]),
    ],
)
def test_bad_weights(weights):
    with pytest.raises(MeshMismatch):
        Mesh(dimension=1, node_coords=np.linspace(-1, 1, 3), quad_weights=weights, h=1.0)


def test_difference_operator_1d(mesh_8):
    k = mesh_8.difference_operator
    assert k.shape == (7, 8)
    x = np.arange(8.0) ** 2
    assert np.allclose(k @ x, np.diff(x))


def test_difference_operator_2d():
    mesh = square_mesh(3)
    nx, ny = mesh.shape
    k = mesh.difference_operator
    assert k.shape == (2 * mesh.n_nodes, mesh.n_nodes)
    # a ramp along x has unit increments except on the right boundary column
    ramp = np.tile(np.arange(nx, dtype=float), ny)
    dx, dy = (k @ ramp).reshape(2, -1)
    assert np.allclose(dy, 0.0)
    assert np.allclose(dx.reshape(ny, nx)[:, :-1], 1.0)
    assert np.allclose(dx.reshape(ny, nx)[:, -1], 0.0)


def test_tv_lipschitz_bounds_spectrum(mesh_8):
    k = mesh_8.difference_operator.toarray()
    gram = k @ np.diag(1.0 / mesh_8.quad_weights) @ k.T
    assert np.max(np.linalg.eigvalsh(gram)) <= mesh_8.tv_lipschitz * (1 + 1e-12)
