import pytest

from hpicp.mesh import interval_mesh, square_mesh


@pytest.fixture(scope="session")
def anyio_backend():
    return "asyncio"


@pytest.fixture
def mesh_1d():
    return interval_mesh(64)


@pytest.fixture
def mesh_8():
    """Eight-node interval mesh"""
    return interval_mesh(7)


@pytest.fixture
def mesh_2d():
    return square_mesh(8)
