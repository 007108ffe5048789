import math

import numpy as np
import pytest

from hpicp.errors import MeshMismatch, NonFiniteValues, UnsupportedConfiguration
from hpicp.mesh import interval_mesh
from hpicp.spaces import Exponents, GridFunction, duality_map, lr_norm, pairing


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def test_grid_function_checks_shape(mesh_8):
    with pytest.raises(MeshMismatch):
        GridFunction(np.zeros(7), mesh_8)


@pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
def test_grid_function_rejects_non_finite(mesh_8, bad):
    values = np.zeros(8)
    values[3] = bad
    with pytest.raises(NonFiniteValues):
        GridFunction(values, mesh_8)


def test_grid_function_copies_and_freezes(mesh_8):
    values = np.ones(8)
    v = GridFunction(values, mesh_8)
    values[0] = 5.0
    assert v.values[0] == 1.0
    with pytest.raises(ValueError):
        v.values[0] = 2.0


def test_grid_function_arithmetic(mesh_8):
    a = GridFunction(np.arange(8.0), mesh_8)
    b = GridFunction.constant(2.0, mesh_8)
    assert np.array_equal((a + b).values, np.arange(8.0) + 2)
    assert np.array_equal((a - b).values, np.arange(8.0) - 2)
    assert np.array_equal((a * b).values, np.arange(8.0) * 2)
    assert np.array_equal((a * 3.0).values, np.arange(8.0) * 3)
    assert np.array_equal((-a).values, -np.arange(8.0))
    assert GridFunction.zeros(mesh_8).is_zero()
    with pytest.raises(MeshMismatch):
        a + GridFunction.zeros(interval_mesh(7))


@pytest.mark.parametrize(
    "r,r_star",
    [
        (2.0, 2.0),
        (1.5, 3.0),
        (1.05, 21.0),
        (4.0, 4.0 / 3.0),
    ],
)
def test_exponents(r, r_star):
    exponents = Exponents(r)
    assert exponents.r_star == pytest.approx(r_star, rel=1e-14)
    assert 1 / exponents.r + 1 / exponents.r_star == pytest.approx(1.0, rel=1e-14)
    assert exponents.p == 2 and exponents.s == 2


@pytest.mark.parametrize("r", [1.0, 0.5, -2.0])
def test_exponents_reject_small_r(r):
    with pytest.raises(UnsupportedConfiguration):
        Exponents(r)


def test_lr_norm_constant():
    mesh = interval_mesh(256)
    assert lr_norm(GridFunction.constant(1.0, mesh), 2, mesh) == pytest.approx(
        math.sqrt(2.0), rel=1e-14
    )


@pytest.mark.parametrize("r", [1.05, 1.5, 2.0, 3.0])
def test_lr_norm_zero(mesh_8, r):
    assert lr_norm(GridFunction.zeros(mesh_8), r, mesh_8) == 0.0


def test_lr_norm_matches_direct_sum(mesh_8, rng):
    values = rng.standard_normal(8)
    direct = 0.0
    for w, v in zip(mesh_8.quad_weights, values):
        direct += w * abs(v) ** 1.5
    got = lr_norm(GridFunction(values, mesh_8), 1.5, mesh_8)
    assert got == pytest.approx(direct ** (1 / 1.5), rel=1e-13)


def test_lr_norm_mesh_mismatch(mesh_8):
    with pytest.raises(MeshMismatch):
        lr_norm(GridFunction.zeros(mesh_8), 2, interval_mesh(7))


@pytest.mark.parametrize(
    "value,r,expected",
    [
        (-8.0, 1.5, -2.8284271247461903),
        (0.0, 1.05, 0.0),
        (3.0, 2.0, 3.0),
        (4.0, 3.0, 16.0),
    ],
)
def test_duality_map_values(mesh_8, value, r, expected):
    v = GridFunction.constant(value, mesh_8)
    assert duality_map(v, r).values == pytest.approx(np.full(8, expected), rel=1e-15)


def test_duality_map_identity_at_two(mesh_8, rng):
    v = GridFunction(rng.standard_normal(8), mesh_8)
    assert np.array_equal(duality_map(v, 2).values, v.values)


@pytest.mark.parametrize("r", [1.05, 1.3, 2.0, 2.5, 4.0])
def test_duality_map_identities(mesh_1d, rng, r):
    v = GridFunction(rng.standard_normal(mesh_1d.n_nodes), mesh_1d)
    jv = duality_map(v, r)
    r_star = Exponents(r).r_star
    norm = lr_norm(v, r, mesh_1d)
    assert pairing(jv, v, mesh_1d) == pytest.approx(norm**r, rel=1e-10)
    assert lr_norm(jv, r_star, mesh_1d) == pytest.approx(norm ** (r - 1), rel=1e-10)


def test_pairing(mesh_1d, rng):
    one = GridFunction.constant(1.0, mesh_1d)
    assert pairing(one, one, mesh_1d) == pytest.approx(2.0, rel=1e-14)
    assert pairing(GridFunction.zeros(mesh_1d), one, mesh_1d) == 0.0

    xi1, xi2, x = (
        GridFunction(rng.standard_normal(mesh_1d.n_nodes), mesh_1d) for _ in range(3)
    )
    a, b = 0.7, -2.3
    lhs = pairing(xi1 * a + xi2 * b, x, mesh_1d)
    rhs = a * pairing(xi1, x, mesh_1d) + b * pairing(xi2, x, mesh_1d)
    assert lhs == pytest.approx(rhs, rel=1e-12)
    assert pairing(xi1, x, mesh_1d) == pairing(x, xi1, mesh_1d)
