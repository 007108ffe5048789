import math

import pytest

from hpicp import checks
from hpicp.checks import SuiteResult
from hpicp.errors import SolveError

SUITES = [
    "adjoint",
    "taylor",
    "manufactured",
    "soft-threshold",
    "prox",
    "hilbert-reduction",
    "monotonicity",
]


def passing(name):
    return lambda **kwargs: SuiteResult(name, True, 0.0, "stub")


@pytest.fixture
def fast_suites(mocker):
    for attr, name in [
        ("check_taylor", "taylor"),
        ("check_manufactured", "manufactured"),
        ("check_prox", "prox"),
        ("check_hilbert_reduction", "hilbert-reduction"),
        ("check_monotonicity", "monotonicity"),
    ]:
        mocker.patch.object(checks, attr, side_effect=passing(name))


@pytest.mark.parametrize(
    "suite,kwargs",
    [
        (checks.check_adjoint, {"triples": 20}),
        (checks.check_taylor, {"directions": 2}),
        (checks.check_manufactured, {"elements": (16, 32, 64)}),
        (checks.check_soft_threshold, {}),
        (checks.check_prox, {"signals": 10}),
    ],
)
def test_suite_passes(suite, kwargs):
    result = suite(**kwargs)
    assert result.passed, f"{result.name}: {result.detail} = {result.worst}"
    assert math.isfinite(result.worst)


def test_mis_signed_adjoint_is_caught():
    result = checks.check_adjoint(triples=5, adjoint=checks._negated_adjoint)
    assert not result.passed
    assert result.worst > 0.1


def test_selftest_runs_every_suite(fast_suites):
    seen = []
    results = checks.selftest(progress=seen.append)
    assert [result.name for result in results] == SUITES
    assert seen == results
    assert all(result.passed for result in results)
    assert all(result.elapsed >= 0.0 for result in results)


def test_selftest_with_mis_signed_adjoint(fast_suites):
    results = {result.name: result for result in checks.selftest(mis_signed_adjoint=True)}
    assert not results["adjoint"].passed
    assert results["soft-threshold"].passed


def test_raising_suite_fails(fast_suites, mocker):
    mocker.patch.object(checks, "check_taylor", side_effect=SolveError("singular"))
    results = {result.name: result for result in checks.selftest()}
    assert not results["taylor"].passed
    assert math.isnan(results["taylor"].worst)
    assert "singular" in results["taylor"].detail


def test_selftest_passes_at_default_sizes():
    results = checks.selftest()
    failed = [result for result in results if not result.passed]
    assert not failed, [(result.name, result.detail, result.worst) for result in failed]
    assert sum(result.elapsed for result in results) <= 60.0


def test_monotonicity_growth_is_relative_to_current_distance(mocker):
    # an increase far below tol * D0 but far above tol * D_n
    run = [1.0, 1e-6, 1e-6 + 1e-15]
    steady = [1.0, 0.5, 0.25]
    mocker.patch.object(checks, "bregman_distance", side_effect=steady * 3 + run)
    result = checks.check_monotonicity(elements=8, iterations=2)
    assert not result.passed
    assert result.worst == pytest.approx(1e-9, rel=1e-3)
