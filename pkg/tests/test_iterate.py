from dataclasses import replace

import numpy as np
import pytest

import hpicp.iterate
from hpicp.bregman import bregman_distance
from hpicp.checks import check_hilbert_reduction, check_monotonicity
from hpicp.errors import HpicpError, SolveError, UnsupportedConfiguration
from hpicp.experiment import phantom_1d
from hpicp.forward import (
    adjoint_apply,
    assemble_forward_model,
    derivative_apply,
    forward,
    operator_norm_bound,
)
from hpicp.iterate import (
    IterationRecord,
    IterationState,
    Method,
    RunHistory,
    SolverConfig,
    StepRule,
    StopReason,
    default_mu0,
    hpicp_step,
    initial_state,
    licp_step,
    residual_dual,
    run,
    step_sizes,
)
from hpicp.mesh import interval_mesh
from hpicp.penalty import PenaltyKind, PenaltySpec, TvSolver, conjugate_grad
from hpicp.spaces import GridFunction, lr_norm


@pytest.fixture
def problem():
    mesh = interval_mesh(32)
    model = assemble_forward_model(mesh, background=2.0)
    truth = phantom_1d(mesh)
    return model, truth, forward(model, truth)


def noisy(u, level, seed=0):
    rng = np.random.default_rng(seed)
    return u + GridFunction(level * rng.standard_normal(u.mesh.n_nodes), u.mesh)


def test_default_mu0():
    assert default_mu0(1.1, 20.0) == pytest.approx(4.5454545454545e-3, rel=1e-12)
    assert SolverConfig(tau=1.1, beta=20.0).mu0 == pytest.approx(4.5454545454545e-3)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"tau": 1.0},
        {"beta": 0.0},
        {"mu0": -1.0},
        {"delta_eff": -0.1},
        {"r": 1.0},
        {"max_iters": -1},
    ],
)
def test_solver_config_validation(kwargs):
    with pytest.raises(UnsupportedConfiguration):
        SolverConfig(**kwargs)


def test_threshold():
    assert SolverConfig(tau=2.0, delta_eff=0.5).threshold == 1.0
    assert SolverConfig(delta_eff=0.0).threshold == 1e-12
    assert SolverConfig(delta_eff=0.5, use_discrepancy=False).threshold == 0.0


def test_residual_dual(mesh_8):
    rng = np.random.default_rng(0)
    u = GridFunction(rng.standard_normal(8), mesh_8)
    data = GridFunction(rng.standard_normal(8), mesh_8)
    dual, norm = residual_dual(u, u, 1.5)
    assert dual.is_zero() and norm == 0.0
    dual, norm = residual_dual(u, data, 2.0)
    assert np.array_equal(dual.values, (u - data).values)
    assert norm == pytest.approx(lr_norm(u - data, 2, mesh_8))
    dual, _ = residual_dual(u, data, 1.05)
    diff = u.values - data.values
    assert dual.values == pytest.approx(np.abs(diff) ** 0.05 * np.sign(diff))


def test_history_must_increase():
    history = RunHistory(method=Method.HPICP, threshold=1.0)
    history.append(IterationRecord(0, 1.0, None, 0.0))
    history.append(IterationRecord(1, 0.5, None, 0.1))
    with pytest.raises(HpicpError):
        history.append(IterationRecord(1, 0.4, None, 0.2))
    assert history.elapsed == 0.1


def test_step_sizes_positive(problem):
    model, _, u = problem
    data = noisy(u, 1e-3)
    penalty = PenaltySpec(kind=PenaltyKind.L2L1, beta=20.0)
    for method in Method:
        config = SolverConfig(method=method, beta=20.0)
        state = initial_state(model, penalty, data, config)
        mu, nu = step_sizes(state, model, config)
        assert mu > 0 and np.isfinite(mu)
        if method is Method.LICP:
            assert nu == 0.0
        else:
            assert nu > 0 and np.isfinite(nu)


def test_theoretical_step_rule_needs_b0(problem):
    model, _, u = problem
    penalty = PenaltySpec(kind=PenaltyKind.L2L1, beta=20.0)
    config = SolverConfig(step_rule=StepRule.THEORETICAL, beta=20.0)
    state = initial_state(model, penalty, noisy(u, 1e-3), config)
    with pytest.raises(UnsupportedConfiguration):
        step_sizes(state, model, config)
    mu, nu = step_sizes(state, model, replace(config, b0=0.25))
    assert mu > 0 and nu > 0


def test_exact_data_is_fixed_point(problem):
    model, truth, _ = problem
    x = truth - model.background
    u = forward(model, truth)
    state = IterationState(
        n=3, x=x, xi=x * (1.0 / 20.0), u=u, data=u, residual=u - u, res_norm=0.0
    )
    penalty = PenaltySpec(kind=PenaltyKind.L2, beta=20.0)
    for step in (hpicp_step, licp_step):
        nxt = step(state, model, penalty, SolverConfig(beta=20.0))
        assert nxt.n == 4
        assert np.array_equal(nxt.x.values, state.x.values)
        assert np.array_equal(nxt.xi.values, state.xi.values)


def test_zero_nu_is_doubled_landweber(problem):
    model, _, u = problem
    penalty = PenaltySpec(kind=PenaltyKind.L2L1, beta=20.0)
    base = SolverConfig(step_rule=StepRule.FIXED, fixed_mu=1e-3, fixed_nu=0.0, beta=20.0)
    state = initial_state(model, penalty, noisy(u, 1e-3), base)
    homotopy = hpicp_step(state, model, penalty, base)
    landweber = licp_step(state, model, penalty, replace(base, fixed_mu=2e-3))
    assert homotopy.xi.values == pytest.approx(landweber.xi.values, rel=1e-14, abs=1e-300)


def test_hilbert_reduction():
    result = check_hilbert_reduction()
    assert result.passed, f"{result.detail}: {result.worst}"


def test_bregman_distance_monotone_on_exact_data():
    result = check_monotonicity(elements=32, iterations=100)
    assert result.passed, f"{result.detail}: {result.worst}"


def test_run_stops_by_discrepancy(problem):
    model, truth, u = problem
    data = noisy(u, 0.02 * float(np.max(np.abs(u.values))))
    delta_eff = lr_norm(data - u, 2, model.mesh)
    penalty = PenaltySpec(kind=PenaltyKind.L2L1, beta=20.0)
    config = SolverConfig(tau=2.0, beta=20.0, delta_eff=delta_eff, max_iters=20000)
    history = run(config, model, penalty, data, truth=truth)
    assert history.stop_reason is StopReason.DISCREPANCY
    assert history.n_delta == history.final.n <= config.max_iters
    assert history.final.res_norm <= config.threshold
    ns = [rec.n for rec in history.records]
    assert ns == list(range(len(ns)))
    assert history.records[0].relative_error == pytest.approx(
        lr_norm(truth - 2.0, 2, model.mesh) / lr_norm(truth, 2, model.mesh)
    )
    assert history.final_relative_error < history.records[0].relative_error


def test_run_hits_iteration_cap(problem):
    model, truth, u = problem
    penalty = PenaltySpec(kind=PenaltyKind.L2L1, beta=20.0)
    calls = []
    history = run(
        SolverConfig(beta=20.0, max_iters=5),
        model,
        penalty,
        u,
        truth=truth,
        callback=calls.append,
    )
    assert history.stop_reason is StopReason.MAX_ITERS
    assert history.n_delta is None
    assert len(history.records) == 6 == len(calls)


def test_run_reports_failure(problem, mocker):
    model, _, u = problem
    mocker.patch("hpicp.iterate.hpicp_step", side_effect=SolveError("singular"))
    history = run(SolverConfig(max_iters=10), model, PenaltySpec(kind="L2L1"), u)
    assert history.stop_reason is StopReason.FAILURE
    assert history.error == "singular"
    assert history.final.n == 0


def test_run_detects_stagnation(problem, mocker):
    model, _, u = problem
    mocker.patch(
        "hpicp.iterate.licp_step",
        side_effect=lambda state, *args: replace(state, n=state.n + 1),
    )
    config = SolverConfig(method=Method.LICP, max_iters=1000, stagnation_window=7)
    history = run(config, model, PenaltySpec(kind="L2L1"), noisy(u, 0.01))
    assert history.stop_reason is StopReason.STAGNATION
    assert history.final.n == 7


def test_run_theoretical_rule_estimates_b0(problem, mocker):
    model, truth, u = problem
    spy = mocker.spy(hpicp.iterate, "operator_norm_bound")
    config = SolverConfig(step_rule=StepRule.THEORETICAL, beta=20.0, max_iters=3)
    history = run(config, model, PenaltySpec(kind="L2L1", beta=20.0), noisy(u, 1e-3))
    assert spy.call_count == 1
    assert history.stop_reason is not None
    assert history.records[0].n == 0


def test_run_keeps_going_while_only_xi_moves(problem, mocker):
    model, _, u = problem
    mocker.patch(
        "hpicp.iterate.licp_step",
        side_effect=lambda state, *args: replace(state, n=state.n + 1, xi=state.xi + 1.0),
    )
    config = SolverConfig(method=Method.LICP, max_iters=20, stagnation_window=7)
    history = run(config, model, PenaltySpec(kind="L2L1"), noisy(u, 0.01))
    assert history.stop_reason is StopReason.MAX_ITERS
    assert history.final.n == 20


def test_practical_nu_respects_operator_bound(problem):
    """nu |T* J(T g)| <= |T| |F(x) - data| at every step"""
    model, _, u = problem
    penalty = PenaltySpec(kind=PenaltyKind.L2L1, beta=20.0)
    config = SolverConfig(tau=2.0, beta=20.0)
    state = initial_state(model, penalty, noisy(u, 1e-3), config)
    for _ in range(200):
        c = model.coefficient(state.x)
        g = adjoint_apply(model, c, state.u, state.residual)
        correction = adjoint_apply(model, c, state.u, derivative_apply(model, c, state.u, g))
        _, nu = step_sizes(state, model, config)
        bound = operator_norm_bound(model, c) * state.res_norm
        assert nu * lr_norm(correction, 2, model.mesh) <= bound * (1 + 1e-3)
        state = hpicp_step(state, model, penalty, config)


@pytest.mark.parametrize("method", list(Method))
def test_residual_decays_on_exact_data(problem, method):
    model, _, u = problem
    penalty = PenaltySpec(kind=PenaltyKind.L2, beta=20.0)
    config = SolverConfig(method=method, tau=2.0, beta=20.0, max_iters=500)
    history = run(config, model, penalty, u)
    assert history.stop_reason in (StopReason.MAX_ITERS, StopReason.DISCREPANCY)
    assert history.final.res_norm <= 0.05 * history.records[0].res_norm


@pytest.mark.parametrize("method", list(Method))
def test_bregman_distance_monotone_before_stopping(problem, method):
    model, truth, u = problem
    x_true = truth - model.background
    data = noisy(u, 0.02 * float(np.max(np.abs(u.values))))
    penalty = PenaltySpec(kind=PenaltyKind.L2L1, beta=20.0)
    config = SolverConfig(
        method=method,
        tau=2.0,
        beta=20.0,
        delta_eff=lr_norm(data - u, 2, model.mesh),
        max_iters=20000,
    )
    distances = []
    history = run(
        config,
        model,
        penalty,
        data,
        callback=lambda state: distances.append(
            bregman_distance(penalty, x_true, state.x, state.xi, model.mesh)
        ),
    )
    assert history.stop_reason is StopReason.DISCREPANCY
    assert len(distances) == history.n_delta + 1
    for before, after in zip(distances, distances[1:]):
        assert after - before <= 1e-12 * after


@pytest.mark.parametrize("method", list(Method))
@pytest.mark.parametrize("kind", [PenaltyKind.L2L1, PenaltyKind.L2TV])
def test_x_stays_conjugate_grad_of_xi(problem, method, kind):
    model, _, u = problem
    penalty = PenaltySpec(kind=kind, beta=20.0, tv_solver=TvSolver.TAUT_STRING)
    checked = []

    def resolve(state):
        again = conjugate_grad(penalty, state.xi, model.mesh)
        assert np.array_equal(state.x.values, again.values)
        checked.append(state.n)

    config = SolverConfig(method=method, tau=2.0, beta=20.0, max_iters=30)
    run(config, model, penalty, noisy(u, 1e-3), callback=resolve)
    assert checked == list(range(31))
