"""Numerical self checks

Each suite returns a :class:`SuiteResult`; :func:`selftest` runs all of them
on small 1D problems.
"""

__all__ = [
    "SuiteResult",
    "AdjointApply",
    "check_adjoint",
    "check_taylor",
    "check_manufactured",
    "check_soft_threshold",
    "check_prox",
    "check_hilbert_reduction",
    "check_monotonicity",
    "selftest",
]
import logging
import math
import time
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .bregman import bregman_distance
from .errors import HpicpError, InnerSolverDivergence
from .experiment import phantom_1d
from .forward import (
    ForwardModel,
    adjoint_apply,
    assemble_forward_model,
    derivative_apply,
    forward,
)
from .iterate import (
    IterationState,
    Method,
    SolverConfig,
    StepRule,
    hpicp_step,
    initial_state,
    licp_step,
)
from .mesh import Mesh, interval_mesh
from .noise import portable_generator
from .penalty import PenaltyKind, PenaltySpec, TvSolver, conjugate_grad
from .spaces import GridFunction, lr_norm, pairing

logger = logging.getLogger(__name__)

AdjointApply = Callable[
    [ForwardModel, GridFunction, GridFunction, GridFunction], GridFunction
]

SELFTEST_ELEMENTS = 64
SELFTEST_SEED = 7


@dataclass(frozen=True)
class SuiteResult:
    """Verdict of one check suite

    :param name: Suite name
    :param passed: Whether every case met its tolerance
    :param worst: Worst observed value of the suite's measure
    :param detail: One-line explanation of ``worst``
    :param elapsed: Wall time of the suite, seconds
    """

    name: str
    passed: bool
    worst: float
    detail: str
    elapsed: float = 0.0


def _random_coefficient(rng: np.random.Generator, mesh: Mesh) -> GridFunction:
    return GridFunction(rng.uniform(1.5, 2.5, mesh.n_nodes), mesh)


def _random_field(rng: np.random.Generator, mesh: Mesh) -> GridFunction:
    return GridFunction(rng.uniform(-1.0, 1.0, mesh.n_nodes), mesh)


def check_adjoint(
    elements: int = SELFTEST_ELEMENTS,
    triples: int = 200,
    tol: float = 1e-10,
    adjoint: AdjointApply = adjoint_apply,
    seed: int = SELFTEST_SEED,
) -> SuiteResult:
    """<zeta, F'(c) h> = <F'(c)* zeta, h> on random (c, h, zeta)

    The mismatch is measured relative to |zeta| |F'(c) h| + |F'(c)* zeta| |h|.
    """
    mesh = interval_mesh(elements)
    model = assemble_forward_model(mesh)
    rng = portable_generator(seed)
    worst = 0.0
    for _ in range(triples):
        c = _random_coefficient(rng, mesh)
        h = _random_field(rng, mesh)
        zeta = _random_field(rng, mesh)
        system = model.system(c)
        u_c = forward(model, c, system)
        w = derivative_apply(model, c, u_c, h, system)
        g = adjoint(model, c, u_c, zeta)
        scale = lr_norm(zeta, 2, mesh) * lr_norm(w, 2, mesh) + lr_norm(
            g, 2, mesh
        ) * lr_norm(h, 2, mesh)
        mismatch = abs(pairing(zeta, w, mesh) - pairing(g, h, mesh)) / scale
        worst = max(worst, mismatch)
    return SuiteResult(
        "adjoint",
        worst <= tol,
        worst,
        f"largest relative adjoint mismatch over {triples} triples (tol {tol})",
    )


def check_taylor(
    elements: int = SELFTEST_ELEMENTS,
    directions: int = 5,
    epsilons: tuple[float, ...] = (1e-2, 1e-3, 1e-4),
    ratio_range: tuple[float, float] = (8.0, 12.0),
    seed: int = SELFTEST_SEED,
) -> SuiteResult:
    """First-order Taylor remainder decays linearly in epsilon

    The remainder |F(c + eps h) - F(c) - eps F'(c) h| / |eps F'(c) h| must
    shrink by a factor within ``ratio_range`` per tenfold decrease of eps.
    """
    mesh = interval_mesh(elements)
    model = assemble_forward_model(mesh)
    rng = portable_generator(seed + 1)
    lo, hi = ratio_range
    ratios = []
    for _ in range(directions):
        c = _random_coefficient(rng, mesh)
        h = _random_field(rng, mesh)
        system = model.system(c)
        u_c = forward(model, c, system)
        w = derivative_apply(model, c, u_c, h, system)
        remainders = []
        for eps in epsilons:
            u_eps = forward(model, c + h * eps)
            remainder = u_eps - u_c - w * eps
            remainders.append(lr_norm(remainder, 2, mesh) / (eps * lr_norm(w, 2, mesh)))
        ratios.extend(a / b for a, b in zip(remainders, remainders[1:]))
    worst = max(ratios, key=lambda ratio: abs(math.log10(ratio)))
    return SuiteResult(
        "taylor",
        all(lo <= ratio <= hi for ratio in ratios),
        worst,
        f"remainder decay ratio farthest from 10 (allowed {lo}-{hi})",
    )


def check_manufactured(
    elements: tuple[int, ...] = (16, 32, 64, 128), min_ratio: float = 3.5
) -> SuiteResult:
    """u = cos(pi x) solves -u'' + u = (pi^2 + 1) cos(pi x) with u'(+-1) = 0"""
    errors = []
    for count in elements:
        mesh = interval_mesh(count)
        exact = np.cos(np.pi * mesh.node_coords)
        f = GridFunction((np.pi**2 + 1.0) * exact, mesh)
        model = assemble_forward_model(mesh, f=f)
        u = forward(model, GridFunction.constant(1.0, mesh))
        errors.append(lr_norm(u - exact, 2, mesh))
    ratios = [a / b for a, b in zip(errors, errors[1:])]
    worst = min(ratios)
    return SuiteResult(
        "manufactured",
        worst >= min_ratio,
        worst,
        f"smallest error reduction per mesh halving (need >= {min_ratio})",
    )


def check_soft_threshold(
    elements: int = SELFTEST_ELEMENTS, samples: int = 20, seed: int = SELFTEST_SEED
) -> SuiteResult:
    """conjugate_grad of the L2 + L1 penalty equals beta * shrink(xi) exactly"""
    mesh = interval_mesh(elements)
    rng = portable_generator(seed + 2)
    worst = 0.0
    for _ in range(samples):
        beta = float(rng.uniform(0.1, 10.0))
        xi = 3.0 * rng.standard_normal(mesh.n_nodes)
        spec = PenaltySpec(kind=PenaltyKind.L2L1, beta=beta)
        got = conjugate_grad(spec, GridFunction(xi, mesh), mesh).values
        expected = np.where(
            xi > 1.0, beta * (xi - 1.0), np.where(xi < -1.0, beta * (xi + 1.0), 0.0)
        )
        worst = max(worst, float(np.max(np.abs(got - expected))))
    return SuiteResult(
        "soft-threshold",
        worst == 0.0,
        worst,
        "largest deviation from the closed form (must be exactly 0)",
    )


def check_prox(
    signals: int = 50,
    nodes: int = 8,
    tol: float = 1e-5,
    seed: int = SELFTEST_SEED,
) -> SuiteResult:
    """FISTA on the L2 + TV penalty against the exact taut-string solution"""
    mesh = interval_mesh(nodes - 1)
    rng = portable_generator(seed + 3)
    worst = 0.0
    for _ in range(signals):
        beta = float(rng.uniform(0.1, 2.0))
        xi = GridFunction(rng.standard_normal(nodes), mesh)
        fista = PenaltySpec(
            kind=PenaltyKind.L2TV,
            beta=beta,
            tv_inner_max_iters=5000,
            tv_inner_tol=1e-14,
        )
        exact = replace(fista, tv_solver=TvSolver.TAUT_STRING)
        try:
            got = conjugate_grad(fista, xi, mesh).values
        except InnerSolverDivergence as err:
            # stalled at rounding level before meeting the relative tolerance
            got = err.last_iterate.values
        expected = conjugate_grad(exact, xi, mesh).values
        worst = max(worst, float(np.max(np.abs(got - expected))))
    return SuiteResult(
        "prox",
        worst <= tol,
        worst,
        f"largest FISTA vs taut-string deviation over {signals} signals (tol {tol})",
    )


def _perturbed_state(
    model: ForwardModel, rng: np.random.Generator, r: float
) -> IterationState:
    mesh = model.mesh
    x = GridFunction(0.3 * rng.uniform(-1.0, 1.0, mesh.n_nodes), mesh)
    data = forward(model, model.coefficient(_random_field(rng, mesh) * 0.5))
    u = forward(model, model.coefficient(x))
    residual = u - data
    return IterationState(
        n=0,
        x=x,
        xi=x,
        u=u,
        data=data,
        residual=residual,
        res_norm=lr_norm(residual, r, mesh),
    )


def check_hilbert_reduction(
    instances: int = 20, elements: int = 16, tol: float = 1e-12, seed: int = SELFTEST_SEED
) -> SuiteResult:
    """Quadratic penalty with r = 2 and unit steps reduces to the Hilbert updates

    HPICP: x' = x - T*(2I - T T*)(F(x) - y); LICP: x' = x - T*(F(x) - y).
    """
    mesh = interval_mesh(elements)
    model = assemble_forward_model(mesh, background=2.0)
    penalty = PenaltySpec(kind=PenaltyKind.L2, beta=1.0)
    config = SolverConfig(r=2.0, step_rule=StepRule.FIXED, fixed_mu=1.0, fixed_nu=1.0)
    rng = portable_generator(seed + 4)
    worst = 0.0
    for _ in range(instances):
        state = _perturbed_state(model, rng, 2.0)
        c = model.coefficient(state.x)
        g = adjoint_apply(model, c, state.u, state.residual)
        tg = derivative_apply(model, c, state.u, g)
        ttg = adjoint_apply(model, c, state.u, tg)
        expected = {
            Method.HPICP: state.x - (g * 2.0 - ttg),
            Method.LICP: state.x - g,
        }
        for method, step in ((Method.HPICP, hpicp_step), (Method.LICP, licp_step)):
            got = step(state, model, penalty, config).x
            err = lr_norm(got - expected[method], 2, mesh) / lr_norm(
                expected[method], 2, mesh
            )
            worst = max(worst, err)
    return SuiteResult(
        "hilbert-reduction",
        worst <= tol,
        worst,
        f"largest relative deviation over {instances} instances (tol {tol})",
    )


def check_monotonicity(
    elements: int = SELFTEST_ELEMENTS,
    iterations: int = 200,
    tol: float = 1e-12,
    beta: float = 20.0,
) -> SuiteResult:
    """Bregman distance to the truth never grows on exact data

    Runs both methods under both penalties; a step may raise D by at most
    ``tol`` times the distance it reaches.
    """
    mesh = interval_mesh(elements)
    model = assemble_forward_model(mesh, background=2.0)
    truth = phantom_1d(mesh)
    x_true = truth - model.background
    data = forward(model, truth)
    config = SolverConfig(r=2.0, tau=1.1, beta=beta)
    penalties = (
        PenaltySpec(kind=PenaltyKind.L2L1, beta=beta),
        PenaltySpec(kind=PenaltyKind.L2TV, beta=beta, tv_solver=TvSolver.TAUT_STRING),
    )
    worst = -math.inf
    detail = ""
    for penalty in penalties:
        for method, step in ((Method.HPICP, hpicp_step), (Method.LICP, licp_step)):
            state = initial_state(model, penalty, data, config)
            previous = bregman_distance(penalty, x_true, state.x, state.xi, mesh)
            for _ in range(iterations):
                if state.res_norm == 0.0:
                    break
                state = step(state, model, penalty, config)
                current = bregman_distance(penalty, x_true, state.x, state.xi, mesh)
                growth = current - previous
                if current > 0.0:
                    growth /= current
                if growth > worst:
                    worst = growth
                    detail = f"{method.value}/{penalty.kind.value} at n={state.n}"
                previous = current
    return SuiteResult(
        "monotonicity",
        worst <= tol,
        worst,
        f"largest relative Bregman increase, {detail} (tol {tol})",
    )


def _negated_adjoint(
    model: ForwardModel, c: GridFunction, u_c: GridFunction, zeta: GridFunction
) -> GridFunction:
    return -adjoint_apply(model, c, u_c, zeta)


def _timed(name: str, suite: Callable[[], SuiteResult]) -> SuiteResult:
    start = time.perf_counter()
    try:
        result = suite()
    except HpicpError as err:
        result = SuiteResult(name, False, math.nan, f"raised {err!r}")
    return replace(result, elapsed=time.perf_counter() - start)


def selftest(
    mis_signed_adjoint: bool = False,
    progress: Optional[Callable[[SuiteResult], None]] = None,
) -> list[SuiteResult]:
    """Run every suite at the small self-test sizes

    :param mis_signed_adjoint: Negate the adjoint handed to the adjoint suite;
        that suite must then fail
    :param progress: Called with each verdict as soon as it is known
    """
    adjoint = _negated_adjoint if mis_signed_adjoint else adjoint_apply
    suites: list[tuple[str, Callable[[], SuiteResult]]] = [
        ("adjoint", lambda: check_adjoint(adjoint=adjoint)),
        ("taylor", check_taylor),
        ("manufactured", check_manufactured),
        ("soft-threshold", check_soft_threshold),
        ("prox", check_prox),
        ("hilbert-reduction", check_hilbert_reduction),
        ("monotonicity", check_monotonicity),
    ]
    results = []
    for name, suite in suites:
        result = _timed(name, suite)
        logger.info(
            "%s: %s (%s = %s, %.2fs)",
            result.name,
            "PASS" if result.passed else "FAIL",
            result.detail,
            result.worst,
            result.elapsed,
        )
        if progress is not None:
            progress(result)
        results.append(result)
    return results
