__all__ = [
    "Method",
    "StepRule",
    "StopReason",
    "SolverConfig",
    "IterationState",
    "IterationRecord",
    "RunHistory",
    "StepSizes",
    "default_mu0",
    "initial_state",
    "residual_dual",
    "step_sizes",
    "hpicp_step",
    "licp_step",
    "run",
]
import logging
import math
import time
from collections import namedtuple
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Optional

from .const import (
    EXACT_DATA_RESIDUAL_FLOOR,
    LOG_EVERY,
    MAX_ITERS_1D,
    NU_FLOOR,
    STAGNATION_RTOL,
    STAGNATION_WINDOW,
)
from .errors import HpicpError, Stagnation, UnsupportedConfiguration
from .forward import (
    ForwardModel,
    LinearSystem,
    adjoint_apply,
    derivative_apply,
    forward,
    operator_norm_bound,
)
from .metrics import relative_error
from .penalty import PenaltySpec, conjugate_grad, initial_subgradient
from .rof import RofScratch
from .spaces import Exponents, GridFunction, duality_map, lr_norm

logger = logging.getLogger(__name__)


StepSizes = namedtuple("StepSizes", ["mu", "nu"])


class Method(str, Enum):
    HPICP = "hpicp"
    LICP = "licp"


class StepRule(str, Enum):
    PRACTICAL = "practical"
    THEORETICAL = "theoretical"
    FIXED = "fixed"


class StopReason(str, Enum):
    DISCREPANCY = "discrepancy"
    MAX_ITERS = "max_iters"
    STAGNATION = "stagnation"
    FAILURE = "failure"


def default_mu0(tau: float, beta: float) -> float:
    return (1.0 - 1.0 / tau) / beta


@dataclass(frozen=True)
class SolverConfig:
    """Controls of one outer iteration run

    :param method: HPICP (two-term homotopy step) or LICP (Landweber step)
    :param r: Data-space exponent, Y = L^r
    :param tau: Discrepancy principle factor, tau > 1
    :param beta: Quadratic weight of the penalty, used for the default mu0
    :param mu0: Step scale; defaults to (1 - 1/tau) / beta
    :param delta_eff: Noise level measured in the L^r norm; 0 selects the
        exact-data residual floor as stopping threshold
    :param max_iters: Iteration cap
    :param use_discrepancy: Stop by the discrepancy principle; when False the
        run only ends at the cap, on stagnation or on failure
    :param nu_floor: Positive guard for step size denominators
    :param step_rule: ``practical`` step sizes, the ``theoretical`` ones
        that need B0, or ``fixed`` constants
    :param fixed_mu: mu of the fixed rule
    :param fixed_nu: nu of the fixed rule
    :param b0: Bound on |F'(x)|; estimated at the initial guess when None
    :param residual_floor: Absolute stopping threshold for exact data
    :param stagnation_window: Iterations without residual decrease before
        the run is declared stagnated
    :param log_every: Progress log period
    """

    method: Method = Method.HPICP
    r: float = 2.0
    tau: float = 1.1
    beta: float = 1.0
    mu0: Optional[float] = None
    delta_eff: float = 0.0
    max_iters: int = MAX_ITERS_1D
    use_discrepancy: bool = True
    nu_floor: float = NU_FLOOR
    step_rule: StepRule = StepRule.PRACTICAL
    fixed_mu: float = 1.0
    fixed_nu: float = 1.0
    b0: Optional[float] = None
    residual_floor: float = EXACT_DATA_RESIDUAL_FLOOR
    stagnation_window: int = STAGNATION_WINDOW
    log_every: int = LOG_EVERY

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        object.__setattr__(self, "step_rule", StepRule(self.step_rule))
        if not self.tau > 1.0:
            raise UnsupportedConfiguration(f"tau must exceed 1, got {self.tau}")
        if not self.beta > 0.0:
            raise UnsupportedConfiguration(f"beta must be positive, got {self.beta}")
        if self.mu0 is None:
            object.__setattr__(self, "mu0", default_mu0(self.tau, self.beta))
        if not self.mu0 > 0.0:
            raise UnsupportedConfiguration(f"mu0 must be positive, got {self.mu0}")
        if self.delta_eff < 0.0:
            raise UnsupportedConfiguration("delta_eff must be non-negative")
        if self.max_iters < 0:
            raise UnsupportedConfiguration("max_iters must be non-negative")
        Exponents(self.r)

    @property
    def exponents(self) -> Exponents:
        return Exponents(self.r)

    @property
    def threshold(self) -> float:
        if not self.use_discrepancy:
            return 0.0
        if self.delta_eff > 0.0:
            return self.tau * self.delta_eff
        return self.residual_floor


@dataclass(frozen=True)
class IterationState:
    """Iterate (x_n, xi_n) with its forward solution and residual

    :param n: Iteration index
    :param x: Penalized unknown; the coefficient is model.background + x
    :param xi: Dual iterate, x = conjugate_grad(xi)
    :param u: Forward solution F(x)
    :param data: Data the iteration fits
    :param residual: u - data
    :param res_norm: L^r norm of the residual
    :param elapsed: Wall time since the run started, seconds
    """

    n: int
    x: GridFunction
    xi: GridFunction
    u: GridFunction
    data: GridFunction
    residual: GridFunction
    res_norm: float
    elapsed: float = 0.0


@dataclass(frozen=True)
class IterationRecord:
    n: int
    res_norm: float
    relative_error: Optional[float]
    elapsed: float


@dataclass
class RunHistory:
    """Append-only record of one run

    :ivar records: One record per iterate, strictly increasing in n
    :ivar stop_reason: Why the run ended
    :ivar n_delta: Discrepancy stopping index, None when not reached
    :ivar final: Last iterate
    :ivar error: Message of the error that ended the run, if any
    """

    method: Method
    threshold: float
    records: list[IterationRecord] = field(default_factory=list)
    stop_reason: Optional[StopReason] = None
    n_delta: Optional[int] = None
    final: Optional[IterationState] = None
    error: Optional[str] = None

    def append(self, record: IterationRecord) -> None:
        if self.records and record.n <= self.records[-1].n:
            raise HpicpError("History records must increase in n")
        self.records.append(record)

    @property
    def elapsed(self) -> float:
        return self.records[-1].elapsed if self.records else 0.0

    @property
    def final_relative_error(self) -> Optional[float]:
        return self.records[-1].relative_error if self.records else None


def residual_dual(
    u: GridFunction, u_delta: GridFunction, r: float
) -> tuple[GridFunction, float]:
    """Return (J_r(u - u_delta), |u - u_delta|_r)"""
    residual = u - u_delta
    return duality_map(residual, r), lr_norm(residual, r, u.mesh)


def _state_at(
    n: int,
    x: GridFunction,
    xi: GridFunction,
    data: GridFunction,
    model: ForwardModel,
    config: SolverConfig,
) -> IterationState:
    u = forward(model, model.coefficient(x))
    residual = u - data
    return IterationState(
        n=n,
        x=x,
        xi=xi,
        u=u,
        data=data,
        residual=residual,
        res_norm=lr_norm(residual, config.r, model.mesh),
    )


def initial_state(
    model: ForwardModel,
    penalty: PenaltySpec,
    u_delta: GridFunction,
    config: SolverConfig,
) -> IterationState:
    """State at x0 = xi0 = 0"""
    x0 = GridFunction.zeros(model.mesh)
    return _state_at(0, x0, initial_subgradient(penalty, x0), u_delta, model, config)


@dataclass(frozen=True)
class _Directions:
    r_dual: GridFunction
    gradient: GridFunction
    image_dual: Optional[GridFunction] = None
    correction: Optional[GridFunction] = None


def _directions(
    state: IterationState,
    model: ForwardModel,
    config: SolverConfig,
    system: LinearSystem,
) -> _Directions:
    c = model.coefficient(state.x)
    r_dual = duality_map(state.residual, config.r)
    g = adjoint_apply(model, c, state.u, r_dual, system)
    if config.method is Method.LICP:
        return _Directions(r_dual, g)
    # J_{s*} is the identity on X* = L^2
    image_dual = duality_map(derivative_apply(model, c, state.u, g, system), config.r)
    correction = adjoint_apply(model, c, state.u, image_dual, system)
    return _Directions(r_dual, g, image_dual, correction)


def _step_lengths(
    state: IterationState, directions: _Directions, config: SolverConfig
) -> StepSizes:
    mesh = state.x.mesh
    g_norm = lr_norm(directions.gradient, 2, mesh)
    if g_norm == 0.0:
        raise Stagnation(
            f"Gradient vanished at n={state.n} with residual {state.res_norm}"
        )
    if config.step_rule is StepRule.FIXED:
        nu = config.fixed_nu if config.method is Method.HPICP else 0.0
        return StepSizes(config.fixed_mu, nu)

    if config.step_rule is StepRule.THEORETICAL:
        if config.b0 is None:
            raise UnsupportedConfiguration("The theoretical step rule needs b0")
        p = config.exponents.p
        mu = config.mu0 * config.b0 ** (-p) * state.res_norm ** (p - config.r)
    else:
        mu = config.mu0 * state.res_norm**config.r / max(g_norm**2, config.nu_floor)

    nu = 0.0
    if config.method is Method.HPICP:
        correction_norm = lr_norm(directions.correction, 2, mesh)
        if correction_norm == 0.0:
            raise Stagnation(f"Linearization annihilates the gradient at n={state.n}")
        r_star = config.exponents.r_star
        nu = lr_norm(directions.r_dual, r_star, mesh) / max(
            lr_norm(directions.image_dual, r_star, mesh), config.nu_floor
        )
        if config.step_rule is StepRule.PRACTICAL:
            # gradient ratio, never above the residual ratio
            nu = min(nu, g_norm**2 / max(correction_norm**2, config.nu_floor))
    if not (math.isfinite(mu) and math.isfinite(nu)):
        raise Stagnation(f"Non-finite step sizes mu={mu}, nu={nu} at n={state.n}")
    return StepSizes(mu, nu)


def step_sizes(
    state: IterationState, model: ForwardModel, config: SolverConfig
) -> StepSizes:
    """Step sizes (mu_n, nu_n) at the current state

    LICP has no nu term and reports nu = 0. HPICP takes
    nu = |J_r(res)|_{r*} / |J_r(T T* J_r(res))|_{r*}; the practical rule
    further caps it by |g|^2 / |T* J_r(T g)|^2 with g = T* J_r(res).

    :raises Stagnation: The gradient or the nu denominator vanished while
        the residual is nonzero
    """
    system = model.system(model.coefficient(state.x))
    return _step_lengths(state, _directions(state, model, config, system), config)


def _advance(
    state: IterationState,
    model: ForwardModel,
    penalty: PenaltySpec,
    config: SolverConfig,
    scratch: Optional[RofScratch],
) -> IterationState:
    if state.res_norm == 0.0:
        return replace(state, n=state.n + 1)
    system = model.system(model.coefficient(state.x))
    directions = _directions(state, model, config, system)
    mu, nu = _step_lengths(state, directions, config)
    if config.method is Method.HPICP:
        update = directions.gradient * 2.0 - directions.correction * nu
    else:
        update = directions.gradient
    xi = state.xi - update * mu
    x = conjugate_grad(penalty, xi, model.mesh, scratch)
    logger.hpicp_trace(
        "n=%s mu=%s nu=%s res=%s", state.n, mu, nu, state.res_norm
    )
    return _state_at(state.n + 1, x, xi, state.data, model, config)


def hpicp_step(
    state: IterationState,
    model: ForwardModel,
    penalty: PenaltySpec,
    config: SolverConfig,
    scratch: Optional[RofScratch] = None,
) -> IterationState:
    """One homotopy-perturbation step

    xi' = xi - mu T*(2 r - nu J_r(T T* r)) with r = J_r(F(x) - data) and
    T = F'(x); then x' = conjugate_grad(xi').
    """
    return _advance(state, model, penalty, replace(config, method=Method.HPICP), scratch)


def licp_step(
    state: IterationState,
    model: ForwardModel,
    penalty: PenaltySpec,
    config: SolverConfig,
    scratch: Optional[RofScratch] = None,
) -> IterationState:
    """One Landweber step, xi' = xi - mu T* J_r(F(x) - data)"""
    return _advance(state, model, penalty, replace(config, method=Method.LICP), scratch)


def run(
    config: SolverConfig,
    model: ForwardModel,
    penalty: PenaltySpec,
    u_delta: GridFunction,
    truth: Optional[GridFunction] = None,
    callback: Optional[Callable[[IterationState], None]] = None,
) -> RunHistory:
    """Iterate until the discrepancy principle, the cap, or stagnation stops

    :param config: Solver controls
    :param model: Forward model
    :param penalty: Penalty in force
    :param u_delta: Noisy data
    :param truth: True coefficient c; enables the relative error records
    :param callback: Called with every iterate, including the initial one
    """
    start = time.perf_counter()
    if config.step_rule is StepRule.THEORETICAL and config.b0 is None:
        c0 = model.coefficient(GridFunction.zeros(model.mesh))
        config = replace(config, b0=operator_norm_bound(model, c0))
        logger.debug("Estimated B0 = %s at the initial guess", config.b0)
    step = hpicp_step if config.method is Method.HPICP else licp_step
    scratch = RofScratch()
    threshold = config.threshold
    history = RunHistory(method=config.method, threshold=threshold)

    def record(state: IterationState) -> None:
        re = None
        if truth is not None:
            re = relative_error(model.coefficient(state.x), truth, model.mesh)
        history.append(IterationRecord(state.n, state.res_norm, re, state.elapsed))
        if callback is not None:
            callback(state)

    logger.info(
        "Starting %s run: threshold %s, max_iters %s",
        config.method.value,
        threshold,
        config.max_iters,
    )
    state = initial_state(model, penalty, u_delta, config)
    record(state)
    best = state.res_norm
    since_best = 0
    while True:
        if state.res_norm <= threshold:
            history.stop_reason = StopReason.DISCREPANCY
            history.n_delta = state.n
            break
        if state.n >= config.max_iters:
            history.stop_reason = StopReason.MAX_ITERS
            break
        previous = state
        try:
            state = step(state, model, penalty, config, scratch)
        except Stagnation as err:
            history.stop_reason = StopReason.STAGNATION
            history.error = str(err)
            break
        except HpicpError as err:
            logger.warning("Run failed at n=%s: %s", state.n, err)
            history.stop_reason = StopReason.FAILURE
            history.error = str(err)
            break
        state = replace(state, elapsed=time.perf_counter() - start)
        record(state)
        if state.n % config.log_every == 0:
            logger.debug("n=%s residual=%s", state.n, state.res_norm)
        # xi moving under a thresholded, unchanged x is progress
        dual_only = (state.x - previous.x).is_zero() and not (
            state.xi - previous.xi
        ).is_zero()
        if state.res_norm < best * (1.0 - STAGNATION_RTOL):
            best = state.res_norm
            since_best = 0
        elif not dual_only:
            since_best += 1
            if since_best >= config.stagnation_window:
                history.stop_reason = StopReason.STAGNATION
                history.error = (
                    f"Residual did not decrease over {since_best} iterations"
                )
                break
    history.final = state
    logger.info(
        "%s stopped (%s) at n=%s, residual %s, %.3fs",
        config.method.value,
        history.stop_reason.value,
        state.n,
        state.res_norm,
        time.perf_counter() - start,
    )
    return history
