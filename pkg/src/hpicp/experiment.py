__all__ = [
    "ProblemKind",
    "ExperimentSpec",
    "Problem",
    "MethodSummary",
    "ExperimentReport",
    "phantom_1d",
    "phantom_2d",
    "build_problem",
    "make_noisy_data",
    "relative_error",
    "solver_config",
    "solve_method",
    "run_experiment",
]
import logging
import time
from dataclasses import dataclass, field, fields
from enum import Enum
from functools import partial
from pathlib import Path
from typing import Any, Optional

import anyio
import anyio.to_thread
import numpy as np

from . import report
from .const import (
    DEFAULT_SEED,
    LIN_TOL,
    LOG_EVERY,
    MAX_ITERS_1D,
    MAX_ITERS_2D,
    OUTLIER_AMPLITUDE,
    OUTLIER_FRACTION,
    OUTLIER_MAX_ITERS,
)
from .errors import UnsupportedConfiguration
from .forward import ForwardModel, assemble_forward_model, forward
from .iterate import Method, RunHistory, SolverConfig, StepRule, StopReason, run
from .mesh import Mesh, interval_mesh, square_mesh
from .metrics import relative_error
from .noise import NoiseModel, NoiseSpec, make_noise
from .penalty import PenaltyKind, PenaltySpec, TvSolver
from .spaces import GridFunction

logger = logging.getLogger(__name__)


class ProblemKind(str, Enum):
    POT1D = "pot1d"
    POT2D = "pot2d"


@dataclass(frozen=True)
class ExperimentSpec:
    """One experiment: a phantom, its noisy data, and the methods to compare

    :param problem: ``pot1d`` (piecewise constant potential on [-1, 1]) or
        ``pot2d`` (smooth bump on [-1, 1]^2)
    :param elements: Elements in 1D, squares per side in 2D (2 elements^2
        triangles)
    :param penalty: Convex penalty
    :param r: Data-space exponent
    :param tau: Discrepancy principle factor
    :param noise_level: delta, relative to max|u| unless ``absolute_noise``
    :param noise_model: ``gaussian`` or ``outliers``
    :param outlier_fraction: Share of nodes turned into outliers
    :param outlier_amplitude: Outlier offset as a multiple of max|u|
    :param outlier_iters: Iteration budget of outlier runs, which do not stop
        by the discrepancy principle
    :param seed: Noise generator seed
    :param methods: Methods to run on the same noisy data
    :param max_iters: Iteration cap per method
    :param output_dir: Where the report files go
    :param absolute_noise: Interpret ``noise_level`` as absolute
    :param background: Known background potential, c = background + x
    :param step_rule: Step size rule
    :param mu0: Step scale; (1 - 1/tau) / beta when None
    :param lin_tol: CG tolerance of 2D solves
    :param log_every: Progress log period
    :param parallel: Run the methods concurrently in worker threads
    """

    problem: ProblemKind = ProblemKind.POT1D
    elements: int = 256
    penalty: PenaltySpec = field(
        default_factory=lambda: PenaltySpec(kind=PenaltyKind.L2TV, beta=20.0)
    )
    r: float = 2.0
    tau: float = 1.1
    noise_level: float = 0.001
    noise_model: NoiseModel = NoiseModel.GAUSSIAN
    outlier_fraction: float = OUTLIER_FRACTION
    outlier_amplitude: float = OUTLIER_AMPLITUDE
    outlier_iters: int = OUTLIER_MAX_ITERS
    seed: int = DEFAULT_SEED
    methods: tuple[Method, ...] = (Method.HPICP, Method.LICP)
    max_iters: int = MAX_ITERS_1D
    output_dir: Path = Path("results")
    absolute_noise: bool = False
    background: float = 2.0
    step_rule: StepRule = StepRule.PRACTICAL
    mu0: Optional[float] = None
    lin_tol: float = LIN_TOL
    log_every: int = LOG_EVERY
    parallel: bool = False

    def __post_init__(self):
        object.__setattr__(self, "problem", ProblemKind(self.problem))
        object.__setattr__(self, "noise_model", NoiseModel(self.noise_model))
        object.__setattr__(self, "step_rule", StepRule(self.step_rule))
        object.__setattr__(self, "methods", tuple(Method(m) for m in self.methods))
        object.__setattr__(self, "output_dir", Path(self.output_dir))
        if not self.tau > 1.0:
            raise UnsupportedConfiguration(f"tau must exceed 1, got {self.tau}")
        if not self.r > 1.0:
            raise UnsupportedConfiguration(f"r must exceed 1, got {self.r}")
        if self.noise_level < 0.0:
            raise UnsupportedConfiguration("noise_level must be non-negative")
        if not 0.0 <= self.outlier_fraction <= 1.0:
            raise UnsupportedConfiguration("outlier_fraction must lie in [0, 1]")
        if self.outlier_iters < 0:
            raise UnsupportedConfiguration("outlier_iters must be non-negative")
        if self.elements < 8:
            raise UnsupportedConfiguration("elements must be at least 8")
        if not self.methods:
            raise UnsupportedConfiguration("At least one method is required")
        if (
            self.problem is ProblemKind.POT2D
            and self.penalty.kind is PenaltyKind.L2TV
            and self.penalty.tv_solver is TvSolver.TAUT_STRING
        ):
            raise UnsupportedConfiguration("The taut-string TV solver is 1D only")

    @classmethod
    def for_problem(cls, problem: ProblemKind, **overrides: Any) -> "ExperimentSpec":
        """Spec with the reference defaults of the given problem"""
        problem = ProblemKind(problem)
        if problem is ProblemKind.POT1D:
            defaults = {
                "elements": 256,
                "penalty": PenaltySpec(kind=PenaltyKind.L2TV, beta=20.0),
                "tau": 1.1,
                "noise_level": 0.001,
                "max_iters": MAX_ITERS_1D,
                "background": 2.0,
            }
        else:
            defaults = {
                "elements": 32,
                "penalty": PenaltySpec(kind=PenaltyKind.L2L1, beta=1.0),
                "tau": 2.1,
                "noise_level": 0.01,
                "max_iters": MAX_ITERS_2D,
                "background": 1.0,
            }
        defaults.update(overrides)
        return cls(problem=problem, **defaults)

    def as_mapping(self) -> dict[str, Any]:
        """Flat key/value view, penalty fields inlined"""
        flat: dict[str, Any] = {}
        for spec_field in fields(self):
            value = getattr(self, spec_field.name)
            if spec_field.name == "penalty":
                flat["penalty"] = value.kind.value
                flat["beta"] = value.beta
                flat["tv_inner_max_iters"] = value.tv_inner_max_iters
                flat["tv_inner_tol"] = value.tv_inner_tol
                flat["tv_solver"] = value.tv_solver.value
            elif spec_field.name == "methods":
                flat["methods"] = ",".join(m.value for m in value)
            elif isinstance(value, Enum):
                flat[spec_field.name] = value.value
            elif isinstance(value, Path):
                flat[spec_field.name] = str(value)
            else:
                flat[spec_field.name] = value
        return flat


@dataclass(frozen=True)
class Problem:
    mesh: Mesh
    model: ForwardModel
    truth: GridFunction
    u_true: GridFunction


@dataclass(frozen=True)
class MethodSummary:
    method: Method
    n_delta: Optional[int]
    iterations: int
    relative_error: Optional[float]
    time_s: float
    delta_eff: float
    stop_reason: StopReason
    error: Optional[str] = None

    @property
    def failed(self) -> bool:
        return self.stop_reason is StopReason.FAILURE


@dataclass
class ExperimentReport:
    spec: ExperimentSpec
    delta_eff: float
    summaries: dict[Method, MethodSummary] = field(default_factory=dict)
    histories: dict[Method, RunHistory] = field(default_factory=dict)

    @property
    def failed(self) -> bool:
        return any(summary.failed for summary in self.summaries.values())


def phantom_1d(mesh: Mesh) -> GridFunction:
    """Piecewise constant potential with three bumps on closed intervals"""
    if mesh.dimension != 1:
        raise UnsupportedConfiguration("phantom_1d needs a 1D mesh")
    x = mesh.node_coords
    eps = 1e-12

    def chi(lo: float, hi: float) -> np.ndarray:
        return ((x >= lo - eps) & (x <= hi + eps)).astype(float)

    values = 2.0 + 0.75 * chi(-0.5, -0.3) + 1.5 * chi(-0.1, 0.1) + 0.5 * chi(0.3, 0.5)
    return GridFunction(values, mesh)


def phantom_2d(mesh: Mesh) -> GridFunction:
    """1 + cos(pi x) cos(pi y) inside the open square |(x, y)|_inf < 1/2"""
    if mesh.dimension != 2:
        raise UnsupportedConfiguration("phantom_2d needs a 2D mesh")
    x, y = mesh.node_coords[:, 0], mesh.node_coords[:, 1]
    inside = np.maximum(np.abs(x), np.abs(y)) < 0.5
    values = 1.0 + np.where(inside, np.cos(np.pi * x) * np.cos(np.pi * y), 0.0)
    return GridFunction(values, mesh)


def build_problem(spec: ExperimentSpec) -> Problem:
    if spec.problem is ProblemKind.POT1D:
        mesh = interval_mesh(spec.elements)
        truth = phantom_1d(mesh)
    else:
        mesh = square_mesh(spec.elements)
        truth = phantom_2d(mesh)
    model = assemble_forward_model(
        mesh, lin_tol=spec.lin_tol, background=spec.background
    )
    return Problem(mesh=mesh, model=model, truth=truth, u_true=forward(model, truth))


def make_noisy_data(
    u_true: GridFunction, spec: ExperimentSpec
) -> tuple[GridFunction, float]:
    """Noisy data and delta_eff = |u_delta - u_true|_{L^r}"""
    noise = NoiseSpec(
        level=spec.noise_level,
        model=spec.noise_model,
        seed=spec.seed,
        outlier_fraction=spec.outlier_fraction,
        outlier_amplitude=spec.outlier_amplitude,
        absolute=spec.absolute_noise,
    )
    return make_noise(u_true, noise, spec.r)


def solver_config(
    spec: ExperimentSpec, method: Method, delta_eff: float
) -> SolverConfig:
    """Solver controls of one method; outlier data run a fixed budget"""
    outliers = spec.noise_model is NoiseModel.OUTLIERS
    return SolverConfig(
        method=method,
        r=spec.r,
        tau=spec.tau,
        beta=spec.penalty.beta,
        mu0=spec.mu0,
        delta_eff=delta_eff,
        max_iters=spec.outlier_iters if outliers else spec.max_iters,
        use_discrepancy=not outliers,
        step_rule=spec.step_rule,
        log_every=spec.log_every,
    )


def solve_method(
    spec: ExperimentSpec,
    problem: Problem,
    method: Method,
    u_delta: GridFunction,
    delta_eff: float,
) -> tuple[RunHistory, MethodSummary]:
    """Run one method on prepared data and summarize it"""
    start = time.perf_counter()
    history = run(
        solver_config(spec, method, delta_eff),
        problem.model,
        spec.penalty,
        u_delta,
        truth=problem.truth,
    )
    summary = MethodSummary(
        method=method,
        n_delta=history.n_delta,
        iterations=history.final.n,
        relative_error=history.final_relative_error,
        time_s=time.perf_counter() - start,
        delta_eff=delta_eff,
        stop_reason=history.stop_reason,
        error=history.error,
    )
    return history, summary


async def run_experiment(spec: ExperimentSpec, write: bool = True) -> ExperimentReport:
    """Run every requested method on one set of noisy data

    With ``spec.parallel`` the methods run concurrently in worker threads;
    they share only read-only inputs.

    :param spec: Experiment to run
    :param write: Write the report files to ``spec.output_dir``
    """
    problem = build_problem(spec)
    u_delta, delta_eff = make_noisy_data(problem.u_true, spec)
    result = ExperimentReport(spec=spec, delta_eff=delta_eff)

    async def one(method: Method) -> None:
        job = partial(solve_method, spec, problem, method, u_delta, delta_eff)
        if spec.parallel:
            history, summary = await anyio.to_thread.run_sync(job)
        else:
            history, summary = job()
        result.histories[method] = history
        result.summaries[method] = summary
        logger.info(
            "%s: n_delta=%s RE=%s time=%.3fs (%s)",
            method.value,
            summary.n_delta,
            summary.relative_error,
            summary.time_s,
            summary.stop_reason.value,
        )

    if spec.parallel:
        async with anyio.create_task_group() as tg:
            for method in spec.methods:
                tg.start_soon(one, method)
    else:
        for method in spec.methods:
            await one(method)

    if write:
        report.write_report(result, problem, u_delta)
    return result
