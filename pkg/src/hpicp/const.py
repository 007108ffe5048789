from typing import Final

# banach-core
QUADRATURE_RTOL: Final[float] = 1e-12

# penalty / inner ROF solver
TV_INNER_MAX_ITERS: Final[int] = 5000
TV_INNER_TOL: Final[float] = 1e-6

# elliptic-forward
LIN_TOL: Final[float] = 1e-10
POWER_ITERATIONS: Final[int] = 20

# iterate
NU_FLOOR: Final[float] = 1e-300
STAGNATION_WINDOW: Final[int] = 50
STAGNATION_RTOL: Final[float] = 1e-14
EXACT_DATA_RESIDUAL_FLOOR: Final[float] = 1e-12
MAX_ITERS_1D: Final[int] = 200_000
MAX_ITERS_2D: Final[int] = 50_000
LOG_EVERY: Final[int] = 1000

# experiment
OUTLIER_FRACTION: Final[float] = 0.02
OUTLIER_AMPLITUDE: Final[float] = 10.0
OUTLIER_MAX_ITERS: Final[int] = 2000
DEFAULT_SEED: Final[int] = 20_240_101
FLOAT_FORMAT: Final[str] = ".17g"

HISTORY_COLUMNS: Final[tuple[str, ...]] = ("n", "res_norm", "relative_error")
TIMING_COLUMNS: Final[tuple[str, ...]] = ("n", "elapsed_s")
RECONSTRUCTION_COLUMNS_1D: Final[tuple[str, ...]] = ("x", "c", "c_true")
RECONSTRUCTION_COLUMNS_2D: Final[tuple[str, ...]] = ("x", "y", "c", "c_true")
SWEEP_COLUMNS: Final[tuple[str, ...]] = (
    "beta",
    "noise_level",
    "method",
    "n_delta",
    "relative_error",
    "time_s",
    "delta_eff",
    "stop_reason",
)

EXIT_OK: Final[int] = 0
EXIT_CONFIG_ERROR: Final[int] = 2
EXIT_SOLVER_FAILURE: Final[int] = 3
EXIT_SELFTEST_FAILURE: Final[int] = 4
