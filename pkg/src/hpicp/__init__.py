__all__ = [
    "ExperimentSpec",
    "ForwardModel",
    "GridFunction",
    "HpicpError",
    "Method",
    "Mesh",
    "PenaltyKind",
    "PenaltySpec",
    "RunHistory",
    "SolverConfig",
    "bregman_distance",
    "conjugate_grad",
    "duality_map",
    "lr_norm",
    "pairing",
    "run",
    "run_experiment",
    "selftest",
]

import logging
from importlib.metadata import PackageNotFoundError, version
from typing import Optional

from .bregman import bregman_distance
from .checks import selftest
from .errors import HpicpError
from .experiment import ExperimentSpec, run_experiment
from .forward import ForwardModel
from .iterate import Method, RunHistory, SolverConfig, run
from .mesh import Mesh
from .penalty import PenaltyKind, PenaltySpec, conjugate_grad
from .spaces import GridFunction, duality_map, lr_norm, pairing

logger = logging.getLogger(__name__)

try:
    # Change here if project is renamed and does not equal the package name
    dist_name = "hpicp-regularization"
    __version__ = version(dist_name)
except PackageNotFoundError:  # pragma: no cover
    __version__ = "unknown"
finally:
    del version, PackageNotFoundError


def add_logging_level(
    level_name: str, level_num: int, method_name: Optional[str] = None
) -> None:
    """Register a logging level together with a logger method for it

    ``level_name`` becomes an attribute of :mod:`logging`; ``method_name``
    (``level_name.lower()`` by default) becomes a method of the logger class
    and a module-level function of :mod:`logging`.

    :raises AttributeError: The level or method name is already taken

    Example
    -------
    >>> add_logging_level("TRACE", logging.DEBUG - 5)
    >>> logging.getLogger(__name__).setLevel("TRACE")
    >>> logging.getLogger(__name__).trace("that worked")
    """
    if not method_name:
        method_name = level_name.lower()

    if hasattr(logging, level_name):
        raise AttributeError(f"{level_name} already defined in logging module")
    if hasattr(logging, method_name):
        raise AttributeError(f"{method_name} already defined in logging module")
    if hasattr(logging.getLoggerClass(), method_name):
        raise AttributeError(f"{method_name} already defined in logger class")

    def log_for_level(self, message, *args, **kwargs):
        if self.isEnabledFor(level_num):
            self._log(level_num, message, args, **kwargs)

    def log_to_root(message, *args, **kwargs):
        logging.log(level_num, message, *args, **kwargs)

    logging.addLevelName(level_num, level_name)
    setattr(logging, level_name, level_num)
    setattr(logging.getLoggerClass(), method_name, log_for_level)
    setattr(logging, method_name, log_to_root)


# Per-iteration diagnostics (step sizes, inner solver counts)
add_logging_level("HPICP_TRACE", logging.DEBUG - 5)
