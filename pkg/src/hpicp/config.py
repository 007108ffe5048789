"""Flat ``key = value`` experiment files

Every key mirrors an :class:`~hpicp.experiment.ExperimentSpec` field; the
penalty fields are flattened (``penalty``, ``beta``, ``tv_inner_max_iters``,
``tv_inner_tol``, ``tv_solver``). ``#`` starts a comment.
"""

__all__ = [
    "CONFIG_KEYS",
    "parse_config_text",
    "parse_config_file",
    "coerce_value",
    "spec_from_mapping",
]
import logging
from pathlib import Path
from typing import Any, Callable, Optional, Union

from .errors import ConfigError, HpicpError
from .experiment import ExperimentSpec, ProblemKind
from .iterate import Method
from .penalty import PenaltySpec

logger = logging.getLogger(__name__)

PENALTY_KEYS = ("penalty", "beta", "tv_inner_max_iters", "tv_inner_tol", "tv_solver")


def _as_bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _as_int(raw: str) -> int:
    # base prefixes first, then zero-padded decimals
    text = raw.strip()
    try:
        return int(text, 0)
    except ValueError:
        return int(text, 10)


def _as_methods(raw: str) -> tuple[Method, ...]:
    lowered = raw.strip().lower()
    if lowered == "both":
        return (Method.HPICP, Method.LICP)
    return tuple(Method(part.strip()) for part in lowered.split(",") if part.strip())


def _as_optional_float(raw: str) -> Optional[float]:
    if raw.strip().lower() in ("", "none", "default"):
        return None
    return float(raw)


CONFIG_KEYS: dict[str, Callable[[str], Any]] = {
    "elements": _as_int,
    "penalty": lambda raw: raw.strip().upper(),
    "beta": float,
    "tv_inner_max_iters": _as_int,
    "tv_inner_tol": float,
    "tv_solver": str.strip,
    "r": float,
    "tau": float,
    "noise_level": float,
    "noise_model": str.strip,
    "outlier_fraction": float,
    "outlier_amplitude": float,
    "outlier_iters": _as_int,
    "seed": _as_int,
    "methods": _as_methods,
    "max_iters": _as_int,
    "output_dir": lambda raw: Path(raw.strip()),
    "absolute_noise": _as_bool,
    "background": float,
    "step_rule": str.strip,
    "mu0": _as_optional_float,
    "lin_tol": float,
    "log_every": _as_int,
    "parallel": _as_bool,
}


def coerce_value(key: str, raw: Any) -> Any:
    """Convert a raw string to the type of ``key``; non-strings pass through"""
    if key not in CONFIG_KEYS:
        raise ConfigError(f"Unknown configuration key {key!r}")
    if not isinstance(raw, str):
        return raw
    try:
        return CONFIG_KEYS[key](raw)
    except ValueError as err:
        raise ConfigError(f"Invalid value {raw!r} for {key!r}: {err}") from err


def parse_config_text(text: str, source: str = "<string>") -> dict[str, Any]:
    values: dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        content = line.split("#", 1)[0].strip()
        if not content:
            continue
        if "=" not in content:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, raw = (part.strip() for part in content.split("=", 1))
        if key in values:
            logger.warning("%s:%s: %s given twice, last one wins", source, lineno, key)
        try:
            values[key] = coerce_value(key, raw)
        except ConfigError as err:
            raise ConfigError(f"{source}:{lineno}: {err}") from err
    return values


def parse_config_file(path: Union[str, Path]) -> dict[str, Any]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as err:
        raise ConfigError(f"Unable to read config file {path}: {err}") from err
    values = parse_config_text(text, source=str(path))
    logger.debug("Read %s keys from %s", len(values), path)
    return values


def spec_from_mapping(problem: ProblemKind, mapping: dict[str, Any]) -> ExperimentSpec:
    """Build an experiment from problem defaults overlaid with ``mapping``

    :raises ConfigError: Unknown key, bad value, or a combination the
        experiment rejects
    """
    values = {key: coerce_value(key, raw) for key, raw in mapping.items()}
    overrides = {k: v for k, v in values.items() if k not in PENALTY_KEYS}
    try:
        spec = ExperimentSpec.for_problem(problem, **overrides)
        penalty_overrides = {k: v for k, v in values.items() if k in PENALTY_KEYS}
        if penalty_overrides:
            current = spec.penalty
            penalty = PenaltySpec(
                kind=penalty_overrides.get("penalty", current.kind),
                beta=penalty_overrides.get("beta", current.beta),
                tv_inner_max_iters=penalty_overrides.get(
                    "tv_inner_max_iters", current.tv_inner_max_iters
                ),
                tv_inner_tol=penalty_overrides.get("tv_inner_tol", current.tv_inner_tol),
                tv_solver=penalty_overrides.get("tv_solver", current.tv_solver),
            )
            spec = ExperimentSpec.for_problem(problem, penalty=penalty, **overrides)
    except (HpicpError, ValueError) as err:
        raise ConfigError(str(err)) from err
    return spec
