"""Report files of an experiment

Layout under the output directory::

    schema.json            column documentation of every CSV below
    data.csv               node coordinates, exact and noisy data
    re_vs_time.svg         relative error against wall time, all methods
    <method>/history.csv   n, res_norm, relative_error (deterministic)
    <method>/timing.csv    n, elapsed_s
    <method>/reconstruction.csv
    <method>/summary.json
"""

__all__ = [
    "SCHEMA",
    "format_float",
    "write_history",
    "write_timing",
    "write_reconstruction",
    "write_summary",
    "write_report",
    "write_sweep",
]
import csv
import json
import logging
from pathlib import Path
from typing import TYPE_CHECKING, Any, Iterable, Optional

from .const import (
    FLOAT_FORMAT,
    HISTORY_COLUMNS,
    RECONSTRUCTION_COLUMNS_1D,
    RECONSTRUCTION_COLUMNS_2D,
    SWEEP_COLUMNS,
    TIMING_COLUMNS,
)
from .iterate import RunHistory
from .spaces import GridFunction
from .svg import line_plot

if TYPE_CHECKING:
    from .experiment import ExperimentReport, MethodSummary, Problem

logger = logging.getLogger(__name__)

SCHEMA: dict[str, dict[str, str]] = {
    "history.csv": {
        "n": "iteration index",
        "res_norm": "L^r norm of F(x_n) - u_delta",
        "relative_error": "|c_n - c_true|_2 / |c_true|_2",
    },
    "timing.csv": {
        "n": "iteration index",
        "elapsed_s": "wall time since the run started, seconds",
    },
    "reconstruction.csv": {
        "x": "node x coordinate",
        "y": "node y coordinate (2D only)",
        "c": "reconstructed coefficient",
        "c_true": "true coefficient",
    },
    "data.csv": {
        "x": "node x coordinate",
        "y": "node y coordinate (2D only)",
        "u_true": "exact data",
        "u_delta": "noisy data",
    },
    "sweep.csv": {
        "beta": "weight of the quadratic penalty term",
        "noise_level": "nominal noise level delta",
        "method": "hpicp or licp",
        "n_delta": "discrepancy stopping index, empty when not reached",
        "relative_error": "final relative error",
        "time_s": "wall time of the run, seconds",
        "delta_eff": "realized noise level in the L^r norm",
        "stop_reason": "discrepancy, max_iters, stagnation or failure",
    },
}


def format_float(value: Optional[float]) -> str:
    if value is None:
        return ""
    return format(value, FLOAT_FORMAT)


def _coordinate_columns(grid: GridFunction) -> list[list[float]]:
    coords = grid.mesh.node_coords
    if grid.mesh.dimension == 1:
        return [list(coords)]
    return [list(coords[:, 0]), list(coords[:, 1])]


def _write_csv(path: Path, header: tuple[str, ...], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def write_history(path: Path, history: RunHistory) -> None:
    _write_csv(
        path,
        HISTORY_COLUMNS,
        (
            (rec.n, format_float(rec.res_norm), format_float(rec.relative_error))
            for rec in history.records
        ),
    )


def write_timing(path: Path, history: RunHistory) -> None:
    _write_csv(
        path,
        TIMING_COLUMNS,
        ((rec.n, format_float(rec.elapsed)) for rec in history.records),
    )


def write_reconstruction(path: Path, c: GridFunction, c_true: GridFunction) -> None:
    header = (
        RECONSTRUCTION_COLUMNS_1D
        if c.mesh.dimension == 1
        else RECONSTRUCTION_COLUMNS_2D
    )
    columns = _coordinate_columns(c) + [list(c.values), list(c_true.values)]
    _write_csv(
        path, header, ([format_float(v) for v in row] for row in zip(*columns))
    )


def write_summary(
    path: Path, summary: "MethodSummary", spec_echo: dict[str, Any]
) -> None:
    payload = {
        "method": summary.method.value,
        "n_delta": summary.n_delta,
        "iterations": summary.iterations,
        "relative_error": summary.relative_error,
        "time_s": summary.time_s,
        "delta_eff": summary.delta_eff,
        "stop_reason": summary.stop_reason.value,
        "error": summary.error,
        "spec": spec_echo,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_report(
    result: "ExperimentReport", problem: "Problem", u_delta: GridFunction
) -> Path:
    """Write every report file of ``result``; returns the output directory"""
    out = result.spec.output_dir
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "schema.json", "w", encoding="utf-8") as fh:
        json.dump(SCHEMA, fh, indent=2)
        fh.write("\n")
    data_header = ("x", "u_true", "u_delta")
    if problem.mesh.dimension == 2:
        data_header = ("x", "y", "u_true", "u_delta")
    data_columns = _coordinate_columns(u_delta) + [
        list(problem.u_true.values),
        list(u_delta.values),
    ]
    _write_csv(
        out / "data.csv",
        data_header,
        ([format_float(v) for v in row] for row in zip(*data_columns)),
    )

    echo = result.spec.as_mapping()
    series = {}
    for method in result.spec.methods:
        history = result.histories[method]
        summary = result.summaries[method]
        method_dir = out / method.value
        method_dir.mkdir(exist_ok=True)
        write_history(method_dir / "history.csv", history)
        write_timing(method_dir / "timing.csv", history)
        write_reconstruction(
            method_dir / "reconstruction.csv",
            problem.model.coefficient(history.final.x),
            problem.truth,
        )
        write_summary(method_dir / "summary.json", summary, echo)
        series[method.value.upper()] = (
            [rec.elapsed for rec in history.records],
            [rec.relative_error for rec in history.records],
        )
    with open(out / "re_vs_time.svg", "w", encoding="utf-8") as fh:
        fh.write(line_plot(series, "Relative error vs time", "time (s)", "RE"))
    logger.info("Wrote report files to %s", out)
    return out


def write_sweep(path: Path, results: Iterable["ExperimentReport"]) -> None:
    """One row per (beta, noise level, method) of a parameter sweep"""
    rows = []
    for result in results:
        for method in result.spec.methods:
            summary = result.summaries[method]
            rows.append(
                (
                    format_float(result.spec.penalty.beta),
                    format_float(result.spec.noise_level),
                    method.value,
                    "" if summary.n_delta is None else summary.n_delta,
                    format_float(summary.relative_error),
                    format_float(summary.time_s),
                    format_float(summary.delta_eff),
                    summary.stop_reason.value,
                )
            )
    path.parent.mkdir(parents=True, exist_ok=True)
    _write_csv(path, SWEEP_COLUMNS, rows)
    logger.info("Wrote %s sweep rows to %s", len(rows), path)
