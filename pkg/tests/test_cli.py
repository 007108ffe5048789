import csv
import json

import pytest
from click.testing import CliRunner

from hpicp import logger
from hpicp.checks import SuiteResult
from hpicp.cli import workflow
from hpicp.errors import SolveError

SMALL = [
    "--elements",
    "16",
    "--penalty",
    "l2l1",
    "--noise-level",
    "0.02",
    "--tau",
    "2",
    "--max-iters",
    "100",
]


@pytest.fixture(autouse=True)
def reset_handlers():
    yield
    for handler in list(logger.handlers):
        logger.removeHandler(handler)


@pytest.fixture
def runner():
    return CliRunner()


def fake_selftest(results):
    def selftest(mis_signed_adjoint=False, progress=None):
        for result in results:
            progress(result)
        return results

    return selftest


def test_selftest_pass(runner, mocker):
    results = [SuiteResult("adjoint", True, 1e-15, "mismatch")]
    mocker.patch("hpicp.cli.selftest", side_effect=fake_selftest(results))
    outcome = runner.invoke(workflow, ["selftest"])
    assert outcome.exit_code == 0, outcome.output
    assert "PASS adjoint" in outcome.output
    assert "All suites passed" in outcome.output


def test_selftest_fail(runner, mocker):
    results = [
        SuiteResult("adjoint", False, 1.0, "mismatch"),
        SuiteResult("taylor", True, 10.0, "ratio"),
    ]
    patched = mocker.patch("hpicp.cli.selftest", side_effect=fake_selftest(results))
    outcome = runner.invoke(workflow, ["selftest", "--mis-signed-adjoint"])
    assert outcome.exit_code == 4
    assert "FAIL adjoint" in outcome.output
    assert "Failed suites: adjoint" in outcome.output
    assert patched.call_args.kwargs["mis_signed_adjoint"] is True


def test_run_1d(runner, tmp_path):
    out = tmp_path / "run"
    outcome = runner.invoke(
        workflow, ["run-1d", *SMALL, "--seed", "3", "--method", "hpicp", "--out", str(out)]
    )
    assert outcome.exit_code == 0, outcome.output
    assert "hpicp: n_delta=" in outcome.output
    summary = json.loads((out / "hpicp" / "summary.json").read_text())
    assert summary["spec"]["seed"] == 3
    assert summary["spec"]["methods"] == "hpicp"
    assert not (out / "licp").exists()


@pytest.mark.parametrize("flag,expected", [([], False), (["--absolute-noise"], True)])
def test_absolute_noise_is_a_switch(runner, tmp_path, flag, expected):
    out = tmp_path / "run"
    outcome = runner.invoke(
        workflow, ["run-1d", *SMALL, *flag, "--method", "licp", "--out", str(out)]
    )
    assert outcome.exit_code == 0, outcome.output
    summary = json.loads((out / "licp" / "summary.json").read_text())
    assert summary["spec"]["absolute_noise"] is expected


def test_run_1d_reads_config(runner, tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("elements = 16\npenalty = l2l1\nmax_iters = 10\nmethods = licp\n")
    out = tmp_path / "run"
    outcome = runner.invoke(
        workflow, ["-v", "run-1d", "--config", str(path), "--max-iters", "5", "--out", str(out)]
    )
    assert outcome.exit_code == 0, outcome.output
    summary = json.loads((out / "licp" / "summary.json").read_text())
    assert summary["spec"]["max_iters"] == 5
    assert summary["iterations"] <= 5


@pytest.mark.parametrize(
    "args",
    [
        ["--elements", "many"],
        ["--tau", "0.5"],
        ["--config", "does-not-exist.cfg"],
        ["--penalty", "l2tv", "--tv-solver", "taut-string"],
    ],
)
def test_run_2d_config_errors(runner, tmp_path, args):
    outcome = runner.invoke(workflow, ["run-2d", *args, "--out", str(tmp_path)])
    assert outcome.exit_code == 2
    assert "Configuration error" in outcome.output


def test_solver_failure_exit_code(runner, tmp_path, mocker):
    mocker.patch("hpicp.iterate.hpicp_step", side_effect=SolveError("singular"))
    outcome = runner.invoke(
        workflow, ["run-1d", *SMALL, "--method", "hpicp", "--out", str(tmp_path)]
    )
    assert outcome.exit_code == 3
    assert "stop=failure error=singular" in outcome.output


def test_sweep(runner, tmp_path):
    outcome = runner.invoke(
        workflow,
        [
            "sweep",
            *SMALL,
            "--betas",
            "10,20",
            "--deltas",
            "0.02",
            "--method",
            "licp",
            "--out",
            str(tmp_path),
        ],
    )
    assert outcome.exit_code == 0, outcome.output
    with open(tmp_path / "sweep.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [(row["beta"], row["noise_level"], row["method"]) for row in rows] == [
        ("10", "0.02", "licp"),
        ("20", "0.02", "licp"),
    ]
    assert (tmp_path / "beta=10_delta=0.02" / "licp" / "history.csv").exists()


def test_sweep_rejects_bad_grid(runner):
    outcome = runner.invoke(workflow, ["sweep", "--betas", "ten"])
    assert outcome.exit_code == 2
