"""Tests for the command-line entry point."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from backend.src.cli import EXIT_INPUT, EXIT_SOLVER, build_parser, main
from backend.src.config import INSTANCES_DIR


TWO_HOUR = str(INSTANCES_DIR / "two_hour.json")
TWO_GEN = str(INSTANCES_DIR / "two_gen_storage.json")


def _scenario(tmp_path: Path, methods: list[dict], hours: int = 24) -> str:
    path = tmp_path / "scenario.json"
    path.write_text(
        json.dumps(
            {
                "name": "cli",
                "instance": {"synthetic": {"profile": "iid", "hours": hours, "seed": 2}},
                "methods": methods,
            }
        )
    )
    return str(path)


def test_solve(capsys: pytest.CaptureFixture[str]) -> None:
    assert main(["solve", TWO_HOUR]) == 0
    out = capsys.readouterr().out
    assert "objective      23" in out
    assert "kkt            ok" in out


def test_solve_writes_hourly_table(tmp_path: Path) -> None:
    assert main(["solve", TWO_GEN, "--out", str(tmp_path), "--format", "csv"]) == 0
    files = list(tmp_path.glob("solve_hourly_*.csv"))
    assert len(files) == 1
    assert files[0].read_text().splitlines()[0] == "hour,demand,r,s,lambda,omega"


def test_missing_instance_is_input_error(capsys: pytest.CaptureFixture[str]) -> None:
    assert main(["solve"]) == EXIT_INPUT
    assert "input error" in capsys.readouterr().err


def test_aggregate_lossless(capsys: pytest.CaptureFixture[str]) -> None:
    argv = ["aggregate", "--synthetic", "alternating-days", "--hours", "96", "--solve"]
    assert main(argv) == 0
    out = capsys.readouterr().out
    assert "lossless       True" in out
    assert "states         48 (from 96 hours)" in out


def test_aggregate_needs_k() -> None:
    assert main(["aggregate", TWO_GEN, "--method", "system-states"]) == EXIT_INPUT


def test_aggregate_curve(capsys: pytest.CaptureFixture[str]) -> None:
    assert main(["aggregate", TWO_GEN, "--curve", "--ks", "1", "4"]) == 0
    assert "first lossless k: 4" in capsys.readouterr().out


def test_aggregate_save(tmp_path: Path) -> None:
    target = tmp_path / "agg.json"
    argv = ["aggregate", TWO_GEN, "--method", "system-states", "--k", "2", "--save", str(target)]
    assert main(argv) == 0
    assert json.loads(target.read_text())["P"] == [[0.0, 1.0], [1.0, 0.0]]


def test_valuation(capsys: pytest.CaptureFixture[str]) -> None:
    assert main(["valuation", TWO_GEN]) == 0
    out = capsys.readouterr().out
    assert "Storage Room" in out
    assert "room_rent" in out


def test_extreme_days(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    argv = [
        "extreme-days",
        "--synthetic",
        "seasonal",
        "--hours",
        "720",
        "--regions",
        "2",
        "--radius",
        "0.3",
        "--out",
        str(tmp_path),
    ]
    assert main(argv) == 0
    assert "vertices       16" in capsys.readouterr().out
    assert list(tmp_path.glob("extreme_days_*.csv"))


def test_compare(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
    scenario = _scenario(tmp_path, [{"kind": "full"}, {"kind": "identity"}])
    out_dir = tmp_path / "reports"
    assert main(["compare", scenario, "--out", str(out_dir), "--format", "json"]) == 0
    assert "Storage Room" in capsys.readouterr().out
    assert list(out_dir.glob("compare_cli_*.json"))


def test_compare_with_failed_row_is_solver_error(tmp_path: Path) -> None:
    scenario = _scenario(tmp_path, [{"kind": "full"}, {"kind": "rep-days", "k": 5}], hours=48)
    assert main(["compare", scenario]) == EXIT_SOLVER


def test_admm_single_partition(capsys: pytest.CaptureFixture[str]) -> None:
    assert main(["admm", TWO_GEN, "--partition", "single", "--reference"]) == 0
    out = capsys.readouterr().out
    assert "objective      24" in out
    assert "converged: True" in out


def test_admm_iteration_cap(capsys: pytest.CaptureFixture[str]) -> None:
    argv = ["admm", TWO_GEN, "--partition", "hour", "--max-iters", "2", "--eps-primal", "1e-12"]
    assert main(argv) == EXIT_SOLVER
    assert "did not converge" in capsys.readouterr().err


def test_admm_blocks_and_eps_aliases(capsys: pytest.CaptureFixture[str]) -> None:
    args = build_parser().parse_args(["admm", TWO_GEN, "--blocks", "day", "--eps", "1e-5"])
    assert args.partition == "day"
    assert args.eps == 1e-5
    assert main(["admm", TWO_GEN, "--blocks", "single"]) == 0
    capsys.readouterr()
    argv = ["admm", TWO_GEN, "--blocks", "hour", "--max-iters", "2", "--eps", "1e-12"]
    assert main(argv) == EXIT_SOLVER
    assert "did not converge" in capsys.readouterr().err
