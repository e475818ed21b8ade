"""CLI surface: exit codes, file outputs, determinism."""

from __future__ import annotations

from pathlib import Path

import pytest

from spatialdse.cli import main
from spatialdse.workloads import alg_tc_example, gemm_nest

REPO = Path(__file__).resolve().parents[1]
SAMPLES = REPO / "sample_inputs"


@pytest.fixture
def tc_nest_file(tmp_path):
    f = tmp_path / "tc.nest"
    f.write_text(alg_tc_example(16))
    return f


def test_check_loop_level_ok(tc_nest_file, capsys):
    assert main(["check", str(tc_nest_file), "--target", "loop-level"]) == 0
    assert "conformable: TC" in capsys.readouterr().out


def test_check_operation_level_rejects_tc(tc_nest_file, capsys):
    assert main(["check", str(tc_nest_file), "--target", "operation-level"]) == 1
    assert "TC unsupported" in capsys.readouterr().out


def test_check_missing_file_is_io_error(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["check", str(tmp_path / "nope.nest")])
    assert exc.value.code == 3


def test_check_usage_error_exit_code():
    with pytest.raises(SystemExit) as exc:
        main(["check"])  # missing positional
    assert exc.value.code == 2


def test_lower_and_search_and_eval_round_trip(tmp_path):
    nest = tmp_path / "g.nest"
    nest.write_text(gemm_nest(16, 16, 16))
    prob = tmp_path / "g.prob"
    assert main(["lower", str(nest), "-o", str(prob)]) == 0
    out = tmp_path / "results"
    args = [
        "search",
        "--prob", str(prob),
        "--arch", str(SAMPLES / "edge.arch"),
        "--strategy", "random",
        "--samples", "40",
        "--seed", "3",
        "--out-dir", str(out),
    ]
    assert main(args) == 0
    assert (out / "best.map").exists()
    assert (out / "search.csv").exists()
    assert (
        main(
            [
                "eval",
                "--prob", str(prob),
                "--arch", str(SAMPLES / "edge.arch"),
                "--map", str(out / "best.map"),
            ]
        )
        == 0
    )


def test_search_deterministic_across_workers(tmp_path):
    nest = tmp_path / "g.nest"
    nest.write_text(gemm_nest(16, 16, 16))
    prob = tmp_path / "g.prob"
    main(["lower", str(nest), "-o", str(prob)])
    outputs = []
    for workers, out_name in (("1", "w1"), ("2", "w2")):
        out = tmp_path / out_name
        main(
            [
                "search",
                "--prob", str(prob),
                "--arch", str(SAMPLES / "edge.arch"),
                "--strategy", "random",
                "--samples", "30",
                "--seed", "11",
                "--workers", workers,
                "--out-dir", str(out),
            ]
        )
        outputs.append(
            ((out / "best.map").read_bytes(), (out / "search.csv").read_bytes())
        )
    assert outputs[0] == outputs[1]


def test_search_empty_space_exit_code(tmp_path):
    prob = tmp_path / "g.prob"
    nest = tmp_path / "g.nest"
    nest.write_text(gemm_nest(16, 16, 16))
    main(["lower", str(nest), "-o", str(prob)])
    cons = tmp_path / "impossible.cons"
    cons.write_text("constraints\n  min_utilization 1.0\n  forbidden_parallel m n k\n")
    code = main(
        [
            "search",
            "--prob", str(prob),
            "--arch", str(SAMPLES / "edge.arch"),
            "--cons", str(cons),
            "--strategy", "random",
            "--samples", "5",
            "--out-dir", str(tmp_path / "r"),
        ]
    )
    assert code == 1


def test_oracle_diff_clean_and_capped(tmp_path):
    nest = tmp_path / "g.nest"
    nest.write_text(gemm_nest(4, 4, 4))
    prob = tmp_path / "g.prob"
    main(["lower", str(nest), "-o", str(prob)])
    out = tmp_path / "results"
    main(
        [
            "search",
            "--prob", str(prob),
            "--arch", str(SAMPLES / "edge.arch"),
            "--strategy", "random",
            "--samples", "20",
            "--seed", "5",
            "--out-dir", str(out),
        ]
    )
    assert (
        main(
            [
                "oracle-diff",
                "--prob", str(prob),
                "--arch", str(SAMPLES / "edge.arch"),
                "--map", str(out / "best.map"),
            ]
        )
        == 0
    )
    assert (
        main(
            [
                "oracle-diff",
                "--prob", str(prob),
                "--arch", str(SAMPLES / "edge.arch"),
                "--map", str(out / "best.map"),
                "--cap", "2",
            ]
        )
        == 1
    )


def test_ttgt_lowering_flag(tmp_path):
    nest = tmp_path / "tc.nest"
    nest.write_text(alg_tc_example(16))
    prob = tmp_path / "tc.prob"
    assert main(["lower", str(nest), "-o", str(prob), "--ttgt"]) == 0
    text = prob.read_text()
    assert "operation GEMM" in text
    assert "M 4096" in text and "N 4096" in text and "K 16" in text
