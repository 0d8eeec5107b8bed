import csv
import io
import subprocess
import sys

import pytest

from tenvec.bench import COST_CSV_COLUMNS, CSV_COLUMNS
from tenvec.cli import build_parser, main
from tenvec.costmodel import cost_report


def rows_of(text: str) -> list[list[str]]:
    return list(csv.reader(io.StringIO(text)))


def test_tvc_to_stdout(capsys):
    assert main(["tvc", "--dims", "4,5,6", "--mode", "1", "--iters", "1"]) == 0
    rows = rows_of(capsys.readouterr().out)
    assert rows[0] == CSV_COLUMNS
    row = dict(zip(CSV_COLUMNS, rows[1]))
    assert row["subcommand"] == "tvc"
    assert int(row["touched_meas"]) == 120 + 5 + 24
    assert int(row["touched_meas"]) == int(row["touched_pred"])


def test_tvc_to_file(tmp_path, capsys):
    out = tmp_path / "r.csv"
    assert main(["tvc", "--dims", "4,4", "--mode", "0", "--iters", "1", "--csv", str(out)]) == 0
    assert capsys.readouterr().out == ""
    rows = rows_of(out.read_text(encoding="utf-8"))
    assert rows[0] == CSV_COLUMNS and len(rows) == 2


def test_dtvc_flags(capsys):
    rc = main(
        [
            "dtvc", "--dims", "8,6,4", "--mode", "0", "--split", "0",
            "--workers", "2", "--iters", "1", "--defer",
        ]
    )
    assert rc == 0
    row = dict(zip(CSV_COLUMNS, rows_of(capsys.readouterr().out)[1]))
    assert row["p_req"] == "2" and row["p_eff"] == "2"
    assert row["k"] == "0" and row["s"] == "0"


def test_hopm_flags(capsys):
    rc = main(
        [
            "hopm", "--dims", "4,4,4", "--split", "1", "--workers", "2",
            "--sweeps", "2", "--iters", "1", "--classical-hopm",
        ]
    )
    assert rc == 0
    row = dict(zip(CSV_COLUMNS, rows_of(capsys.readouterr().out)[1]))
    assert row["subcommand"] == "hopm"
    assert row["k"] == "NA" and row["s"] == "1"


def test_triad_row(capsys):
    assert main(["triad", "--dims", "65536", "--iters", "1"]) == 0
    row = dict(zip(CSV_COLUMNS, rows_of(capsys.readouterr().out)[1]))
    assert row["d"] == "1"
    assert int(row["touched_meas"]) == 3 * 65536
    assert row["k"] == "NA" and row["s"] == "NA"


def test_precision_flag(capsys):
    assert main(["tvc", "--dims", "4,4", "--mode", "0", "--iters", "1", "--precision", "bf16f32"]) == 0
    row = dict(zip(CSV_COLUMNS, rows_of(capsys.readouterr().out)[1]))
    assert row["precision"] == "bf16f32"


def test_cost_matches_library(capsys):
    assert main(["cost", "--dims", "8^4", "--split", "1", "--workers", "2"]) == 0
    rows = rows_of(capsys.readouterr().out)
    assert rows[0] == COST_CSV_COLUMNS
    row = dict(zip(COST_CSV_COLUMNS, rows[1]))
    rep = cost_report(4, 8, 2, 1)
    assert int(row["m_seq"]) == rep.m_seq
    assert float(row["M_par"]) == float(rep.M_par)
    assert float(row["eta_inv"]) == float(rep.eta_inv)
    assert float(row["H_inv"]) == float(rep.H_inv)
    assert float(row["ring_overhead"]) == float(rep.ring_overhead)


def test_cost_rejects_non_hypersquare(capsys):
    assert main(["cost", "--dims", "4,5"]) == 2
    err = capsys.readouterr().err
    assert "configuration error" in err and "hypersquare" in err


def test_configuration_errors_exit_2(capsys):
    bad = [
        ["tvc", "--dims", "4,4", "--mode", "5", "--iters", "1"],
        ["dtvc", "--dims", "4,8", "--mode", "0", "--split", "0", "--workers", "9"],
        ["tvc", "--dims", "4,4", "--mode", "0", "--seconds", "1", "--iters", "2"],
        ["tvc", "--dims", "nope:d3", "--mode", "0"],
        ["cost", "--dims", "4^3", "--split", "7"],
    ]
    for argv in bad:
        assert main(argv) == 2, argv
        assert "tenvec: configuration error:" in capsys.readouterr().err


def test_unwritable_csv_exits_3(tmp_path, capsys):
    dest = tmp_path / "missing" / "out.csv"
    rc = main(["tvc", "--dims", "4,4", "--mode", "0", "--iters", "1", "--csv", str(dest)])
    assert rc == 3
    assert "tenvec: runtime error:" in capsys.readouterr().err


def test_argparse_rejects_unknown_choice():
    with pytest.raises(SystemExit) as exc:
        build_parser().parse_args(["tvc", "--dims", "4,4", "--mode", "0", "--precision", "f8"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit):
        build_parser().parse_args(["melt", "--dims", "4,4"])


def test_deterministic_runs_byte_identical(tmp_path):
    args = [
        "hopm", "--dims", "4,4,4", "--split", "0", "--workers", "2",
        "--deterministic", "--fill", "ramp",
    ]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(args + ["--csv", str(a)]) == 0
    assert main(args + ["--csv", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_module_entry_point(tmp_path):
    out = tmp_path / "cost.csv"
    proc = subprocess.run(
        [sys.executable, "-m", "tenvec.cli", "cost", "--dims", "8^3", "--csv", str(out)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert out.read_text(encoding="utf-8").splitlines()[0] == ",".join(COST_CSV_COLUMNS)
