import csv
import io
import json
from pathlib import Path

import numpy as np
import pytest

from seqrd.cli import build_parser, run

FIXTURES = Path(__file__).parent / "fixtures"


def call(capsys, *argv):
    code = run([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_steady_prints_value(capsys):
    code, out, _ = call(capsys, "steady", "--alpha", 0.7, "--w", 1, "--rate", 2)
    assert code == 0
    header, value = out.split()
    assert header == "steady" and float(value) == pytest.approx(0.0644745, abs=1e-7)


def test_packets_table(capsys):
    code, out, _ = call(capsys, "packets", "--rate", 1, "--beta", 0.5, "--max-n", 3)
    assert code == 0
    r = rows(out)
    assert [row["n"] for row in r] == ["1", "2", "3"]
    np.testing.assert_allclose([float(x["factor"]) for x in r], [0.625, 0.5625, 0.5413040454773075], rtol=1e-15)
    assert [x["optimal"] for x in r] == ["false", "false", "true"]


def test_packets_sweep_defaults_to_101_points(capsys):
    code, out, _ = call(capsys, "packets", "--rate", 5.5, "--max-n", 3, "--objective", "single")
    r = rows(out)
    assert code == 0 and len(r) == 101 and list(r[0]) == ["beta", "n1", "n2", "n3", "best_n"]


def test_delayed_golden_fixture(capsys):
    code, out, _ = call(capsys, "delayed", "--alpha", 0.7, "--w", 1, "--rate", 2, "--beta", 0.5, "--T", 15, "--exact")
    assert code == 0
    golden = rows((FIXTURES / "delayed_T15.csv").read_text())
    got = rows(out)
    assert [g["t"] for g in golden] == [x["t"] for x in got]
    np.testing.assert_allclose([float(x["D"]) for x in got], [float(g["D"]) for g in golden], rtol=1e-12, atol=0)


@pytest.mark.parametrize(
    "argv,columns",
    [
        (["region", "--alpha", "0.7", "--w", "1", "--rate", "2", "--T", "5"], ["t", "S", "D"]),
        (["region", "--alpha", "0.5,0.9", "--w", "1,2", "--rate", "1,0", "--T", "2"], ["t", "S", "D"]),
        (["random-rate", "--alpha", "0.7", "--w", "1", "--T", "4", "--support", "0:0.5,2:0.5"], ["t", "D"]),
        (["erasure", "--alpha", "0.7", "--w", "1", "--rate", "2", "--beta", "0.5", "--T", "4"], ["t", "D"]),
        (["kaspi", "--S", "1", "--Z", "0.5", "--d-minus", "0.6", "--d-plus", "0.3"], ["case", "delta", "rate"]),
        (["invert", "--S", "1", "--Z", "0.5", "--rate", "1", "--beta", "0.3"],
         ["d_minus", "d_plus", "weighted", "case", "achieved_rate", "method"]),
        (["baselines", "--alpha", "0.7", "--w", "1", "--rate", "2", "--beta", "0.5", "--T", "4"],
         ["t", "instantaneous", "no_prediction", "worst_case", "best_case"]),
        (["delayed", "--alpha", "0.7", "--w", "1", "--rate", "2", "--beta", "0.5", "--T", "4", "--mc",
          "--samples", "1000"], ["t", "D", "stderr"]),
    ],
)
def test_commands_emit_csv(capsys, argv, columns):
    code, out, err = call(capsys, *argv)
    assert code == 0, err
    assert out.splitlines()[0].split(",") == columns


def test_kaspi_values(capsys):
    _, out, _ = call(capsys, "kaspi", "--S", 1, "--Z", 0.5, "--d-minus", 0.6, "--d-plus", 0.3)
    r = rows(out)[0]
    assert r["case"] == "Coupled" and float(r["rate"]) == pytest.approx(0.43143, abs=1e-4)


def test_json_output(capsys, tmp_path):
    dest = tmp_path / "r.json"
    code, out, _ = call(capsys, "region", "--alpha", 0.7, "--w", 1, "--rate", 2, "--T", 50,
                        "--format", "json", "--output", dest)
    assert code == 0 and out == ""
    data = json.loads(dest.read_text())
    assert data["t"][0] == 1 and data["D"][-1] == pytest.approx(data["steady"], abs=1e-10)


def test_simulate_round_trip(capsys, tmp_path):
    dest = tmp_path / "sim.csv"
    argv = ["simulate", "--alpha", 0.7, "--w", 1, "--rate", 2, "--beta", 0.5, "--T", 8,
            "--samples", 4000, "--seed", 5, "--output", dest]
    code, _, err = call(capsys, *argv)
    assert code == 0 and "sigma" in err
    first = dest.read_text()
    assert call(capsys, *argv)[0] == 0
    assert dest.read_text() == first  # deterministic given seed
    code, out, _ = call(capsys, "compare", dest)
    assert code == 0 and rows(out)[0]["passed"] == "true"
    # lossless re-ingest: a shifted copy must be detected, an identical one must not
    code, out, _ = call(capsys, "compare", dest, dest)
    assert code == 0 and all(float(r["max_abs_diff"]) == 0.0 for r in rows(out))
    shifted = tmp_path / "shift.csv"
    lines = first.splitlines()
    parts = lines[3].split(",")
    parts[2] = repr(float(parts[2]) + 1e-15)
    lines[3] = ",".join(parts)
    shifted.write_text("\n".join(lines) + "\n")
    assert call(capsys, "compare", dest, shifted)[0] == 1


def test_every_emitted_csv_round_trips(capsys):
    _, out, _ = call(capsys, "baselines", "--alpha", 0.7, "--w", 1, "--rate", 2, "--beta", 0.5, "--T", 10)
    for r in rows(out):
        for v in r.values():
            assert float(repr(float(v))) == float(v)
            assert f"{float(v):.17g}" == v or v == r["t"]


def test_config_file_and_override(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"alpha": 0.7, "w": 1, "rate": 1, "T": 3}))
    _, a, _ = call(capsys, "region", "--config", cfg)
    _, b, _ = call(capsys, "region", "--config", cfg, "--rate", 2)
    _, c, _ = call(capsys, "region", "--alpha", 0.7, "--w", 1, "--rate", 2, "--T", 3)
    assert a != b and b == c
    cfg.write_text(json.dumps({"alpha": 0.7, "bogus": 1}))
    code, _, err = call(capsys, "region", "--config", cfg)
    assert code == 2 and "bogus" in err


@pytest.mark.parametrize(
    "argv,flag",
    [
        (["steady", "--alpha", "1.5", "--w", "1", "--rate", "1"], "--alpha"),
        (["steady", "--alpha", "0.5", "--w", "-1", "--rate", "1"], "--w"),
        (["steady", "--alpha", "0.5", "--w", "1"], "--rate"),
        (["erasure", "--alpha", "0.5", "--w", "1", "--rate", "1", "--beta", "2", "--T", "3"], "--beta"),
        (["region", "--alpha", "0.5", "--w", "1", "--rate", "1", "--T", "0"], "--T"),
        (["delayed", "--alpha", "0.5", "--w", "1", "--rate", "1", "--beta", "0.5", "--T", "30"], "--T"),
        (["invert", "--S", "1", "--Z", "2", "--rate", "1", "--beta", "0.5"], "--Z"),
        (["random-rate", "--alpha", "0.5", "--w", "1", "--T", "3", "--support", "1:0.3"], "--support"),
        (["region", "--alpha", "0.5,0.4", "--w", "1", "--rate", "1", "--T", "3"], "--alpha"),
    ],
)
def test_validation_errors_name_the_flag(capsys, argv, flag):
    code, out, err = call(capsys, *argv)
    assert code == 2 and flag in err and out == ""


def test_unknown_flag_is_an_error(capsys):
    code, _, err = call(capsys, "steady", "--alpha", 0.7, "--w", 1, "--rate", 2, "--bogus", 1)
    assert code == 2 and "unrecognized" in err


def test_solver_failure_exit_code(capsys, monkeypatch):
    from seqrd import kaspi
    from seqrd.errors import SolverError

    def boom(*a, **k):
        raise SolverError("forced")

    monkeypatch.setattr(kaspi, "invert_weighted", boom)
    code, _, err = call(capsys, "invert", "--S", 1, "--Z", 0.5, "--rate", 1, "--beta", 0.5)
    assert code == 3 and "forced" in err


def test_help_lists_flags(capsys):
    parser = build_parser()
    sub = parser._subparsers._group_actions[0].choices
    assert set(sub) >= {"region", "steady", "random-rate", "erasure", "packets", "kaspi", "invert",
                        "delayed", "baselines", "simulate", "compare"}
    helptext = sub["delayed"].format_help()
    for flag in ("--alpha", "--w", "--rate", "--beta", "--T", "--exact", "--mc", "--samples", "--seed",
                 "--literal-alpha", "--output", "--format", "--config"):
        assert flag in helptext
