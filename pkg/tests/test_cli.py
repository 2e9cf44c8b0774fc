import csv
import io
import json
import math
import subprocess
import sys

import pytest

from alphawidth import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def csv_rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_csv_header_is_fixed(capsys):
    code, out, _ = run(capsys, "verify", "bbl", "--alpha", "0", "--fn", "indicator:0,2", "--fn2", "indicator:0,4")
    assert code == 0
    assert out.splitlines()[0].split(",") == list(cli.COLUMNS)


def test_bbl_interval_example(capsys):
    code, out, _ = run(capsys, "verify", "bbl", "--alpha", "0", "--lambda", "0.5",
                       "--fn", "indicator:0,2", "--fn2", "indicator:0,4")
    (row,) = csv_rows(out)
    assert code == 0 and row["pass"] == "true"
    assert float(row["lhs"]) == pytest.approx(3.0, abs=16 / 4096)
    assert float(row["rhs"]) <= float(row["lhs"]) + float(row["tolerance"])


def test_urysohn_interval_example(capsys):
    code, out, _ = run(capsys, "--format", "json", "verify", "urysohn", "--beta", "inf", "--fn", "indicator:-1,1")
    (rec,) = json.loads(out)
    assert code == 0 and rec["pass"] is True
    assert rec["lhs"] == pytest.approx(2.0, abs=1e-2)
    assert rec["beta"] == "inf"


def test_meanwidth_example(capsys):
    code, out, _ = run(capsys, "--format", "json", "meanwidth", "--beta", "2.5", "--fn", "g_alpha", "--n", "1")
    (rec,) = json.loads(out)
    assert code == 0 and rec["pass"] is True
    assert abs(rec["lhs"] - rec["rhs"]) <= 1e-2 * abs(rec["lhs"])


def test_full_precision_cells(capsys):
    _, out, _ = run(capsys, "verify", "gaussian-poincare", "--psi", "cos")
    (row,) = csv_rows(out)
    for key in ("lhs", "rhs", "slack", "tolerance"):
        assert float(repr(float(row[key]))) == float(row[key])
        assert float(f"{float(row[key]):.17g}") == float(row[key])
    assert row["runtime_ms"] == ""


def test_timing_flag_fills_runtime(capsys):
    _, out, _ = run(capsys, "--timing", "verify", "gaussian-poincare", "--psi", "x")
    assert float(csv_rows(out)[0]["runtime_ms"]) >= 0


def test_violation_exits_one(capsys):
    # alpha below -1/n is outside the inequality's range: an error record, exit 1
    code, out, err = run(capsys, "verify", "bbl", "--alpha", "-2", "--fn", "indicator:0,2")
    assert code == 1
    assert "FAILED" in err and "bbl fn=indicator:0,2" in err
    assert csv_rows(out)[0]["pass"] == "false"


def test_bad_descriptor_is_a_failing_record(capsys):
    code, out, err = run(capsys, "meanwidth", "--fn", "triangle:1")
    assert code == 1 and "unknown function descriptor" in err


@pytest.mark.parametrize("argv", [
    ["frobnicate"],
    ["verify"],
    ["meanwidth", "--beta", "-1"],
    ["meanwidth", "--beta", "2", "--alpha", "0"],
    ["--format", "xml", "meanwidth"],
])
def test_usage_errors_exit_two(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(argv)
    assert exc.value.code == 2


def write(tmp_path, config, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(config))
    return str(path)


SWEEP = {"command": "bbl", "beta": [2.5, 5.0, "inf"], "lambda": [0.25, 0.5],
         "grid": {"lo": -6, "hi": 6, "m": 513}, "random": {"count": 2, "seed": 7}}


def test_sweep_cross_product(tmp_path, capsys):
    code, out, _ = run(capsys, "sweep", write(tmp_path, SWEEP))
    rows = csv_rows(out)
    assert code == 0 and len(rows) == 3 * 2 * 2
    assert [r["beta"] for r in rows[::4]] == ["2.5", "5", "inf"]
    assert all(r["pass"] == "true" for r in rows)


@pytest.mark.parametrize("workers", ["1", "3"])
def test_sweep_is_byte_deterministic(tmp_path, capsys, monkeypatch, workers):
    monkeypatch.setenv(cli.WORKERS_ENV, "1")
    _, reference, _ = run(capsys, "sweep", write(tmp_path, SWEEP))
    monkeypatch.setenv(cli.WORKERS_ENV, workers)
    _, again, _ = run(capsys, "sweep", write(tmp_path, SWEEP))
    assert again == reference


def test_sweep_output_file_and_json(tmp_path, capsys):
    target = tmp_path / "out.json"
    cfg = {"command": "gaussian-poincare", "psi": ["const", "x", "x2"], "format": "json", "output": str(target)}
    code, out, _ = run(capsys, "sweep", write(tmp_path, cfg))
    assert code == 0 and out == ""
    records = json.loads(target.read_text())
    assert [r["name"].split()[-1] for r in records] == ["psi=const", "psi=x", "psi=x2"]


def test_sweep_failure_identifies_record(tmp_path, capsys):
    cfg = {"command": "bbl", "alpha": [0.0, -2.0], "fn": "indicator:0,2", "fn2": "indicator:0,4"}
    code, out, err = run(capsys, "sweep", write(tmp_path, cfg))
    assert code == 1
    assert "alpha=-2.0" in err and "alpha=0.0" not in err
    assert [r["pass"] for r in csv_rows(out)] == ["true", "false"]


@pytest.mark.parametrize("config", [
    {"beta": [2.5]},
    {"command": "bogus"},
    {"command": "bbl", "beta": ["two"]},
    {"command": "bbl", "grid": {"lo": 0, "hi": 1, "m": 1}},
    {"command": "bbl", "unexpected": 1},
    {"command": "bbl", "random": {"count": -1}},
])
def test_sweep_schema_errors_exit_two(tmp_path, capsys, config):
    with pytest.raises(SystemExit) as exc:
        cli.main(["sweep", write(tmp_path, config)])
    assert exc.value.code == 2
    assert "bad sweep config" in capsys.readouterr().err


def test_sweep_missing_file_exits_two(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["sweep", str(tmp_path / "nope.json")])
    assert exc.value.code == 2


def test_random_draws_are_reproducible():
    tasks = cli.expand_sweep({"command": "urysohn", "beta": "inf", "random": {"count": 3, "seed": 11}})
    first = [cli.run_task(t) for t in tasks]
    second = [cli.run_task(t) for t in tasks]
    assert cli.render(first, "csv") == cli.render(second, "csv")
    assert len({r["lhs"] for r in first}) == 3


def test_sample_and_transform_json(capsys):
    _, out, _ = run(capsys, "--format", "json", "sample", "--fn", "indicator:-1,1", "--lo", "-2", "--hi", "2", "--m", "5")
    (rec,) = json.loads(out)
    assert rec["diagnostics"]["values"] == [0.0, 1.0, 1.0, 1.0, 0.0]
    _, out, _ = run(capsys, "--format", "json", "transform", "--fn", "indicator:-1,1", "--m", "401")
    (rec,) = json.loads(out)
    h = rec["diagnostics"]["values"]
    y = [p[0] for p in rec["diagnostics"]["points"]]
    assert all(v == pytest.approx(abs(t), abs=1e-12) for t, v in zip(y, h) if math.isfinite(v))


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "alphawidth.cli", "verify", "gaussian-poincare", "--psi", "x"],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert proc.stdout.startswith("name,n,alpha")
