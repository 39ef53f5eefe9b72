import csv
import io

import numpy as np
import pytest

import oracle
from tsmt import cli, csvio
from tsmt import procedures as P
from tsmt.errors import DataError

TOY = "1,2,3,4,5\n0.1,-0.2,0.3,0.1,0\n5,5.1,4.9,5.2,5\n"


@pytest.fixture
def toy(tmp_path):
    path = tmp_path / "toy.csv"
    path.write_text(TOY)
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_run_matches_oracle(toy, tmp_path, capsys):
    out = tmp_path / "dec.csv"
    code = cli.main(["run", "--data", str(toy), "--method", "ts-bonf", "--alpha", "0.05", "--gamma", "0.5",
                     "--sigma", "estimated", "--out", str(out)])
    assert code == 0
    rows = read_csv(out)
    assert list(rows[0]) == ["index", "S", "T", "p", "selected", "rejected"]
    sel, rej = oracle.two_stage_bonferroni(np.loadtxt(toy, delimiter=",").tolist(), 0.05, 0.5, "estimated")
    assert [int(r["index"]) for r in rows if r["selected"] == "1"] == sel
    assert [int(r["index"]) for r in rows if r["rejected"] == "1"] == rej
    summary = capsys.readouterr().out
    assert f"selected={len(sel)}" in summary and f"rejections={len(rej)}" in summary and "sigma2_hat=" in summary


def test_round_trip_rescoring(toy, tmp_path):
    out = tmp_path / "dec.csv"
    assert cli.main(["run", "--data", str(toy), "--method", "ts-holm", "--sigma", "estimated", "--out", str(out)]) == 0
    with open(out, newline="") as fh:
        dec = csvio.read_decisions(fh)
    data = np.loadtxt(toy, delimiter=",")
    table = P.compute_stats(data)
    # 17 significant digits reproduce every double exactly
    assert np.array_equal(dec["S"], table.s) and np.array_equal(dec["T"], table.t) and np.array_equal(dec["p"], table.p)
    sel = np.flatnonzero(dec["selected"])
    p_sel = dec["p"][sel]
    rescored = P.classic_procedure(p_sel, 0.05, "holm")
    assert rescored.size == dec["rejected"].sum()


@pytest.mark.parametrize("method", ["ts-bonf", "ts-holm", "bonferroni", "holm", "hochberg", "bh", "simes", "hc", "ss-bonf"])
def test_run_every_method(method, tmp_path):
    rng = np.random.default_rng(0)
    data = rng.standard_normal((40, 10))
    data[:4] += 2.0
    path = tmp_path / "d.csv"
    np.savetxt(path, data, delimiter=",", fmt="%.17g")
    out = tmp_path / "o.csv"
    assert cli.main(["run", "--data", str(path), "--method", method, "--hc-reps", "300", "--out", str(out)]) == 0
    assert len(read_csv(out)) == 40


def test_run_to_stdout_keeps_summary_off_stdout(toy, capsys):
    assert cli.main(["run", "--data", str(toy)]) == 0
    captured = capsys.readouterr()
    assert captured.out.startswith("index,S,T,p,selected,rejected\n")
    assert "selected=" in captured.err


def test_skip_header(tmp_path):
    path = tmp_path / "h.csv"
    path.write_text("a,b,c,d,e\n" + TOY)
    assert cli.main(["run", "--data", str(path)]) == 1
    assert cli.main(["run", "--data", str(path), "--skip-header", "--out", str(tmp_path / "o.csv")]) == 0
    assert len(read_csv(tmp_path / "o.csv")) == 3


@pytest.mark.parametrize(
    "content, where",
    [("1,2,3\n4,x,6\n", "row 2, column 2"), ("1,2,3\n4,5\n", "row 2"), ("1,2,\n", "row 1, column 3"), ("", "empty")],
)
def test_malformed_csv(tmp_path, capsys, content, where):
    path = tmp_path / "bad.csv"
    path.write_text(content)
    assert cli.main(["run", "--data", str(path)]) == 1
    assert where in capsys.readouterr().err


def test_missing_file(tmp_path):
    assert cli.main(["run", "--data", str(tmp_path / "nope.csv")]) == 1


def test_header_without_flag_is_data_error(tmp_path):
    path = tmp_path / "h.csv"
    path.write_text("a,b\n1,2\n")
    assert cli.main(["run", "--data", str(path)]) == 1


@pytest.mark.parametrize(
    "argv",
    [
        ["run", "--bogus"],
        ["frobnicate"],
        [],
        ["run", "--data", "x.csv", "--method", "sidak"],
        ["run", "--data", "x.csv", "--sigma", "maybe"],
    ],
)
def test_usage_errors(argv, capsys):
    assert cli.main(argv) == 2
    assert "usage" in capsys.readouterr().err


def test_configuration_errors(toy, capsys):
    assert cli.main(["run", "--data", str(toy), "--alpha", "1.5"]) == 2
    assert cli.main(["run", "--data", str(toy), "--gamma", "0"]) == 2
    assert cli.main(["run", "--data", str(toy), "--method", "ss-bonf", "--split-r", "0.2"]) == 2  # n1 = 1
    assert cli.main(["thresholds"]) == 2
    assert cli.main(["thresholds", "--d", "-1"]) == 2
    assert cli.main(["simulate"]) == 2
    assert cli.main(["simulate", "--m", "10", "--rho", "1.2"]) == 2


def test_thresholds_optimize(tmp_path):
    out = tmp_path / "t.csv"
    assert cli.main(["thresholds", "--d", "0.5", "--optimize", "--out", str(out)]) == 0
    rows = read_csv(out)
    two = next(r for r in rows if r["method"] == "two_stage")
    assert float(two["gamma"]) == pytest.approx(0.7, abs=0.05)
    assert two["gamma_optimized"] == "1"
    assert float(two["mu2_threshold"]) == pytest.approx(1.0, abs=1e-3)
    bonf = next(r for r in rows if r["method"] == "bonferroni_t")
    assert float(bonf["mu2_threshold"]) == pytest.approx(np.expm1(1.0), rel=1e-15)


def test_thresholds_multiple_d_and_split(tmp_path):
    out = tmp_path / "t.csv"
    assert cli.main(["thresholds", "--d", "0.2", "--d", "0.4", "--gamma", "0.6", "--split-r", "0.4",
                     "--out", str(out)]) == 0
    rows = read_csv(out)
    assert [r["method"] for r in rows] == ["two_stage", "bonferroni_t", "bonferroni_z", "split_sample"] * 2
    assert {r["d"] for r in rows} == {"0.20000000000000001", "0.40000000000000002"}


def test_plot_data_fig4_1(tmp_path):
    res, plot = tmp_path / "t.csv", tmp_path / "p.csv"
    assert cli.main(["thresholds", "--preset", "fig4_1", "--out", str(res)]) == 0
    assert cli.main(["plot-data", str(res), "--out", str(plot)]) == 0
    rows = read_csv(plot)
    assert list(rows[0]) == ["figure", "panel", "x", "series", "y", "se"]
    assert {r["panel"] for r in rows} == {"gamma_star", "mu2_threshold"}
    assert sum(r["panel"] == "gamma_star" for r in rows) == 20
    assert {r["series"] for r in rows if r["panel"] == "mu2_threshold"} == {"TS", "Bonf. (t)", "Bonf. (z)"}


def test_plot_data_empty_and_unknown(tmp_path, capsys):
    empty, bad = tmp_path / "e.csv", tmp_path / "b.csv"
    empty.write_text("")
    bad.write_text("foo,bar\n1,2\n")
    assert cli.main(["plot-data", str(empty)]) == 0
    assert capsys.readouterr().out == "figure,panel,x,series,y,se\n"
    assert cli.main(["plot-data", str(bad)]) == 1
    assert cli.main(["plot-data", str(tmp_path / "missing.csv")]) == 1


def test_plot_rows_header_only_results():
    text = ",".join(csvio.RESULT_COLUMNS) + "\n"
    assert csvio.plot_rows(io.StringIO(text)) == []


@pytest.mark.slow
def test_simulate_fig8_1_reproducible_and_plottable(tmp_path):
    a, b, plot = tmp_path / "a.csv", tmp_path / "b.csv", tmp_path / "p.csv"
    for path in (a, b):
        assert cli.main(["simulate", "--preset", "fig8_1", "--reps", "50", "--seed", "7", "--out", str(path)]) == 0
    assert a.read_bytes() == b.read_bytes()
    rows = read_csv(a)
    assert list(rows[0]) == list(csvio.RESULT_COLUMNS)
    assert {r["replications"] for r in rows} == {"50"}
    assert cli.main(["plot-data", str(a), "--out", str(plot)]) == 0
    points = read_csv(plot)
    assert {p["series"] for p in points} == {"TS Bonf.", "Bonf.", "Simes", "SS Bonf.", "HC"}
    assert {p["panel"] for p in points} == {"null/type1_global", "power/global_power"}
    keys = [(p["figure"], p["panel"], p["series"], float(p["x"])) for p in points]
    assert keys == sorted(keys)


def test_simulate_fig4_1_writes_thresholds(tmp_path):
    out = tmp_path / "t.csv"
    assert cli.main(["simulate", "--preset", "fig4_1", "--out", str(out)]) == 0
    assert list(read_csv(out)[0]) == list(csvio.THRESHOLD_COLUMNS)


def test_read_dataset_errors():
    with pytest.raises(DataError, match="row 1, column 1"):
        csvio.read_dataset(io.StringIO("inf,1\n"))
    with pytest.raises(DataError, match="at least 2"):
        csvio.read_dataset(io.StringIO("1\n2\n"))
    assert csvio.read_dataset(io.StringIO("1,2\n\n3,4\n")).shape == (2, 2)


def test_fmt():
    assert csvio.fmt(0.1) == "0.10000000000000001"
    assert float(csvio.fmt(1 / 3)) == 1 / 3
    assert csvio.fmt(None) == "" and csvio.fmt(True) == "1" and csvio.fmt(np.int64(4)) == "4"
    assert csvio.fmt(float("inf")) == "inf"
