import csv
import json
from pathlib import Path

import pytest

from lobeq.cli import SHAPE_HEADER, fmt, main
from lobeq.distributions import NormalVolume, ParetoSymmetric
from lobeq.equilibrium import EquilibriumBook, MarketParams
from lobeq.ticked_book import DiscreteBook, TickGrid

DATA = Path(__file__).parent / "data"
BASE = ["--k", "3", "--x0", "0.005", "--r", repr(2 / 3), "--tick", "0.01"]


def run_cli(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_shape_csv_base_config(capsys):
    code, out, _ = run_cli(["shape", *BASE, "--d", "0.0075", "--levels", "4"], capsys)
    assert code == 0
    rows = list(csv.DictReader(out.splitlines()))
    assert list(rows[0]) == SHAPE_HEADER
    first = rows[0]
    assert (first["side"], first["index"]) == ("ask", "1")
    assert round(float(first["cumulative_volume"]), 2) == 1.04
    book = DiscreteBook(TickGrid(0.01, 0.0075), EquilibriumBook.solve(
        MarketParams(2 / 3, ParetoSymmetric(3.0, 0.005), NormalVolume(1.0))))
    for row, lv in zip(rows, book.levels(4)):
        for h in SHAPE_HEADER[2:]:
            assert row[h] == fmt(getattr(lv, h))


def test_shape_json_is_exact(capsys):
    code, out, _ = run_cli(["shape", *BASE, "--d", "0.0075", "--levels", "2", "--format", "json"], capsys)
    data = json.loads(out)
    book = DiscreteBook(TickGrid(0.01, 0.0075), EquilibriumBook.solve(
        MarketParams(2 / 3, ParetoSymmetric(3.0, 0.005))))
    assert data["spread"] == book.spread
    assert data["levels"][0]["cumulative_volume"] == book.cumulative_depth(1)
    assert data["levels"][0]["queue_value"] == book.queue_value(1)


def test_bad_tick_names_parameter(capsys):
    code, _, err = run_cli(["shape", "--k", "3", "--x0", "0.005", "--r", "0.5", "--tick", "-0.01"], capsys)
    assert code != 0
    assert "--tick" in err


@pytest.mark.parametrize("flag,value", [("--k", "1.5"), ("--x0", "0"), ("--r", "1.2"), ("--sigma", "-1")])
def test_bad_model_parameters(flag, value, capsys):
    argv = ["shape", "--k", "3", "--x0", "0.005", "--r", "0.5", "--tick", "0.01", flag, value]
    code, _, err = run_cli(argv, capsys)
    assert code != 0 and flag in err


def test_unknown_flag_exits_nonzero():
    with pytest.raises(SystemExit) as exc:
        main(["shape", "--bogus"])
    assert exc.value.code != 0


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "m.toml"
    cfg.write_text(
        'jump = {family="pareto", k=3.0, x0=0.005}\n'
        'volume = {family="normal", sigma=1.0}\n'
        "[market]\nr = 0.6666666666666666\n[tick]\nalpha = 0.01\nd = 0.0075\n"
    )
    _, from_file, _ = run_cli(["shape", "--config", str(cfg), "--levels", "3"], capsys)
    _, from_flags, _ = run_cli(["shape", *BASE, "--d", "0.0075", "--levels", "3"], capsys)
    assert from_file == from_flags
    _, overridden, _ = run_cli(["shape", "--config", str(cfg), "--levels", "3", "--d", "0.002"], capsys)
    assert overridden != from_file


def test_config_rates(tmp_path, capsys):
    cfg = tmp_path / "m.toml"
    cfg.write_text("[jump]\nk = 3.0\nx0 = 0.005\n[market]\nlambda_i = 2.0\nlambda_u = 1.0\n[tick]\nalpha = 0.01\n")
    code, out, err = run_cli(["shape", "--config", str(cfg), "--levels", "1"], capsys)
    assert code == 0, err


def test_bad_toml(tmp_path, capsys):
    cfg = tmp_path / "m.toml"
    cfg.write_text("[jump\n")
    code, _, err = run_cli(["shape", "--config", str(cfg)], capsys)
    assert code != 0 and "m.toml" in err


def test_forecast_table(capsys):
    code, out, _ = run_cli(["spread-forecast", "--input", str(DATA / "tick_change.csv")], capsys)
    assert code == 0
    rep = json.loads(out)
    safran = rep["rows"][0]
    assert safran["name"] == "Safran" and round(safran["forecast"], 3) == 0.029
    assert rep["n_valid"] == 12


def test_forecast_alias_text_and_csv(tmp_path, capsys):
    mirror = tmp_path / "f.csv"
    code, out, _ = run_cli(["forecast", "--input", str(DATA / "tick_change.csv"), "--format", "text",
                            "--csv", str(mirror)], capsys)
    assert code == 0
    assert out.startswith("Safran: forecast 0.029")
    rows = list(csv.DictReader(mirror.read_text().splitlines()))
    assert len(rows) == 12 and rows[3]["name"] == "Kering"


def test_forecast_skips_bad_rows(tmp_path, capsys):
    f = tmp_path / "t.csv"
    f.write_text("name,spread_old,tick_old,tick_new\nA,0.02,0.01,0.02\nB,0.005,0.01,0.02\n")
    code, out, err = run_cli(["forecast", "--input", str(f)], capsys)
    assert code == 0
    assert "t.csv:3" in err
    assert json.loads(out)["n_skipped"] == 1


@pytest.mark.parametrize("body,where", [
    ("name,spread_old,tick_old,tick_new\nA,abc,0.01,0.02\n", ":2:"),
    ("name,spread_old,tick_old\nA,0.02,0.01\n", ":1:"),
    ("name,spread_old,tick_old,tick_new\nA,0.02,0.01,0.02\nB,0.02,0.01,0.02,0.03,9\n", ":3:"),
])
def test_malformed_csv_is_line_numbered(tmp_path, capsys, body, where):
    f = tmp_path / "t.csv"
    f.write_text(body)
    code, _, err = run_cli(["forecast", "--input", str(f)], capsys)
    assert code != 0
    assert where in err


def test_missing_input(capsys):
    code, _, err = run_cli(["forecast", "--input", "/nonexistent.csv"], capsys)
    assert code != 0 and "not found" in err


def test_calibrate(tmp_path, capsys):
    f = tmp_path / "obs.csv"
    f.write_text("date,spread,variance_per_trade\n2017-10-02,0.025,1.2e-4\n2017-10-03,0.024,1.1e-4\n")
    out = tmp_path / "res.json"
    code, _, err = run_cli(["calibrate", "--input", str(f), "--tick", "0.01", "--out", str(out)], capsys)
    assert code == 0, err
    res = json.loads(out.read_text())
    assert res["r"] == pytest.approx((res["k"] - 1) / res["k"])
    assert res["phi_bar"] == pytest.approx(0.0245)
    f.write_text("date,spread,variance_per_trade\n2017-10-02,-0.025,1.2e-4\n")
    code, _, err = run_cli(["calibrate", "--input", str(f), "--tick", "0.01"], capsys)
    assert code != 0 and "obs.csv:2" in err


def test_queue_value(capsys):
    argv = ["queue-value", "--k", "2.866", "--x0", "0.01238", "--r", repr(1.866 / 2.866), "--tick", "0.01",
            "--d-ticks", "0.25", "0.5", "0.75", "--limits", "1:4", "--format", "json"]
    code, out, _ = run_cli(argv, capsys)
    assert code == 0
    rows = json.loads(out)["rows"]
    assert len(rows) == 12
    eq = EquilibriumBook.solve(MarketParams(1.866 / 2.866, ParetoSymmetric(2.866, 0.01238)))
    book = DiscreteBook(TickGrid(0.01, 0.0025), eq)
    assert rows[1]["queue_value"] == book.queue_value(2)
    code, _, err = run_cli(["queue-value", *BASE, "--limits", "0:2"], capsys)
    assert code != 0 and "--limits" in err


def test_simulate(tmp_path, capsys):
    out = tmp_path / "stats.json"
    trace = tmp_path / "trace.csv"
    argv = ["simulate", *BASE, "--events", "2000", "--seed", "42", "--out", str(out), "--trace", str(trace)]
    code, _, err = run_cli(argv, capsys)
    assert code == 0, err
    data = json.loads(out.read_text())
    assert data["stats"]["n_events"] == 2000
    assert data["config"]["seed"] == 42
    assert trace.read_text().startswith("time,type,size,price_pre,price_post")
    first = out.read_bytes()
    main(argv)
    assert out.read_bytes() == first


def test_simulate_rejects_bad_config(capsys):
    code, _, err = run_cli(["simulate", *BASE, "--events", "0"], capsys)
    assert code != 0 and "--events" in err
    code, _, err = run_cli(["simulate", *BASE, "--events", "100", "--slices", "1"], capsys)
    assert code != 0 and "n_slices" in err


def test_outputs_byte_identical(tmp_path, capsys):
    for argv in (["shape", *BASE, "--d", "0.003"], ["forecast", "--input", str(DATA / "tick_change.csv")]):
        a, b = tmp_path / "a", tmp_path / "b"
        main([*argv, "--out", str(a)])
        main([*argv, "--out", str(b)])
        assert a.read_bytes() == b.read_bytes()
