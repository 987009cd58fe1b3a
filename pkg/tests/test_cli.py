import csv
import json
import math
import subprocess
import sys

import pytest

from stnchain.cli import COST_COLUMNS, KEYRATE_COLUMNS, fmt, main, parse_grid
from stnchain.rates import stn_total_noise
from stnchain.svgplot import plot_cost, plot_keyrate


def read(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def all_cells_finite(path):
    text = path.read_text()
    return "nan" not in text.lower() and "inf" not in text.lower().replace("infeasible", "")


def test_keyrate_default_grid(tmp_path):
    assert main(["keyrate", "--p", "1,2,3", "--out", str(tmp_path)]) == 0
    rows = read(tmp_path / "keyrate.csv")
    assert list(rows[0]) == KEYRATE_COLUMNS
    assert len(rows) == 75
    assert float(rows[0]["N"]) == 1e4 and float(rows[24]["N"]) == 1e10
    assert all_cells_finite(tmp_path / "keyrate.csv")
    small = rows[0]
    assert small["l_stn"] == "0" and small["rate_stn"] == "0" and small["reason"]


def test_keyrate_q_sweep_stn_dies_first(tmp_path):
    code = main(["keyrate", "--N", "1e6,1e8", "--grid", "0:0.12:49:lin", "--sweep", "Q", "--out", str(tmp_path)])
    assert code == 0
    rows = read(tmp_path / "keyrate.csv")
    for N in ("1000000", "100000000"):
        series = [r for r in rows if r["N"] == N]
        last_stn = max(float(r["Q"]) for r in series if int(r["l_stn"]) > 0)
        last_tn = max(float(r["Q"]) for r in series if int(r["l_tn"]) > 0)
        assert last_stn < last_tn


def test_px_sweep(tmp_path):
    assert main(["keyrate", "--N", "1e8", "--grid", "0.05:0.5:10:lin", "--sweep", "px", "--out", str(tmp_path)]) == 0
    rows = read(tmp_path / "keyrate.csv")
    assert [round(float(r["p_X"]), 2) for r in rows] == [0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5]


def test_keyrate_infeasible_everywhere(tmp_path):
    assert main(["keyrate", "--N", "100,1000", "--out", str(tmp_path)]) == 3
    assert len(read(tmp_path / "keyrate.csv")) == 2


@pytest.mark.parametrize(
    "argv",
    [
        ["keyrate", "--grid", "1e4:1e6:0:log"],
        ["keyrate", "--grid", "1e4:1e6:5"],
        ["keyrate", "--grid", "0:1e6:5:log"],
        ["keyrate", "--Q", "0.7"],
        ["keyrate", "--sweep", "Q"],
        ["simulate", "--N", "1e3,1e4"],
        ["sample-audit", "--N", "10", "--m", "6"],
    ],
)
def test_usage_errors(tmp_path, argv):
    assert main(argv + ["--out", str(tmp_path)]) == 2


def test_argparse_rejects_unknown_flag():
    with pytest.raises(SystemExit) as exc:
        main(["keyrate", "--bogus", "1"])
    assert exc.value.code == 2


def test_guard_exit_code(tmp_path):
    assert main(["simulate", "--N", "2e7", "--out", str(tmp_path)]) == 4


def test_config_precedence(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"N": "1e8", "Q": 0.03, "p": "1"}))
    out = tmp_path / "o"
    assert main(["keyrate", "--config", str(cfg), "--Q", "0.01", "--grid", "1e8:1e8:1:log", "--out", str(out)]) == 0
    (row,) = read(out / "keyrate.csv")
    assert row["Q"] == "0.01" and row["p"] == "1" and row["N"] == "100000000"
    assert float(row["eps"]) == 1e-30 and float(row["p_X"]) == 0.2


def test_config_unknown_key(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"colour": "red"}))
    assert main(["keyrate", "--config", str(cfg), "--out", str(tmp_path)]) == 2


def test_cost_csv_and_crossover(tmp_path):
    code = main(["cost", "--N", "1e10", "--p", "1,2,3", "--grid", "0.001:0.05:50:lin", "--sweep", "Q", "--out", str(tmp_path)])
    assert code == 0
    rows = read(tmp_path / "cost.csv")
    assert list(rows[0]) == COST_COLUMNS
    assert all_cells_finite(tmp_path / "cost.csv")
    for p in ("1", "2", "3"):
        series = [r for r in rows if r["p"] == p]
        marks = [r for r in series if r["crossover"] == "true"]
        assert len(marks) == 1
        first = series[0]
        assert float(first["cost_stn"]) < float(first["cost_tn"])
    p2 = [r for r in rows if r["p"] == "2" and r["crossover"] == "true"][0]
    assert float(p2["Q"]) == pytest.approx(0.028, abs=1e-12)
    # infeasible STN cells are empty, never nan
    assert any(r["cost_stn"] == "" and r["reason"] for r in rows)


def test_cost_single_link(tmp_path):
    assert main(["cost", "--N", "1e8", "--p", "0", "--grid", "1e8:1e8:1:log", "--out", str(tmp_path)]) == 0
    (row,) = read(tmp_path / "cost.csv")
    assert float(row["cost_tn"]) == pytest.approx(2e8 / int(row["l_tn"]), rel=1e-15)


def test_cost_flattens_in_n(tmp_path):
    assert main(["cost", "--out", str(tmp_path)]) == 0
    rows = [r for r in read(tmp_path / "cost.csv") if r["cost_tn"] and r["cost_stn"]]
    a, b = rows[-2], rows[-1]
    assert abs(float(a["cost_tn"]) - float(b["cost_tn"])) / float(b["cost_tn"]) < 1e-2
    assert abs(float(a["cost_stn"]) - float(b["cost_stn"])) / float(b["cost_stn"]) < 1e-2


def test_simulate_outputs(tmp_path):
    argv = ["simulate", "--N", "3e4", "--Q", "0", "--p", "2", "--trials", "3", "--eps", "1e-3",
            "--transcripts", "--out", str(tmp_path)]
    assert main(argv) == 0
    summary = {r["metric"]: r["value"] for r in read(tmp_path / "simulate.csv")}
    assert summary["trials"] == "3" and summary["keys_match_all"] == "true"
    trials = read(tmp_path / "simulate_trials.csv")
    assert [r["w_obs"] for r in trials] == ["0", "0", "0"]
    for r in trials:
        assert r["l_realized"] == r["l_closed_form_observed"]
    files = sorted(p.name for p in (tmp_path / "transcripts").iterdir())
    assert files == ["trial_000000.json", "trial_000001.json", "trial_000002.json"]
    d = json.loads((tmp_path / "transcripts" / files[0]).read_text())
    assert d["z_parities"][0]["length"] > 0


def test_simulate_threads_byte_identical(tmp_path):
    base = ["simulate", "--N", "2e4", "--trials", "4", "--seed", "12", "--eps-abort", "0.3"]
    assert main(base + ["--out", str(tmp_path / "a")]) == 0
    assert main(base + ["--threads", "4", "--out", str(tmp_path / "b")]) == 0
    for name in ("simulate.csv", "simulate_trials.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_sample_audit_exhaustive(tmp_path):
    assert main(["sample-audit", "--N", "8,11", "--delta", "0.1,0.25,1", "--out", str(tmp_path)]) == 0
    rows = read(tmp_path / "sample_audit.csv")
    assert len(rows) == (4 + 5) * 3
    assert all(r["method"] == "exact" and r["violation"] == "false" for r in rows)
    assert all(r["failure"] == "0" for r in rows if r["delta"] == "1")
    row = [r for r in rows if r["N"] == "8" and r["m"] == "4" and r["delta"] == "0.25"][0]
    assert float(row["failure"]) == pytest.approx(17 / 35, abs=1e-15)


def test_sample_audit_routes_to_mc(tmp_path):
    argv = ["sample-audit", "--N", "1000", "--m", "500", "--delta", "0.1", "--trials", "5000", "--out", str(tmp_path)]
    assert main(argv) == 0
    (row,) = read(tmp_path / "sample_audit.csv")
    assert row["method"] == "mc" and row["violation"] == "false"
    assert float(row["failure"]) <= 0.0136


def test_noise_table(tmp_path, capsys):
    assert main(["noise", "--Q", "0.02", "--p", "0,1,2", "--out", str(tmp_path)]) == 0
    printed = capsys.readouterr().out
    assert " 0.057632\n" in printed
    rows = read(tmp_path / "noise.csv")
    assert float(rows[2]["w_total"]) == stn_total_noise(0.02, 2)


def test_plots_are_functions_of_csv(tmp_path):
    assert main(["keyrate", "--p", "1,2", "--plot", "--out", str(tmp_path)]) == 0
    assert main(["cost", "--p", "1,2", "--plot", "--out", str(tmp_path)]) == 0
    for kind, fn in (("keyrate", plot_keyrate), ("cost", plot_cost)):
        original = (tmp_path / f"{kind}.svg").read_bytes()
        assert original.startswith(b"<?xml")
        again = fn(tmp_path / f"{kind}.csv", tmp_path / f"{kind}_again.svg")
        assert again.read_bytes() == original


def test_fmt_rules():
    assert fmt(None) == "" and fmt(True) == "true" and fmt(3) == "3"
    assert fmt(0.1) == "0.10000000000000001"
    with pytest.raises(ValueError):
        fmt(math.nan)


def test_parse_grid():
    assert list(parse_grid("1:3:3:lin")) == [1.0, 2.0, 3.0]
    assert parse_grid("1e4:1e10:25:log")[-1] == pytest.approx(1e10)


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "stnchain", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and "stnchain" in out.stdout


def test_meta_sidecar_reports_budgets(tmp_path):
    assert main(["keyrate", "--N", "1e8", "--p", "1,3", "--out", str(tmp_path)]) == 0
    meta = json.loads((tmp_path / "keyrate.meta.json").read_text())
    assert meta["pa_epsilon"] == pytest.approx(9e-30 + 4e-15)
    assert meta["abort_budget_by_p"] == {"1": pytest.approx(4e-10), "3": pytest.approx(8e-10)}
    assert set(meta["failure_probability_by_p"]) == {"1", "3"}
    assert any("pa_epsilon" in note for note in meta["notes"])
