import csv
import json
import re

import pytest

from ritzbc import cli
from ritzbc.config import ConfigError, parse_config
from ritzbc.records import COMPARE_FIELDS, RunRecord, format_records, parse_records, read_records, write_records

TINY = """[experiment]
problem = disk
preset = desk
strategies = naive
lambdas = 10
repetitions = 2
lattice_n = 10
iteration_factor = 0.005
error_samples = 2000
"""


def record(i, lam, l2, strategy="naive", failed=False, distance=None):
    return RunRecord(
        run_index=i, problem="disk", strategy=strategy, lam=lam, lam_p=None, distance=distance, seed=i,
        rel_l2_dirichlet=l2, rel_h1_dirichlet=None if l2 is None else 2 * l2, rel_l2_robin=None,
        rel_h1_robin=None, final_loss=-0.1, failed=failed, failed_at=7 if failed else None, iterations=100,
        wall_time=1.5, preset="desk", config_hash="abc",
    )


# ------------------------------------------------------------ config


def test_config_defaults_and_presets():
    exp = parse_config("[experiment]\nproblem = square\n")
    assert exp.lattice_n == 500 and exp.repetitions == 25 and exp.iteration_factor == 1.0
    assert len(exp.jobs()) == 225
    desk = parse_config("[experiment]\nproblem = square\npreset = desk\nrepetitions = 3\n")
    assert desk.lattice_n == 40 and desk.repetitions == 3 and desk.error_samples == 10**5
    assert desk.jobs()[0][1].total_iterations == 2500


def test_jobs_order_and_seeds():
    exp = parse_config("[experiment]\nproblem = disk\nstrategies = naive, exactbc\nlambdas = 1, 10\n"
                       "repetitions = 2\nbase_seed = 5\n")
    jobs = exp.jobs()
    assert [i for i, _ in jobs] == list(range(8))
    assert [c.seed for _, c in jobs] == list(range(5, 13))
    assert [(c.strategy, c.lam or c.distance) for _, c in jobs[::2]] == [
        ("naive", 1.0), ("naive", 10.0), ("exactbc", "disk_trig"), ("exactbc", "disk_pol")]


@pytest.mark.parametrize("text, field", [
    ("[experiment]\nproblem = sphere\n", "problem"),
    ("[experiment]\nlambdas = 1\n", "problem"),
    ("[experiment]\nproblem = disk\nlambdas = 1, -2\n", "lambdas"),
    ("[experiment]\nproblem = disk\nlambdas = one\n", "lambdas"),
    ("[experiment]\nproblem = disk\nstrategies = magic\n", "strategies"),
    ("[experiment]\nproblem = disk\ndistances = square_pol\n", "distances"),
    ("[experiment]\nproblem = disk\nrepetitions = 0\n", "repetitions"),
    ("[experiment]\nproblem = disk\npreset = huge\n", "preset"),
    ("[experiment]\nproblem = disk\ncolour = red\n", "colour"),
    ("[other]\nproblem = disk\n", "experiment"),
])
def test_config_errors_name_field(text, field):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert exc.value.field == field


def test_invalid_config_writes_nothing(tmp_path, capsys):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[experiment]\nproblem = sphere\n")
    out = tmp_path / "out"
    assert cli.main(["run", "--config", str(cfg), "--out", str(out)]) == 2
    assert not out.exists()
    assert "problem" in capsys.readouterr().err


def test_config_hash_ignores_output():
    a = parse_config(TINY, output="x")
    b = parse_config(TINY, output="y")
    c = parse_config(TINY.replace("lambdas = 10", "lambdas = 11"))
    assert a.config_hash == b.config_hash != c.config_hash


# ------------------------------------------------------------ records


def test_records_round_trip(tmp_path):
    recs = [record(0, 1.0, 0.1234567890123), record(1, 1.0, None, failed=True),
            record(2, None, 0.05, strategy="exactbc", distance="disk_pol")]
    path = tmp_path / "r.csv"
    write_records(path, recs)
    assert read_records(path) == recs
    text = path.read_text()
    assert text.startswith("# schema: ritzbc-records v1\n")
    assert "0.1234567890123" in text and ",true," in text


def test_records_reject_bad_input():
    good = format_records([record(0, 1.0, 0.1)])
    with pytest.raises(ValueError):
        parse_records(good.split("\n", 1)[1])
    with pytest.raises(ValueError):
        parse_records(good.replace("v1", "v9"))
    with pytest.raises(ValueError):
        parse_records(good.replace(",false,", ",maybe,"))


# ------------------------------------------------------------ summarize


def test_format_pm():
    assert cli.format_pm(0.03, 0.0141421356) == "(3.00 ± 1.41)·10⁻²"
    assert cli.format_pm(0.00063, 0.00048) == "(6.30 ± 4.80)·10⁻⁴"
    assert cli.format_pm(1.5, 0.25) == "(1.50 ± 0.25)·10⁰"


def test_summarize_statistics_and_best():
    recs = [record(0, 100.0, 0.02), record(1, 100.0, 0.04), record(2, 1.0, 0.5), record(3, 1.0, None, failed=True)]
    rows, best = cli.summarize(recs)
    assert [r["setting"] for r in rows] == [1.0, 100.0]
    assert rows[0]["n_failed"] == 1 and rows[0]["rel_l2_dirichlet"].mean == 0.5
    s = rows[1]["rel_l2_dirichlet"]
    assert s.mean == pytest.approx(0.03) and s.sample_std == pytest.approx(0.0141421356)
    text = cli.summary_text(rows, best)
    assert "(3.00 ± 1.41)·10⁻²" in text
    assert re.search(r"best disk/naive rel_l2_dirichlet: \(3\.00 ± 1\.41\)·10⁻² achieved for λ = 100", text)


def test_summarize_tie_goes_to_smaller_lambda():
    recs = [record(0, 50.0, 0.1), record(1, 5.0, 0.1), record(2, 500.0, 0.1)]
    _, best = cli.summarize(recs)
    assert [b["setting"] for b in best if b["metric"] == "rel_l2_dirichlet"] == [5.0]


def test_summarize_cli(tmp_path):
    path = tmp_path / "records.csv"
    write_records(path, [record(0, 100.0, 0.02), record(1, 100.0, 0.04)])
    assert cli.main(["summarize", str(path)]) == 0
    assert "(3.00 ± 1.41)·10⁻²" in (tmp_path / "summary.txt").read_text()
    rows = list(csv.DictReader((tmp_path / "summary.csv").open()))
    assert float(rows[0]["rel_l2_dirichlet_mean"]) == pytest.approx(0.03)


# ------------------------------------------------------------ plot


LAMS = (1.0, 5.0, 10.0, 50.0, 100.0, 500.0, 1000.0, 5000.0, 10000.0)


def _sweep_records():
    recs = []
    i = 0
    for strategy in ("naive", "pretrain"):
        for lam in LAMS:
            for k in range(2):
                recs.append(RunRecord(
                    run_index=i, problem="disk", strategy=strategy, lam=lam,
                    lam_p=1.0 if strategy == "pretrain" else None, distance=None, seed=i,
                    rel_l2_dirichlet=0.01 * (1 + k) * (1 + lam / 1e4), rel_h1_dirichlet=None, rel_l2_robin=None,
                    rel_h1_robin=None, final_loss=-0.2, failed=False, failed_at=None, iterations=10,
                    wall_time=0.1, preset="desk", config_hash="h"))
                i += 1
    return recs


def test_plot_errorbars(tmp_path):
    path = tmp_path / "records.csv"
    write_records(path, _sweep_records())
    svg = tmp_path / "fig.svg"
    assert cli.main(["plot", str(path), "--out", str(svg)]) == 0
    text = svg.read_text()
    assert text.startswith("<svg") and text.rstrip().endswith("</svg>")
    assert text.count('<g class="series"') == 2
    assert text.count('<g class="errorbar">') == 18
    rows = list(csv.DictReader(svg.with_suffix(".csv").open()))
    assert len(rows) == 18 and {r["series"] for r in rows} == {
        "disk/naive rel_l2_dirichlet", "disk/pretrain rel_l2_dirichlet"}
    first = text
    assert cli.main(["plot", str(path), "--out", str(svg)]) == 0
    assert svg.read_text() == first


def test_plot_monitor_csv(tmp_path):
    path = tmp_path / "monitor.csv"
    path.write_text("iteration,loss,energy,abs_diff\n0,1.0,0.5,0.5\n10,0.5,0.45,0.05\n20,0.2,0.2,0.0\n")
    svg = tmp_path / "m.svg"
    assert cli.main(["plot", str(path), "--out", str(svg)]) == 0
    text = svg.read_text()
    assert text.count("<polyline") == 1 and "errorbar" not in text


def test_plot_empty_records(tmp_path):
    path = tmp_path / "records.csv"
    write_records(path, [record(0, None, 0.1, strategy="exactbc", distance="disk_pol")])
    assert cli.main(["plot", str(path), "--out", str(tmp_path / "x.svg")]) == 2


# ------------------------------------------------------------ run / monitor


def test_run_writes_records(tmp_path, capsys):
    cfg = tmp_path / "c.ini"
    cfg.write_text(TINY)
    out = tmp_path / "out"
    assert cli.main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    recs = read_records(out / "records.csv")
    assert len(recs) == 2
    assert all(not r.failed and r.iterations == 50 and r.preset == "desk" for r in recs)
    assert all(0 < r.rel_l2_dirichlet and 0 < r.rel_l2_robin for r in recs)
    resolved = json.loads((out / "config.json").read_text())
    assert resolved["config_hash"] == recs[0].config_hash and resolved["lattice_n"] == 10

    # refuses to overwrite without --force
    assert cli.main(["run", "--config", str(cfg), "--out", str(out)]) == 2
    assert "--force" in capsys.readouterr().err
    assert cli.main(["run", "--config", str(cfg), "--out", str(out), "--force"]) == 0
    again = read_records(out / "records.csv")
    key = [[getattr(r, f) for f in COMPARE_FIELDS] for r in recs]
    assert key == [[getattr(r, f) for f in COMPARE_FIELDS] for r in again]


def test_parallel_run_matches_serial(tmp_path):
    exp = parse_config(TINY)
    serial, _ = cli.execute(exp, 1)
    parallel, errors = cli.execute(exp, 2)
    assert not errors
    assert [[getattr(r, f) for f in COMPARE_FIELDS] for r in serial] == \
        [[getattr(r, f) for f in COMPARE_FIELDS] for r in parallel]


def test_monitor_command(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text(TINY.replace("repetitions = 2", "repetitions = 1") + "energy_interior = 2000\n")
    out = tmp_path / "mon"
    assert cli.main(["monitor", "--config", str(cfg), "--out", str(out)]) == 0
    rows = list(csv.DictReader((out / "monitor.csv").open()))
    assert len(rows) == 50 // 10 + 1
    assert [int(r["iteration"]) for r in rows] == [0, 10, 20, 30, 40, 50]
    info = json.loads((out / "monitor_summary.json").read_text())
    assert info["rows"] == 6 and not info["failed"]


def test_monitor_needs_single_setting(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text(TINY.replace("lambdas = 10", "lambdas = 10, 20"))
    assert cli.main(["monitor", "--config", str(cfg), "--out", str(tmp_path / "m")]) == 2
