from __future__ import annotations

import csv
import dataclasses

import numpy as np
import pytest

from qotplan import cli, datagen, gbt, qot
from qotplan.planner import read_report

TINY = """\
[datagen]
fill_min = 0.05
fill_max = 0.06

[gbt]
n_trees = 20
max_depth = 3
"""


def run(*argv):
    return cli.main([str(a) for a in argv])


def read_table(path):
    with open(path) as fh:
        return list(csv.reader(line for line in fh if not line.startswith("#")))


def test_error_stats_perfect_predictor():
    stats = cli.error_stats(np.zeros(50))
    assert set(stats) == set(cli.EVAL_METRICS)
    assert stats["n"] == 50.0
    assert all(stats[k] == 0.0 for k in cli.EVAL_METRICS if k != "n")
    with pytest.raises(cli.UsageError):
        cli.error_stats(np.array([]))


def test_error_stats_signed():
    stats = cli.error_stats(np.array([-1.0, 1.0, 1.0, 1.0]))
    assert stats["mean_db"] == 0.5 and stats["mae_db"] == 1.0 and stats["max_abs_db"] == 1.0


def test_cdf_and_histogram_tables():
    errors = {"ml": np.array([0.0, 0.015, -0.03]), "gn": np.array([0.1, 0.1, 0.1])}
    cdf = cli.cdf_table(errors)
    assert cdf[0][0] == 0.0 and cdf[-1][1:] == [1.0, 1.0]
    assert all(a[1] <= b[1] and a[2] <= b[2] for a, b in zip(cdf, cdf[1:]))
    hist = cli.histogram_table(errors)
    assert sum(r[2] for r in hist) == 3 and sum(r[3] for r in hist) == 3


@pytest.fixture(scope="module")
def tiny_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    cfg = root / "tiny.ini"
    cfg.write_text(TINY)
    data, model = root / "d.csv", root / "m.json"
    assert run("gen-data", "--config", cfg, "--scenarios", 10, "--seed", 3, "--out", data) == 0
    assert run("train", "--config", cfg, "--data", data, "--out", model) == 0
    return root, cfg, data, model


def test_gen_data_writes_splits_and_header(tiny_run):
    root, _, data, _ = tiny_run
    head = datagen.read_header(data)
    assert head["command"] == "gen-data" and head["split_seed"] == "3"
    assert head["datagen.fill_min"] == "0.05"
    rows = datagen.load_rows(data)
    parts = [datagen.load_rows(cli.part_path(data, p)) for p in cli.PARTS]
    assert sum(len(p) for p in parts) == len(rows)
    ids = [{r.scenario_id for r in p} for p in parts]
    assert [len(i) for i in ids] == [7, 1, 2]


def test_train_saves_model_with_metadata(tiny_run):
    root, _, _, model = tiny_run
    loaded = gbt.load(model)
    assert 1 <= len(loaded.trees) <= 20
    assert (root / "m.report.csv").is_file()


def test_eval_outputs(tiny_run):
    root, cfg, data, model = tiny_run
    out = root / "e.csv"
    assert run("eval", "--config", cfg, "--model", model, "--data", data, "--out", out) == 0
    table = read_table(out)
    assert table[0] == ["metric", "ml", "gn"]
    assert [r[0] for r in table[1:]] == cli.EVAL_METRICS
    assert (root / "e.cdf.csv").is_file() and (root / "e.hist.csv").is_file()
    assert datagen.read_header(out)["part"] == "test"


def test_evaluate_rows_zero_error_for_oracle_labels(tiny_run):
    _, _, data, _ = tiny_run
    rows = [dataclasses.replace(r, eta_gn_db=r.label) for r in datagen.load_rows(data)[:20]]
    x, y = datagen.as_arrays(rows[:1])
    model = gbt.GbtModel((), 0.1, float(qot.training_target(x, y)[0]), 25)
    errors = cli.evaluate_rows(model, rows, cli.Settings())
    assert np.all(errors["gn"] == 0.0)
    assert errors["ml"][0] == 0.0


def test_plan_is_deterministic_and_compare_self(tmp_path):
    outs = []
    for name in ("a.csv", "b.csv"):
        out = tmp_path / name
        assert run("plan", "--topology", "stress6", "--demands", "stress6", "--rcsa", "yearly",
                   "--pce", "gn", "--periods", 3, "--out", out) == 0
        outs.append(out)
    assert outs[0].read_bytes() == outs[1].read_bytes()
    head = datagen.read_header(outs[0])
    assert (head["rcsa"], head["pce"], head["years"], head["topology"]) == \
           ("yearly", "gn", "3", "stress6.json")
    assert len(read_report(outs[0])) == 3
    cmp = tmp_path / "c.csv"
    assert run("compare", outs[0], outs[1], "--out", cmp) == 0
    table = read_table(cmp)
    assert table[0] == cli.COMPARE_FIELDS
    assert len(table) == 1 + 3 * len(cli.COMPARE_METRICS)
    assert all(float(r[4]) == 0.0 for r in table[1:])


def test_compare_monthly_against_yearly(tmp_path):
    y, m = tmp_path / "y.csv", tmp_path / "m.csv"
    common = ["--topology", "stress6", "--demands", "stress6", "--pce", "gn", "--periods", 2]
    assert run("plan", "--rcsa", "yearly", "--out", y, *common) == 0
    assert run("plan", "--rcsa", "monthly", "--out", m, *common) == 0
    assert len(read_report(m)) == 13
    rows = cli.compare_reports(y, m)
    assert sorted({r[0] for r in rows}) == [0, 1]
    art = {r[0]: r for r in rows if r[1] == "art_gbps"}
    assert art[1][2] == pytest.approx(art[1][3])


def test_plan_with_ml_writes_cache(tiny_run, tmp_path):
    _, _, _, model = tiny_run
    cache = tmp_path / "sci.csv"
    assert run("plan", "--topology", "stress6", "--demands", "stress6", "--rcsa", "eol",
               "--pce", "ml", "--model", model, "--cache", cache, "--periods", 1,
               "--out", tmp_path / "p.csv") == 0
    assert cache.is_file()


def test_missing_file_exits_nonzero(tmp_path, capsys):
    assert run("train", "--data", tmp_path / "nope.csv", "--out", tmp_path / "m.json") == 1
    assert "error" in capsys.readouterr().err
    assert run("plan", "--topology", tmp_path / "x.json", "--demands", "stress6", "--rcsa", "yearly",
               "--pce", "gn", "--periods", 1, "--out", tmp_path / "p.csv") == 1
    assert run("plan", "--topology", "stress6", "--demands", "stress6", "--rcsa", "yearly",
               "--pce", "ml", "--periods", 1, "--out", tmp_path / "p.csv") == 1
    assert run("gen-data", "--scenarios", 3, "--seed", 0, "--out", tmp_path / "d.csv") == 1


def test_bad_config_exits_nonzero(tmp_path, capsys):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[gbt]\nwidth = 3\n")
    assert run("plan", "--config", cfg, "--topology", "stress6", "--demands", "stress6",
               "--rcsa", "yearly", "--pce", "gn", "--periods", 1, "--out", tmp_path / "p.csv") == 1
    assert "width" in capsys.readouterr().err


def test_unknown_flag_is_usage_error():
    with pytest.raises(SystemExit) as info:
        run("plan", "--bogus")
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        run("plan", "--topology", "stress6", "--demands", "stress6", "--rcsa", "weekly",
            "--pce", "gn", "--periods", 1, "--out", "x.csv")
    assert info.value.code == 2
