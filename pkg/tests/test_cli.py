import csv
import json
import os

import pytest

from dcct.cli import main

SMALL = """\
epochs = 2
iterations = 3
clusterer = "dbscan"
base = 0.5
delta = 0.35
k1 = 10
k2 = 3
p_ids = 4
d_hidden = 16
d_out = 8
seeds = [0, 1]

[data]
n_identities = 12
samples_per_identity = 8
d_in = 12
"""


@pytest.fixture
def config(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text(SMALL)
    return path


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_run_writes_outputs(config, tmp_path):
    out = tmp_path / "run"
    assert main(["run", "--config", str(config), "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert set(summary["final"]) >= {"mAP", "top1", "top5", "top10"}
    assert summary["chosen_mean_net"] in (1, 2)
    assert summary["wall_time_s"] > 0
    assert len(read_csv(out / "metrics.csv")) == 2
    assert (out / "checkpoints" / "best.json").exists()


def test_run_twice_same_summary(config, tmp_path):
    summaries = []
    for name in ("a", "b"):
        assert main(["run", "--config", str(config), "--out", str(tmp_path / name), "--seed", "7"]) == 0
        s = json.loads((tmp_path / name / "summary.json").read_text())
        s.pop("wall_time_s")
        summaries.append(s)
    assert summaries[0] == summaries[1]
    assert (tmp_path / "a" / "metrics.csv").read_bytes() == (tmp_path / "b" / "metrics.csv").read_bytes()


def test_missing_required_field_exit_2(tmp_path, capsys):
    path = tmp_path / "bad.toml"
    path.write_text(SMALL.replace("iterations = 3\n", ""))
    assert main(["run", "--config", str(path), "--out", str(tmp_path / "o")]) == 2
    assert "iterations" in capsys.readouterr().err
    assert not (tmp_path / "o" / "metrics.csv").exists()


def test_unparseable_config_names_line(tmp_path, capsys):
    path = tmp_path / "bad.toml"
    path.write_text("epochs = = 3\n")
    assert main(["run", "--config", str(path)]) == 2
    assert "line 1" in capsys.readouterr().err


def test_bad_value_names_field(config, capsys):
    assert main(["run", "--config", str(config), "--set", "data.intra_noise_sigma=-1"]) == 2
    assert "intra_noise_sigma" in capsys.readouterr().err


def test_set_flag_recorded(config, tmp_path):
    out = tmp_path / "o"
    assert main(["run", "--config", str(config), "--out", str(out), "--set", "use_csm=false"]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["use_csm"] is False and summary["use_dcdp"] is True


def test_ablate_grid(config, tmp_path):
    out = tmp_path / "abl"
    assert main(["ablate", "--config", str(config), "--out", str(out)]) == 0
    rows = read_csv(out / "ablation.csv")
    assert [(r["use_dcdp"], r["use_csm"]) for r in rows] == [
        ("true", "true"), ("true", "false"), ("false", "true"), ("false", "false")
    ]
    assert all(r["n_seeds"] == "2" for r in rows)
    assert len(read_csv(out / "ablation_runs.csv")) == 8


def test_sweep_rows_and_delta_zero(config, tmp_path):
    out = tmp_path / "sw"
    assert main(["sweep", "--config", str(config), "--out", str(out), "--param", "delta", "--values", "0", "0.2"]) == 0
    rows = read_csv(out / "sweep.csv")
    assert [float(r["value"]) for r in rows] == [0.0, 0.2]
    abl = tmp_path / "abl"
    assert main(["ablate", "--config", str(config), "--out", str(abl), "--seed", "0"]) == 0
    cell = {r["cell"]: r for r in read_csv(abl / "ablation_runs.csv")}["no_dcdp"]
    assert float(rows[0]["mAP"]) == float(cell["mAP"])


@pytest.mark.parametrize("extra", [["--param", "tau", "--values", "1"], ["--param", "gamma", "--values"], ["--param", "gamma"]])
def test_sweep_usage_errors(config, tmp_path, extra):
    assert main(["sweep", "--config", str(config), "--out", str(tmp_path)] + extra) == 2
    assert not (tmp_path / "sweep.csv").exists()


def test_gen_data_and_eval_checkpoint(config, tmp_path, capsys):
    assert main(["gen-data", "--config", str(config), "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "dataset.csv").read_text().splitlines()
    assert len(lines) == 1 + 96
    out = tmp_path / "r"
    assert main(["run", "--config", str(config), "--out", str(out)]) == 0
    capsys.readouterr()
    ckpt = out / "checkpoints" / "best"
    assert main(["eval-checkpoint", "--config", str(config), "--checkpoint", str(ckpt), "--out", str(out)]) == 0
    report = json.loads((out / "eval.json").read_text())
    summary = json.loads((out / "summary.json").read_text())
    assert report["mAP"] == pytest.approx(summary["final"]["mAP"], abs=1e-12)


def test_no_temp_files_left(config, tmp_path):
    out = tmp_path / "run"
    main(["run", "--config", str(config), "--out", str(out)])
    assert not [f for f in os.listdir(out) if f.endswith(".tmp")]


def test_config_required(capsys):
    assert main(["run"]) == 2
