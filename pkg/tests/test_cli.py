import csv
import json

import pytest

from diffged.cli import run_cli


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    assert run_cli(["gen-synthetic", "--random", "6", "--per-graph", "3", "--labels", "3", "--min-nodes", "4",
                    "--max-nodes", "6", "--seed", "1", "--max-delta", "3", "--out", str(d / "data.jsonl")]) == 0
    (d / "cfg.json").write_text(json.dumps({"epochs": 1, "batch_size": 8, "layer_dims": [8, 8], "T": 50,
                                            "val_k": 2, "val_steps": 2, "val_max_pairs": 4}))
    assert run_cli(["train", "--config", str(d / "cfg.json"), "--data", str(d / "data.jsonl"),
                    "--out", str(d / "run")]) == 0
    return d


def lines(path):
    return [json.loads(x) for x in path.read_text().splitlines() if x.strip()]


def test_gen_synthetic_output(workdir):
    recs = lines(workdir / "data.jsonl")
    assert len(recs) == 18
    assert all({"g", "g_prime", "gt_mapping", "gt_ged"} <= set(r) for r in recs)


def test_gen_synthetic_reproducible(workdir, tmp_path):
    args = ["gen-synthetic", "--random", "6", "--per-graph", "3", "--labels", "3", "--min-nodes", "4",
            "--max-nodes", "6", "--seed", "1", "--max-delta", "3", "--out", str(tmp_path / "again.jsonl")]
    assert run_cli(args) == 0
    assert (tmp_path / "again.jsonl").read_bytes() == (workdir / "data.jsonl").read_bytes()


def test_oracle_command(workdir, tmp_path):
    out = tmp_path / "o.jsonl"
    assert run_cli(["oracle", "--input", str(workdir / "data.jsonl"), "--max-nodes", "8", "--out", str(out)]) == 0
    recs = lines(out)
    gts = [r["gt_ged"] for r in lines(workdir / "data.jsonl")]
    assert [r["ged"] for r in recs] == gts
    assert run_cli(["oracle", "--input", str(workdir / "data.jsonl"), "--max-nodes", "3", "--out", str(out)]) == 0
    assert all("skipped" in r for r in lines(out))


def test_train_artifacts(workdir):
    run = workdir / "run"
    for name in ("model.npz", "loss_curve.csv", "validation.csv", "loss_curve.png"):
        assert (run / name).stat().st_size > 0
    rows = list(csv.DictReader(open(run / "loss_curve.csv")))
    assert rows and set(rows[0]) == {"step", "epoch", "loss"}


def test_solve_json(workdir, tmp_path, capsys):
    pair = tmp_path / "x.json"
    pair.write_text((workdir / "data.jsonl").read_text().splitlines()[0])
    capsys.readouterr()
    assert run_cli(["--json", "solve", "--pair", str(pair), "--ckpt", str(workdir / "run" / "model.npz"),
                    "--k", "100", "--s", "10", "--emit-path"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["predicted_ged"] == len(out["edit_path"]["ops"])
    assert out["predicted_ged"] >= json.loads(pair.read_text())["gt_ged"]
    assert len(out["chain_costs"]) == 100


def test_evaluate_oracle_stub_all_ones(workdir, tmp_path, capsys):
    capsys.readouterr()
    assert run_cli(["--json", "evaluate", "--data", str(workdir / "data.jsonl"), "--predictor", "oracle",
                    "--out-dir", str(tmp_path)]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["mae"] == 0 and rep["accuracy"] == 1
    assert rep["rho"] == rep["tau"] == rep["p10"] == rep["p20"] == 1
    assert json.loads((tmp_path / "report.json").read_text()) == rep
    assert (tmp_path / "predictions.png").stat().st_size > 0


def test_evaluate_model(workdir, tmp_path, capsys):
    capsys.readouterr()
    assert run_cli(["--json", "evaluate", "--data", str(workdir / "data.jsonl"),
                    "--ckpt", str(workdir / "run" / "model.npz"), "--k", "2", "--s", "2",
                    "--out-dir", str(tmp_path)]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert set(rep) >= {"mae", "accuracy", "rho", "tau", "p10", "p20", "time_s"}
    assert rep["mae"] >= 0
    rows = list(csv.reader(open(tmp_path / "predictions.csv")))
    assert rows[0] == ["index", "gt_ged", "predicted_ged"] and len(rows) == 19


def test_ablate_k_csv(workdir, tmp_path):
    assert run_cli(["ablate", "--sweep", "k", "--values", "1,2,4", "--s", "2", "--data",
                    str(workdir / "data.jsonl"), "--ckpt", str(workdir / "run" / "model.npz"),
                    "--out", str(tmp_path)]) == 0
    with open(tmp_path / "sweep_k.csv") as fh:
        header = fh.readline().strip()
        rows = list(csv.reader(fh))
    assert header == "param,value,accuracy,mae,time_s"
    assert [r[1] for r in rows] == ["1", "2", "4"] and all(r[0] == "k" for r in rows)
    assert (tmp_path / "sweep_k.png").stat().st_size > 0


def test_ablate_s(workdir, tmp_path):
    assert run_cli(["ablate", "--sweep", "s", "--values", "1,3", "--k", "2", "--data",
                    str(workdir / "data.jsonl"), "--ckpt", str(workdir / "run" / "model.npz"),
                    "--out", str(tmp_path)]) == 0
    assert len((tmp_path / "sweep_s.csv").read_text().splitlines()) == 3


def test_unknown_flag_nonzero(capsys):
    assert run_cli(["solve", "--bogus"]) != 0
    assert "usage" in capsys.readouterr().err


def test_invalid_data_reports_error(tmp_path, capsys):
    bad = tmp_path / "bad.jsonl"
    bad.write_text(json.dumps({"g": {"n": 2, "edges": [[1, 1]], "labels": ["a", "a"]},
                               "g_prime": {"n": 2, "edges": [], "labels": ["a", "a"]}}) + "\n")
    assert run_cli(["oracle", "--input", str(bad)]) == 1
    assert "self-loop" in capsys.readouterr().err


def test_evaluate_needs_checkpoint(workdir):
    assert run_cli(["evaluate", "--data", str(workdir / "data.jsonl")]) == 2
