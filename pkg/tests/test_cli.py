import csv
import json

import numpy as np
import pytest

from lshitables.cli import main
from lshitables.data import synth_planted
from lshitables.ensemble import EnsembleModel


@pytest.fixture
def csv_path(tmp_path):
    ds = synth_planted(150, 8, 3, 3.0, seed=0)
    path = tmp_path / "toy.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["a", "b", "c", "label"])
        for x, y in zip(ds.X, ds.y):
            w.writerow([*x, y])
    return path


@pytest.fixture(autouse=True)
def results_env(tmp_path, monkeypatch):
    monkeypatch.setenv("LSHITABLES_RESULTS_DIR", str(tmp_path / "results"))
    return tmp_path / "results"


def read_rows(path):
    return list(csv.DictReader(path.open()))


def test_eval_writes_ledger_scores_and_model(csv_path, tmp_path, results_env, capsys):
    scores, model = tmp_path / "scores.csv", tmp_path / "model.json"
    code = main(["eval", "--dataset", str(csv_path), "--m", "10", "--runs", "2",
                 "--scores-out", str(scores), "--model-out", str(model)])
    assert code == 0
    assert "AUC" in capsys.readouterr().out
    (row,) = read_rows(results_env / "results.csv")
    assert row["detector"] == "lsh-itables" and row["runs"] == "2" and row["dataset"] == "toy"
    out = read_rows(scores)
    assert len(out) == 158 and out[0]["orientation"] == "lower-is-outlier"
    assert EnsembleModel.load(model).m == 10


def test_eval_iforest_cannot_export_model(csv_path, tmp_path):
    assert main(["eval", "--dataset", str(csv_path), "--detector", "iforest", "--m", "5", "--runs", "1",
                 "--model-out", str(tmp_path / "m.json")]) == 1


def test_runs_zero_is_usage_error(csv_path):
    with pytest.raises(SystemExit) as exc:
        main(["eval", "--dataset", str(csv_path), "--runs", "0"])
    assert exc.value.code == 2


@pytest.mark.parametrize("argv", [
    ["eval"],
    ["eval", "--dataset", "x.csv", "--detector", "loda"],
    ["collab", "--dataset", "x.csv", "--epsilon", "0"],
    ["collab", "--dataset", "x.csv", "--detector", "iforest"],
    ["bench"],
    ["bench", "--synthetic", "100", "--detectors", "lsh-itables,foo"],
])
def test_usage_errors(argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2


def test_missing_dataset_is_runtime_error(tmp_path, capsys):
    assert main(["eval", "--dataset", str(tmp_path / "absent.csv")]) == 1
    assert "error" in capsys.readouterr().err


def test_collab_sweep_and_transcript(csv_path, tmp_path, results_env):
    plot, transcript = tmp_path / "plot.csv", tmp_path / "t.jsonl"
    code = main(["collab", "--dataset", str(csv_path), "--k", "2", "--m", "5", "--runs", "2",
                 "--sweep", "0.5,inf", "--plot-data", str(plot), "--transcript", str(transcript)])
    assert code == 0
    assert [r["epsilon"] for r in read_rows(plot)] == ["0.5", "inf"]
    rows = read_rows(results_env / "results.csv")
    assert [r["participants"] for r in rows] == ["2", "2"]
    kinds = [json.loads(line)["kind"] for line in transcript.read_text().splitlines()]
    assert kinds.count("release") == 10


def test_collab_per_participant_budgets(csv_path, results_env):
    code = main(["collab", "--dataset", str(csv_path), "--k", "3", "--m", "5", "--runs", "1",
                 "--epsilon", "0.1,0.2,0.3", "--detector", "rs-h"])
    assert code == 0
    (row,) = read_rows(results_env / "results.csv")
    assert float(row["epsilon"]) == pytest.approx(0.6)


def test_collab_budget_count_mismatch(csv_path):
    assert main(["collab", "--dataset", str(csv_path), "--k", "3", "--epsilon", "0.1,0.2"]) == 1


def test_bench_synthetic(tmp_path, capsys):
    out = tmp_path / "bench.csv"
    assert main(["bench", "--synthetic", "2000", "--m", "5", "--out", str(out)]) == 0
    rows = read_rows(out)
    assert [r["detector"] for r in rows] == ["lsh-itables", "rs-h", "iforest"]
    assert all(float(r["total_seconds"]) >= 0 and 0 <= float(r["auc"]) <= 1 for r in rows)
    assert np.isfinite([float(r["auc"]) for r in rows]).all()
