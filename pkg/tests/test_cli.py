import json

import pytest

from helpers import separable_clusters
from smoothrank.cli import main
from smoothrank.data import Dataset


@pytest.fixture
def data_csv(tmp_path):
    X, y = separable_clusters(n_per=10, seed=2)
    p = tmp_path / "d.csv"
    Dataset(X, y).to_csv(p)
    return str(p)


def test_train_and_predict(tmp_path, data_csv, capsys):
    model = str(tmp_path / "m.txt")
    assert main(["train", "--data", data_csv, "--method", "smooth", "--param", "0.01",
                 "--model-out", model]) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["train_auc"] == 1.0 and info["model"] == model
    scores = str(tmp_path / "s.csv")
    main(["predict", "--model", model, "--data", data_csv, "--scores-out", scores])
    out = json.loads(capsys.readouterr().out)
    assert out["auc"] == 1.0
    lines = open(scores).read().splitlines()
    assert lines[0] == "index,score,label" and len(lines) == 21


def test_predict_to_stdout(tmp_path, data_csv, capsys):
    model = str(tmp_path / "m.txt")
    main(["train", "--data", data_csv, "--method", "linf", "--out", model])
    capsys.readouterr()
    main(["predict", "--model", model, "--data", data_csv])
    assert capsys.readouterr().out.startswith("index,score,label\n0,")


def test_cv(tmp_path, data_csv, capsys):
    out = tmp_path / "cv.json"
    main(["cv", "--data", data_csv, "--method", "linf", "--grid", "0.5,1", "--folds", "3",
          "--out", str(out)])
    doc = json.loads(out.read_text())
    assert doc["best"] == 0.5 and doc["grid"] == [0.5, 1.0]
    assert json.loads(capsys.readouterr().out) == doc


def test_benchmark(tmp_path, data_csv, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"datasets": [{"name": "d", "path": "d.csv"}],
                               "methods": ["linf"], "grids": {"linf": [1.0]},
                               "k_folds": 3}))
    main(["benchmark", str(cfg), "--out", str(tmp_path / "bench"), "--threads", "2"])
    assert "Out-of-sample AUC" in capsys.readouterr().out
    assert (tmp_path / "bench" / "report.json").exists()


def test_xor_demo(tmp_path, capsys):
    out = tmp_path / "trace.csv"
    main(["xor-demo", "--n-per-cluster", "6", "--max-iters", "3", "--out", str(out)])
    text = capsys.readouterr().out
    assert "smooth" in text and "unbounded_cg" in text
    assert out.read_text().startswith("iteration,method,train_auc,test_auc\n")


def test_bad_method(data_csv):
    with pytest.raises(SystemExit):
        main(["train", "--data", data_csv, "--method", "nope"])
