import numpy as np
import pytest

import feds_lab as fl

TINY = {
    "seed": 3,
    "data": {"corpus_size": 60},
    "recognizer": {"channels": 6},
    "train": {"iters_surrogate": 2, "iters_recognizer": 2, "epochs": 2,
              "batch_size": 4, "baseline_iterations": 10},
}


def test_edit_distance_and_metrics():
    assert fl.edit_distance("kitten", "sitting") == 3
    r = fl.evaluate_set(["cat", "dig"], ["cat", "dog"])
    assert r["ted"] == 1
    assert r["accuracy"] == pytest.approx(0.5)


def test_encode_decode_roundtrip():
    a = fl.Alphabet.default()
    grid = fl.encode_one_hot("ab12", a, 8)
    assert grid.shape == (37, 8)
    np.testing.assert_allclose(grid.sum(axis=0), 1.0)
    assert fl.decode_greedy(grid, a) == "ab12"


def test_filter():
    assert fl.filter_value(2, 2.1, 0.25) == pytest.approx(0.1)
    assert fl.filter_value(2, 3.0, 0.25) == 0.25
    assert not fl.gate_open(1, 1.25, 0.25)
    with pytest.raises(fl.ConfigError):
        fl.filter_value(0, 0, 0)


def test_config_defaults_and_errors():
    cfg = fl.config({"train": {"lambda": 0.1}})
    assert cfg["train"]["lambda"] == 0.1
    assert cfg["train"]["iters_surrogate"] == 500
    with pytest.raises(fl.ConfigError):
        fl.config({"train": {"lamda": 0.1}})


def test_corpus_is_deterministic():
    a = fl.sample_corpus({"data": {"corpus_size": 10}})
    b = fl.sample_corpus({"data": {"corpus_size": 10}})
    assert a["labels"] == b["labels"]
    assert len(a["train"]) == 8
    assert a["images"][0].shape == (8, 32)


def test_pipeline(tmp_path):
    fl.gen_data(TINY, tmp_path / "data")
    base = fl.train_baseline(TINY, tmp_path / "data", tmp_path / "base")
    assert base["n_samples"] == 6
    fl.tune(TINY, tmp_path / "data", tmp_path / "base" / "recognizer.bin", tmp_path / "tune")
    logs = fl.read_log(str(tmp_path / "tune" / "log.csv"))
    assert len(logs) == 2 * (2 + 2) * 4
    rep = fl.evaluate(str(tmp_path / "tune" / "recognizer.bin"), str(tmp_path / "data"), "test",
                      str(tmp_path / "eval"), str(tmp_path / "base" / "recognizer.bin"))
    assert 0.0 <= rep["accuracy"] <= 1.0
    s = fl.scatter(str(tmp_path / "tune" / "log.csv"), 1, 2, 0.25, str(tmp_path / "scatter.csv"))
    assert s["rows"] == 16

    net = fl.Recognizer.load(str(tmp_path / "tune" / "recognizer.bin"))
    corpus = fl.sample_corpus(TINY)
    grid = net.recognize(corpus["images"][0])
    np.testing.assert_allclose(grid.sum(axis=0), 1.0, atol=1e-9)
    sur = fl.Surrogate.load(str(tmp_path / "tune" / "surrogate.bin"))
    assert sur.distance(grid, grid) <= 1e-6

    with pytest.raises(fl.IoError):
        fl.Recognizer.load(str(tmp_path / "missing.bin"))
