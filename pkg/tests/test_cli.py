import json

import numpy as np
import pytest

from lfpforecast import config as config_mod
from lfpforecast.cli import main
from lfpforecast.config import ExperimentConfig, apply_overrides, from_dict
from lfpforecast.errors import ConfigError
from lfpforecast.export import read_matrix_csv, read_pgm
from lfpforecast.persist import load_model
from lfpforecast.signal import TimeSeries, make_windows, r_squared, read_csv, write_csv
from lfpforecast.synth import RegimeConfig, generate


def write_config(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


def run(*argv):
    return main([str(a) for a in argv])


# -- configuration ----------------------------------------------------------------------------

def test_defaults_and_round_trip_through_dict():
    cfg = ExperimentConfig()
    assert cfg.cv.k == 10 and cfg.model == "WCLSA" and len(cfg.models) == 5
    assert from_dict(json.loads(cfg.to_json())) == cfg


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError):
        from_dict({"modle": "AR"})
    with pytest.raises(ConfigError):
        from_dict({"train": {"learning_rte": 0.1}})
    with pytest.raises(ConfigError):
        from_dict({"train": {"learning_rate": -1}})


def test_precedence_flag_over_file_over_default(tmp_path):
    path = write_config(tmp_path / "c.json", {"synthetic": {"seed": 5, "n_samples": 800}, "cv": {"k": 4}})
    cfg = config_mod.load(path)
    assert cfg.synthetic.seed == 5 and cfg.cv.k == 4 and cfg.train.learning_rate == 1e-3
    over = apply_overrides(cfg, seed=9, k_folds=3, model="ar,var", regime="independent")
    assert over.synthetic.seed == 9 and over.train.seed == 9 and over.cv.k == 3
    assert over.models == ("AR", "VAR") and over.model == "AR"
    assert over.synthetic.regime.value == "INDEPENDENT" and over.regimes == ("INDEPENDENT",)
    assert over.synthetic.n_samples == 800
    untouched = apply_overrides(cfg)
    assert untouched == cfg


def test_missing_and_malformed_config_files(tmp_path):
    with pytest.raises(ConfigError):
        config_mod.load(tmp_path / "nope.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        config_mod.load(bad)


def test_example_config_in_repo_loads():
    from pathlib import Path

    example = Path(__file__).resolve().parent.parent / "configs" / "example.json"
    cfg = config_mod.load(example)
    assert cfg.cv.k == 10


# -- simulate --------------------------------------------------------------------------------------

def test_simulate_line_count_determinism_and_round_trip(tmp_path):
    for name in ("a", "b"):
        assert run("simulate", "--regime", "coupled", "--seed", 3, "--out", tmp_path / name) == 0
    a = (tmp_path / "a" / "data.csv").read_bytes()
    assert a == (tmp_path / "b" / "data.csv").read_bytes()
    # default synthetic length is 20000; a 5000-sample config gives header + 5000 rows
    cfg = write_config(tmp_path / "c.json", {"synthetic": {"n_samples": 5000}})
    assert run("simulate", "--config", cfg, "--out", tmp_path / "c") == 0
    text = (tmp_path / "c" / "data.csv").read_text()
    assert len(text.splitlines()) == 5001 and text.startswith("t,hip,nac\n")
    back = read_csv(tmp_path / "c" / "data.csv")
    assert back == list(generate(RegimeConfig(n_samples=5000)))
    echo = json.loads((tmp_path / "c" / "config_echo.json").read_text())
    assert from_dict(echo).synthetic.n_samples == 5000


# -- analyze ------------------------------------------------------------------------------------------

def test_analyze_identical_channels(tmp_path):
    x = np.random.default_rng(0).normal(size=400)
    write_csv(tmp_path / "d.csv", [TimeSeries(x, label="a"), TimeSeries(x, label="b")])
    assert run("analyze", "--csv", tmp_path / "d.csv", "--out", tmp_path / "o") == 0
    rep = json.loads((tmp_path / "o" / "analysis.json").read_text())
    assert rep["pearson_corr"] == pytest.approx(1.0)
    assert rep["mean_coherence"] == pytest.approx(1.0, abs=1e-6)
    series = (tmp_path / "o" / "coherence_series.csv").read_text().splitlines()
    assert series[0] == "start,mean_coherence" and len(series) == rep["n_windows"] + 1


def test_analyze_independent_and_map_shapes(tmp_path):
    cfg = write_config(tmp_path / "c.json", {"synthetic": {"regime": "INDEPENDENT"}, "analyze_windows": [0, 5]})
    assert run("analyze", "--config", cfg, "--out", tmp_path / "o") == 0
    rep = json.loads((tmp_path / "o" / "analysis.json").read_text())
    assert abs(rep["pearson_corr"]) < 0.05
    for stem in ("scalogram_hip_w0", "scalogram_nac_w5", "coherence_w5"):
        m = read_matrix_csv(tmp_path / "o" / f"{stem}.csv")
        assert m.shape == (16, 12)
        img = read_pgm(tmp_path / "o" / f"{stem}.pgm")
        assert img.shape == (16, 12)


def test_analyze_single_channel_exit_code(tmp_path):
    p = tmp_path / "one.csv"
    p.write_text("t,v\n" + "".join(f"{i},{np.sin(i)}\n" for i in range(50)))
    assert run("analyze", "--csv", p, "--out", tmp_path / "o") == 3


# -- exit codes ----------------------------------------------------------------------------------------

def test_exit_codes(tmp_path):
    assert run("simulate", "--config", tmp_path / "missing.json", "--out", tmp_path) == 2
    bad = write_config(tmp_path / "bad.json", {"wavelet": {"omega0": 1}})
    assert run("simulate", "--config", bad, "--out", tmp_path) == 2
    flat = tmp_path / "flat.csv"
    write_csv(flat, [TimeSeries(np.ones(100)), TimeSeries(np.arange(100.0))])
    assert run("fit", "--csv", flat, "--model", "LSTM", "--out", tmp_path / "f") == 3
    with pytest.raises(SystemExit):
        run("frobnicate")


# -- export -----------------------------------------------------------------------------------------

def test_export_command(tmp_path):
    assert run("export", "--window", 3, "--what", "coherence", "--no-pgm", "--out", tmp_path) == 0
    assert (tmp_path / "coherence_w3.csv").exists() and not (tmp_path / "coherence_w3.pgm").exists()
    assert not (tmp_path / "scalogram_hip_w3.csv").exists()


# -- fit --------------------------------------------------------------------------------------------

FIT_DOC = {
    "synthetic": {"n_samples": 1500},
    "wavelet": {"n_scales": 4},
    "architecture": {"encoder_filters": [4, 2], "mlp_hidden": 8},
    "train": {"max_epochs": 2, "learning_rate": 0.01},
}


@pytest.mark.parametrize("model", ["WCOH_CLSA", "WCLSA", "AR", "VAR"])
def test_fit_reloaded_models_reproduce_reported_metrics(tmp_path, model):
    cfg = write_config(tmp_path / "c.json", FIT_DOC)
    assert run("fit", "--config", cfg, "--model", model, "--out", tmp_path / "o") == 0
    metrics = json.loads((tmp_path / "o" / "metrics.json").read_text())
    chans = generate(RegimeConfig(n_samples=1500))
    ds = make_windows(list(chans))
    test = ds.subset(np.flatnonzero(ds.start_indices >= metrics["split"]["cut"]))
    assert len(test) == metrics["split"]["n_test"]
    for name, fit in metrics["fits"].items():
        h = fit["history"]
        assert len(h["train_loss"]) == len(h["val_loss"])
        if model not in ("AR", "VAR"):
            assert len(h["train_loss"]) == 2
        reloaded = load_model(tmp_path / "o" / name)
        preds = reloaded.predict(test.inputs)
        for j, c in enumerate(reloaded.channels):
            label = ("hip", "nac")[c]
            assert abs(r_squared(preds[:, j], test.targets[:, c]) - fit["test"][label]["r2"]) < 1e-12
    names = set(metrics["fits"])
    assert names == ({"model"} if model in ("VAR", "WCOH_CLSA") else {"model_hip", "model_nac"})


def test_fit_predictions_match_metrics_and_refit_is_identical(tmp_path):
    cfg = write_config(tmp_path / "c.json", FIT_DOC)
    for out in ("a", "b"):
        assert run("fit", "--config", cfg, "--model", "LSTM", "--out", tmp_path / out) == 0
    a = (tmp_path / "a" / "metrics.json").read_text()
    assert a == (tmp_path / "b" / "metrics.json").read_text()
    assert (tmp_path / "a" / "model_hip" / "checkpoint.bin").read_bytes() == (
        tmp_path / "b" / "model_hip" / "checkpoint.bin").read_bytes()


# -- benchmark --------------------------------------------------------------------------------------

def test_benchmark_grid_shape(tmp_path):
    doc = {
        "synthetic": {"n_samples": 1200},
        "wavelet": {"n_scales": 3},
        "architecture": {"encoder_filters": [2], "mlp_hidden": 4, "lstm_hidden": 4},
        "train": {"max_epochs": 1},
        "cv": {"k": 2},
    }
    cfg = write_config(tmp_path / "c.json", doc)
    assert run("benchmark", "--config", cfg, "--out", tmp_path / "o") == 0
    lines = (tmp_path / "o" / "grid.csv").read_text().splitlines()
    header = lines[0].split(",")
    assert header[0] == "model" and len(header) == 1 + 3 * 2
    assert [ln.split(",")[0] for ln in lines[1:]] == ["AR", "VAR", "LSTM", "WCLSA", "WCOH_CLSA"]
    assert all(len(ln.split(",")) == 7 and "" not in ln.split(",") for ln in lines[1:])
    report = json.loads((tmp_path / "o" / "report.json").read_text())
    assert set(report["results"]) == {"COUPLED", "NONLINEAR", "INDEPENDENT"}
    assert "output_dir" not in report["config"]
    table = (tmp_path / "o" / "table.txt").read_text().splitlines()
    assert len(table) == 2 + 5


def test_benchmark_parallel_matches_serial(tmp_path):
    doc = {"synthetic": {"n_samples": 1000}, "models": ["AR", "VAR"], "cv": {"k": 2}}
    cfg = write_config(tmp_path / "c.json", doc)
    assert run("benchmark", "--config", cfg, "--regime", "coupled,independent", "--out", tmp_path / "s") == 0
    assert run("benchmark", "--config", cfg, "--regime", "coupled,independent", "--jobs", 2,
               "--out", tmp_path / "p") == 0
    for f in ("grid.csv", "report.json"):
        assert (tmp_path / "s" / f).read_bytes() == (tmp_path / "p" / f).read_bytes()


def test_benchmark_from_csv_uses_data_column(tmp_path):
    write_csv(tmp_path / "d.csv", list(generate(RegimeConfig(n_samples=1000))))
    cfg = write_config(tmp_path / "c.json", {"models": ["AR"], "cv": {"k": 2}})
    assert run("benchmark", "--config", cfg, "--csv", tmp_path / "d.csv", "--out", tmp_path / "o") == 0
    header = (tmp_path / "o" / "grid.csv").read_text().splitlines()[0]
    assert header == "model,DATA_hip,DATA_nac"
