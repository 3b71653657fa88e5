import json

import pytest

from earlydetect.main import EXIT_USAGE, main

DETERMINISTIC_OUTPUTS = [
    "data/dataset.json",
    "data/labels.json",
    "model.json",
    "detections.json",
    "detections_traces.csv",
    "signatures.csv",
    "eval_model/mean_ap_vs_ratio.csv",
    "eval_cv/mean_ap_vs_ratio.csv",
    "eval_cv/class_ap_no_onset.csv",
    "eval_cv/pr_curves_histogram_plus_mean_max.csv",
    "ablate/ablation.csv",
]


@pytest.fixture
def inputs(tmp_path, tiny_scenario, run_config):
    scenario = tmp_path / "scenario.json"
    scenario.write_text(json.dumps(tiny_scenario()))
    run = tmp_path / "run.json"
    run.write_text(run_config.model_dump_json())
    return scenario, run


def run_pipeline(root, scenario, run, seed):
    data = root / "data"
    stream = data / "streams" / "set01_s01.jsonl"
    steps = [
        ["gen", "--config", str(scenario), "--seed", str(seed), "--out", str(data)],
        ["train", "--data", str(data), "--out-model", str(root / "model.json"), "--config", str(run)],
        ["detect", "--model", str(root / "model.json"), "--stream", str(stream),
         "--out", str(root / "detections.json"), "--signatures", str(root / "signatures.csv")],
        ["eval", "--model", str(root / "model.json"), "--data", str(data),
         "--ratios", "0.5", "1.0", "--out-dir", str(root / "eval_model")],
        ["eval", "--data", str(data), "--config", str(run), "--out-dir", str(root / "eval_cv")],
        ["ablate", "--data", str(data), "--config", str(run), "--variants", "no_onset", "mean-max-only",
         "--out-dir", str(root / "ablate")],
        ["bench", "--model", str(root / "model.json"), "--stream", str(stream),
         "--repeat", "1", "--max-frames", "10", "--out", str(root / "bench.json")],
    ]
    for argv in steps:
        assert main(["-q", *argv]) == 0, argv[0]


def test_pipeline_reruns_byte_identical(tmp_path, inputs, tiny_seed):
    scenario, run = inputs
    run_pipeline(tmp_path / "a", scenario, run, tiny_seed)
    run_pipeline(tmp_path / "b", scenario, run, tiny_seed)
    for rel in DETERMINISTIC_OUTPUTS:
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes(), rel

    model = json.loads((tmp_path / "a" / "model.json").read_text())
    assert set(model["provenance"]) == {"seed", "dataset_hash", "config_hash"}
    table = (tmp_path / "a" / "eval_model" / "mean_ap_vs_ratio.csv").read_text().splitlines()
    assert table[0] == "ratio,histogram_plus_mean_max"
    assert [row.split(",")[0] for row in table[1:]] == ["0.500000", "1.000000"]
    assert (tmp_path / "a" / "ablate" / "ablation.csv").read_text().splitlines()[0] == "ratio,no_onset,mean_max_only"
    bench = json.loads((tmp_path / "a" / "bench.json").read_text())
    assert bench["frames"] == 10


def test_compact_model(tmp_path, inputs, tiny_seed):
    scenario, run = inputs
    data = tmp_path / "data"
    assert main(["-q", "gen", "--config", str(scenario), "--seed", str(tiny_seed), "--out", str(data)]) == 0
    assert main([
        "-q", "train", "--data", str(data), "--out-model", str(tmp_path / "model.gz"),
        "--config", str(run), "--variant", "gaussian_bayes", "--compact",
    ]) == 0
    assert (tmp_path / "model.gz").read_bytes()[:2] == b"\x1f\x8b"


def test_missing_dataset_reports_usage_error(tmp_path, capsys):
    code = main(["-q", "train", "--data", str(tmp_path / "nowhere"), "--out-model", str(tmp_path / "m.json")])
    assert code == EXIT_USAGE
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1
    assert err[0].startswith("error: train: DatasetLoadError: ")


def test_bad_override_reports_usage_error(tmp_path, inputs, tiny_seed, capsys):
    scenario, _ = inputs
    data = tmp_path / "data"
    assert main(["-q", "gen", "--config", str(scenario), "--seed", str(tiny_seed), "--out", str(data)]) == 0
    capsys.readouterr()
    code = main(["-q", "train", "--data", str(data), "--out-model", str(tmp_path / "m.json"),
                 "--set", "cascade.depth=0"])
    assert code == EXIT_USAGE
    assert capsys.readouterr().err.startswith("error: train: ConfigError: ")

    code = main(["-q", "train", "--data", str(data), "--out-model", str(tmp_path / "m.json"),
                 "--variant", "no_onsett"])
    assert code == EXIT_USAGE
    assert "did you mean 'no_onset'" in capsys.readouterr().err


def test_unknown_preset(tmp_path, capsys):
    assert main(["-q", "gen", "--preset", "STRONG", "--out", str(tmp_path / "d")]) == EXIT_USAGE
    assert capsys.readouterr().err.startswith("error: gen: ConfigError: unknown preset")
