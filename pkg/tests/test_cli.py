import json

import numpy as np
import pytest

import ArgumentHandler as argument_handler
from ArgumentHandler import ArgumentHandler
from file_formats import read_dataset, read_json, read_labels, write_json
from main import main


@pytest.fixture
def settings_file(tmp_path, monkeypatch):
    path = tmp_path / "config.json"
    monkeypatch.setattr(argument_handler, "CONFIG_FILE", str(path))
    return path


@pytest.fixture
def sim2_files(tmp_path):
    paths = {name: tmp_path / name for name in ("data.csv", "truth.txt", "params.json")}
    code = main(["generate", "--sim", "sim2", "--n", "90", "--seed", "3", "--out", str(paths["data.csv"]),
                 "--labels", str(paths["truth.txt"]), "--params-out", str(paths["params.json"])])
    assert code == 0
    return paths


def test_generate_writes_dataset_and_labels(sim2_files):
    y = read_dataset(sim2_files["data.csv"])
    assert y.shape == (90, 5)
    assert np.bincount(read_labels(sim2_files["truth.txt"], k=3)).tolist() == [30, 30, 30]
    assert read_json(sim2_files["params.json"])["k"] == 3


def test_generate_is_deterministic(tmp_path, sim2_files):
    again = tmp_path / "again.csv"
    main(["generate", "--sim", "sim2", "--n", "90", "--seed", "3", "--out", str(again),
          "--labels", str(tmp_path / "again.txt")])
    assert again.read_bytes() == sim2_files["data.csv"].read_bytes()


@pytest.mark.parametrize("model, init", [("hetero", "vanilla"), ("homog", "spectral"), ("hetero", "kmeanspp"),
                                         ("vanilla", "spectral"), ("spectral", "spectral")])
def test_cluster_writes_labels_and_report(tmp_path, sim2_files, model, init):
    out, report = tmp_path / "labels.txt", tmp_path / "report.json"
    code = main(["cluster", "--data", str(sim2_files["data.csv"]), "--k", "3", "--model", model, "--init", init,
                 "--restarts", "2", "--out", str(out), "--report", str(report),
                 "--truth", str(sim2_files["truth.txt"])])
    assert code == 0
    assert read_labels(out, k=3, n=90).size == 90
    document = read_json(report)
    assert 0.0 <= document["h"] <= 1.0
    assert document["max_iters"] == 5


def test_cluster_from_label_file(tmp_path, sim2_files):
    out, report = tmp_path / "labels.txt", tmp_path / "report.json"
    code = main(["cluster", "--data", str(sim2_files["data.csv"]), "--k", "3", "--model", "hetero",
                 "--init", f"file:{sim2_files['truth.txt']}", "--iters", "2", "--out", str(out),
                 "--report", str(report), "--truth", str(sim2_files["truth.txt"])])
    assert code == 0
    document = read_json(report)
    assert document["initial_h"] == 0.0
    assert len(document["h_curve"]) == document["iterations"]


def test_snr_prints_report(capsys, sim2_files):
    assert main(["snr", "--params", str(sim2_files["params.json"])]) == 0
    document = json.loads(capsys.readouterr().out)
    assert document["snr"] is None
    assert document["snr_prime"] > 0.0
    lower, upper = document["snr_prime_bounds"]["0,1"]
    assert lower <= document["snr_pairs"][0][1] <= upper


def test_snr_on_shared_covariance(tmp_path, capsys):
    path = tmp_path / "params.json"
    write_json({"centers": [[0.0, 0.0], [3.0, 4.0]], "covariance": {"kind": "homogeneous",
                                                                      "sigma": [[1.0, 0.0], [0.0, 1.0]]}}, path)
    assert main(["snr", "--params", str(path)]) == 0
    document = json.loads(capsys.readouterr().out)
    assert document["snr"] == pytest.approx(5.0)
    assert document["snr_delta_bounds"] == pytest.approx([5.0, 5.0])


def test_oracle_prints_error(capsys, sim2_files):
    code = main(["oracle", "--params", str(sim2_files["params.json"]), "--pair", "0", "1", "--trials", "2000",
                 "--seed", "4"])
    assert code == 0
    document = json.loads(capsys.readouterr().out)
    assert 0.0 <= document["total_error"] <= 2.0
    assert document["std_error"] >= 0.0
    assert "lda_exact_error" not in document


def test_experiment_writes_curves_and_summary(tmp_path):
    config = tmp_path / "experiment.json"
    write_json({"model_kind": "sim2", "n": 60, "replications": 2, "methods": ["vanilla", "vanilla+alg2"],
                "max_iters": 2, "base_seed": 1, "restarts": 2, "lloyd_iters": 10}, config)
    out = tmp_path / "results" / "curves.csv"
    assert main(["experiment", "--config", str(config), "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 1 + 2 * 3
    summary = read_json(tmp_path / "results" / "curves.csv.json")
    assert summary["completed"] == 2
    assert [r["index"] for r in summary["replications"]] == [0, 1]
    assert all(r["exponent"] == pytest.approx(-r["snr"] ** 2 / 8.0) for r in summary["replications"])
    assert "exponent" not in out.read_text().splitlines()[0]


def test_invalid_input_exit_code(tmp_path, sim2_files):
    code = main(["cluster", "--data", str(sim2_files["data.csv"]), "--k", "0", "--out", str(tmp_path / "z.txt")])
    assert code == 2
    config = tmp_path / "experiment.json"
    write_json({"model_kind": "sim2", "methods": ["vanilla+alg1"]}, config)
    assert main(["experiment", "--config", str(config), "--out", str(tmp_path / "c.csv")]) == 2


def test_missing_file_exit_code(tmp_path):
    assert main(["snr", "--params", str(tmp_path / "missing.json")]) == 4
    assert main(["experiment", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path / "c.csv")]) == 4


def test_bad_arguments_exit_through_argparse():
    with pytest.raises(SystemExit) as info:
        main(["cluster", "--k", "3"])
    assert info.value.code == 2


def test_parser_defaults_come_from_settings(settings_file):
    settings_file.write_text(json.dumps({"seed": 42, "trials": 5000}))
    args = ArgumentHandler.parse_arguments(["oracle", "--params", "p.json", "--pair", "0", "1"])
    assert args.seed == 42
    assert args.trials == 5000
    assert args.rule == "qda"


def test_interactive_prompt_uses_defaults(settings_file, monkeypatch):
    monkeypatch.setattr("builtins.input", lambda prompt: "")
    args = ArgumentHandler.get_arguments([])
    assert args.command == "experiment"
    assert args.inline_config["model_kind"] == "sim1"
    assert args.inline_config["methods"] == argument_handler.DEFAULT_CONFIG["methods"]
    assert not settings_file.exists()


def test_interactive_prompt_saves_changes(settings_file, monkeypatch):
    answers = iter(["sim2", "300", "5", "vanilla,vanilla+alg2", "2", "out/c.csv"])
    monkeypatch.setattr("builtins.input", lambda prompt: next(answers))
    args = ArgumentHandler.get_arguments([])
    assert args.inline_config["methods"] == ["vanilla", "vanilla+alg2"]
    assert args.workers == 2
    assert json.loads(settings_file.read_text())["model_kind"] == "sim2"
