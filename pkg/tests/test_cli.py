import json
import subprocess
import sys

import pytest

from deepconn.cli import (EXIT_CONFIG, EXIT_IO, EXIT_OK, EXIT_VERIFY, main)
from deepconn.train import TrainReport

FAST_MODEL = ["--doc-length", "32", "--hidden-units", "8", "--dense-units", "8",
              "--dropout", "0", "--batch-size", "64"]


def _train_argv(data, emb, out, epochs=1, seed=7, extra=()):
    return (["train", "--data", str(data), "--embeddings", str(emb),
             "--out", str(out), "--epochs", str(epochs), "--seed", str(seed)]
            + FAST_MODEL + list(extra))


class TestStats:
    def test_bundled_fixture_counts(self, sample_reviews_path, capsys):
        assert main(["stats", "--data", str(sample_reviews_path)]) == EXIT_OK
        out = capsys.readouterr().out
        assert "reviews: 1000" in out
        assert "users:   50" in out
        assert "items:   40" in out

    def test_empty_file_reports_zeros(self, tmp_path, capsys):
        empty = tmp_path / "empty.jsonl"
        empty.write_text("")
        assert main(["stats", "--data", str(empty)]) == EXIT_OK
        out = capsys.readouterr().out
        assert "reviews: 0" in out

    def test_unreadable_file_is_io_error(self, tmp_path):
        assert main(["stats", "--data", str(tmp_path / "nope.jsonl")]) == EXIT_IO

    def test_skip_report_goes_to_stderr(self, tmp_path, capsys):
        path = tmp_path / "dirty.jsonl"
        path.write_text('{"reviewerID":"u","asin":"m","reviewText":"x","overall":5}\n'
                        "not json at all\n")
        assert main(["stats", "--data", str(path)]) == EXIT_OK
        captured = capsys.readouterr()
        assert "skipped 1" in captured.err
        assert "reviews: 1" in captured.out


class TestTrain:
    def test_writes_report_curves_checkpoint(self, sample_reviews_path,
                                             toy_embeddings_path, tmp_path, capsys):
        out = tmp_path / "run"
        code = main(_train_argv(sample_reviews_path, toy_embeddings_path, out))
        assert code == EXIT_OK
        assert (out / "report.json").exists()
        assert (out / "curves.csv").exists()
        assert (out / "model.ckpt").exists()
        report = TrainReport.from_json((out / "report.json").read_text())
        assert len(report.epochs) == 1
        assert report.test_mse is not None
        assert report.config["run"]["seed"] == 7

    def test_identical_flags_identical_csvs(self, sample_reviews_path,
                                            toy_embeddings_path, tmp_path, capsys):
        outs = [tmp_path / "a", tmp_path / "b"]
        for out in outs:
            code = main(_train_argv(sample_reviews_path, toy_embeddings_path,
                                    out, epochs=2, extra=["--no-timing"]))
            assert code == EXIT_OK
        assert (outs[0] / "curves.csv").read_bytes() == \
            (outs[1] / "curves.csv").read_bytes()
        assert (outs[0] / "report.json").read_bytes() == \
            (outs[1] / "report.json").read_bytes()

    def test_zero_epochs_is_validation_only(self, sample_reviews_path,
                                            toy_embeddings_path, tmp_path, capsys):
        out = tmp_path / "run0"
        code = main(_train_argv(sample_reviews_path, toy_embeddings_path,
                                out, epochs=0))
        assert code == EXIT_OK
        report = TrainReport.from_json((out / "report.json").read_text())
        assert report.epochs == []
        assert report.optimizer_steps == 0
        assert report.test_mse is not None  # untrained-model evaluation

    def test_invalid_config_lists_every_field(self, sample_reviews_path,
                                              toy_embeddings_path, tmp_path, capsys):
        code = main(["train", "--data", str(sample_reviews_path),
                     "--embeddings", str(toy_embeddings_path),
                     "--out", str(tmp_path / "x"),
                     "--train-fraction", "1.5", "--lr", "-2",
                     "--batch-size", "0", "--doc-length", "0"])
        assert code == EXIT_CONFIG
        err = capsys.readouterr().err
        for field in ("--train-fraction", "--lr", "--batch-size", "--doc-length"):
            assert field in err

    def test_grid_tags_echoed(self, sample_reviews_path, toy_embeddings_path,
                              tmp_path, capsys):
        out = tmp_path / "gru_run"
        code = main(_train_argv(sample_reviews_path, toy_embeddings_path, out,
                                extra=["--tower", "gru", "--dropout", "0.1"]))
        assert code == EXIT_OK
        report = json.loads((out / "report.json").read_text())
        assert report["config"]["run"]["tower"] == "gru"
        assert report["config"]["model"]["tower"]["dropout_rate"] == 0.1
        assert "gru | 50d |" in capsys.readouterr().out


class TestEvaluate:
    def test_round_trip_reproduces_test_mse(self, sample_reviews_path,
                                            toy_embeddings_path, tmp_path, capsys):
        out = tmp_path / "run"
        assert main(_train_argv(sample_reviews_path, toy_embeddings_path,
                                out)) == EXIT_OK
        report = TrainReport.from_json((out / "report.json").read_text())
        capsys.readouterr()
        code = main(["evaluate", "--checkpoint", str(out / "model.ckpt"),
                     "--data", str(sample_reviews_path),
                     "--embeddings", str(toy_embeddings_path),
                     "--doc-length", "32", "--seed", "7"])
        assert code == EXIT_OK
        printed = capsys.readouterr().out
        assert f"test MSE: {report.test_mse:.6f}" in printed
        assert "global-mean reference" in printed

    def test_corrupted_checkpoint_is_io_error(self, sample_reviews_path,
                                              toy_embeddings_path, tmp_path, capsys):
        bad = tmp_path / "bad.ckpt"
        bad.write_bytes(b"garbage")
        code = main(["evaluate", "--checkpoint", str(bad),
                     "--data", str(sample_reviews_path),
                     "--embeddings", str(toy_embeddings_path)])
        assert code == EXIT_IO

    def test_dim_mismatch_is_config_error(self, sample_reviews_path,
                                          toy_embeddings_path, tmp_path, capsys):
        out = tmp_path / "run"
        assert main(_train_argv(sample_reviews_path, toy_embeddings_path,
                                out)) == EXIT_OK
        code = main(["evaluate", "--checkpoint", str(out / "model.ckpt"),
                     "--data", str(sample_reviews_path),
                     "--embeddings", str(toy_embeddings_path),
                     "--dim", "100"])
        assert code == EXIT_CONFIG


class TestBaseline:
    def test_runs_and_is_deterministic(self, sample_reviews_path, capsys):
        outputs = []
        for _ in range(2):
            assert main(["baseline", "--data", str(sample_reviews_path),
                         "--seed", "3"]) == EXIT_OK
            outputs.append(capsys.readouterr().out)
        assert outputs[0] == outputs[1]
        assert "item-cf test MSE:" in outputs[0]

    def test_k_must_be_positive(self, sample_reviews_path, capsys):
        assert main(["baseline", "--data", str(sample_reviews_path),
                     "--k", "0"]) == EXIT_CONFIG

    def test_export_sims_writes_text_table(self, sample_reviews_path,
                                           tmp_path, capsys):
        dest = tmp_path / "sims.txt"
        assert main(["baseline", "--data", str(sample_reviews_path),
                     "--export-sims", str(dest)]) == EXIT_OK
        table = dest.read_text()
        assert "item000" in table
        assert "1.0000" in table  # diagonal


class TestCompare:
    def test_prints_all_three_rows(self, sample_reviews_path,
                                   toy_embeddings_path, tmp_path, capsys):
        code = main(["compare", "--data", str(sample_reviews_path),
                     "--embeddings", str(toy_embeddings_path),
                     "--out", str(tmp_path / "cmp"), "--epochs", "1",
                     "--seed", "5"] + FAST_MODEL)
        assert code == EXIT_OK
        out = capsys.readouterr().out
        assert "deepconn-dp" in out
        assert "item-cf" in out
        assert "global-mean" in out


class TestGradcheckCommand:
    def test_pristine_build_passes(self, capsys):
        assert main(["gradcheck"]) == EXIT_OK
        out = capsys.readouterr().out
        assert out.count("PASS") == 11 and "FAIL" not in out

    def test_corrupted_hook_fails_at_five_percent(self, capsys):
        assert main(["gradcheck", "--corrupt-gradients"]) == EXIT_VERIFY
        out = capsys.readouterr().out
        assert "FAIL" in out
        assert "4.76" in out  # 0.1 / 2.1 relative error

    def test_threshold_flag(self, capsys):
        # absurdly loose threshold lets even corrupted gradients pass
        assert main(["gradcheck", "--corrupt-gradients",
                     "--threshold", "0.5"]) == EXIT_OK


class TestExportCurves:
    def test_round_trip_equals_original(self, sample_reviews_path,
                                        toy_embeddings_path, tmp_path, capsys):
        out = tmp_path / "run"
        assert main(_train_argv(sample_reviews_path, toy_embeddings_path, out,
                                epochs=2, extra=["--no-timing"])) == EXIT_OK
        dest = tmp_path / "again.csv"
        assert main(["export-curves", "--report", str(out / "report.json"),
                     "--out", str(dest)]) == EXIT_OK
        assert dest.read_bytes() == (out / "curves.csv").read_bytes()


class TestConfigFile:
    def test_config_supplies_defaults_flags_override(self, sample_reviews_path,
                                                     toy_embeddings_path,
                                                     tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"epochs": 1, "seed": 11, "doc_length": 32,
                                   "hidden_units": 8, "dense_units": 8,
                                   "dropout": 0.0, "no_timing": True}))
        out = tmp_path / "run"
        code = main(["--config", str(cfg), "train",
                     "--data", str(sample_reviews_path),
                     "--embeddings", str(toy_embeddings_path),
                     "--out", str(out), "--seed", "3"])  # flag beats config
        assert code == EXIT_OK
        report = TrainReport.from_json((out / "report.json").read_text())
        assert report.seed == 3
        assert report.config["run"]["doc_length"] == 32
        assert len(report.epochs) == 1

    def test_unknown_config_key_rejected(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"warp_speed": 9}))
        assert main(["--config", str(cfg), "gradcheck"]) == EXIT_CONFIG
        assert "warp_speed" in capsys.readouterr().err


def test_console_entry_point_runs(sample_reviews_path):
    proc = subprocess.run([sys.executable, "-m", "deepconn.cli", "stats",
                           "--data", str(sample_reviews_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "reviews: 1000" in proc.stdout
