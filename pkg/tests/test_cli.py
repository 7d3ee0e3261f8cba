import io
import json
import subprocess
import sys

import numpy as np
import pytest

from conftest import CLASS_HEADER, class_rows, write_csv
from toxscore import cli
from toxscore.cleaning import CleanMode
from toxscore.models import LinearModel
from toxscore.persistence import BundleMetadata, ModelBundle, load_bundle, save_bundle
from toxscore.pipeline import score_text
from toxscore.vectorizer import Analyzer, Vocabulary, VectorizerConfig


def run_cli(args, capsys):
    code = cli.main(args)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestEda:
    def test_writes_fixed_keys(self, tmp_path, class_csv, capsys):
        out = tmp_path / "stats.json"
        code, stdout, _ = run_cli(
            ["eda", "--schema", "class", "--data", str(class_csv), "--out", str(out)],
            capsys)
        assert code == 0
        payload = json.loads(out.read_text())
        assert set(payload) >= {"label_counts", "tags_histogram", "correlation",
                                "length_quantiles"}
        assert sum(payload["tags_histogram"].values()) == 100

    def test_empty_after_header_fails_nonzero(self, tmp_path, capsys):
        empty = write_csv(tmp_path / "empty.csv", CLASS_HEADER, [])
        code, _, err = run_cli(
            ["eda", "--schema", "class", "--data", str(empty),
             "--out", str(tmp_path / "x.json")], capsys)
        assert code != 0
        assert "toxscore:" in err


class TestClean:
    def test_line_mode_round_trip(self, tmp_path, capsys):
        src = tmp_path / "in.txt"
        src.write_text("HELLO!!!\nsee http://x.y NOW\n", encoding="utf-8")
        dst = tmp_path / "out.txt"
        code, _, _ = run_cli(["clean", "--mode", "1", "--in", str(src),
                              "--out", str(dst)], capsys)
        assert code == 0
        assert dst.read_text().splitlines() == ["hello!", "see now"]

    def test_csv_passthrough_cleans_one_column(self, tmp_path, capsys):
        src = write_csv(tmp_path / "in.csv", ["id", "comment_text", "toxic"],
                        [["a", "WOW!!!", 1], ["b", "ok", 0]])
        dst = tmp_path / "out.csv"
        code, _, _ = run_cli(["clean", "--mode", "1", "--in", str(src),
                              "--out", str(dst), "--csv-column", "comment_text"],
                             capsys)
        assert code == 0
        lines = dst.read_text().splitlines()
        assert lines[0] == "id,comment_text,toxic"
        assert lines[1] == "a,wow!,1"
        assert lines[2] == "b,ok,0"

    def test_dump_rules(self, capsys):
        code, out, _ = run_cli(["clean", "--dump-rules"], capsys)
        assert code == 0
        assert "rules-version" in out
        assert "[clean0]" in out and "[clean1]" in out


class TestTrain:
    def test_hundred_row_fixture_yields_loadable_bundle(self, tmp_path, class_csv,
                                                        capsys):
        out = tmp_path / "m.toxb"
        code, stdout, _ = run_cli(
            ["train", "--schema", "class", "--data", str(class_csv),
             "--clean", "0", "--preset", "tfidf2", "--model-kind", "ridge",
             "--out", str(out), "--created-at", "2024-02-02T00:00:00+00:00"],
            capsys)
        assert code == 0
        bundle = load_bundle(out)
        assert bundle.clean_mode is CleanMode.CLEAN0
        assert "saved bundle" in stdout

    def test_same_invocation_is_byte_identical(self, tmp_path, class_csv, capsys):
        args = ["train", "--schema", "class", "--data", str(class_csv),
                "--clean", "1", "--preset", "tfidf2", "--model-kind", "svr",
                "--epochs", "2", "--created-at", "2024-02-02T00:00:00+00:00"]
        out_a, out_b = tmp_path / "a.toxb", tmp_path / "b.toxb"
        assert run_cli(args + ["--out", str(out_a)], capsys)[0] == 0
        assert run_cli(args + ["--out", str(out_b)], capsys)[0] == 0
        assert out_a.read_bytes() == out_b.read_bytes()

    def test_unknown_preset_is_usage_error_listing_choices(self, tmp_path, class_csv,
                                                           capsys):
        with pytest.raises(SystemExit) as excinfo:
            cli.main(["train", "--schema", "class", "--data", str(class_csv),
                      "--preset", "tfidf9", "--model-kind", "ridge",
                      "--out", str(tmp_path / "x.toxb")])
        assert excinfo.value.code == 2
        err = capsys.readouterr().err
        assert "tfidf0" in err and "tfidf3" in err


def _oracle_bundle(tmp_path):
    """Scores: 'omega' counts, everything else is 0."""
    config = VectorizerConfig(Analyzer.WORD, 1, 1, min_df=1, max_df=1.0)
    vocab = Vocabulary(config, ["alpha", "omega"], [1, 1], 2)
    model = LinearModel(np.array([0.0, 1.0]), 0.0)
    bundle = ModelBundle(CleanMode.CLEAN0, vocab, model,
                         BundleMetadata("class", 1, "2024-01-01T00:00:00+00:00"))
    path = tmp_path / "oracle.toxb"
    save_bundle(bundle, path)
    return path


def _constant_bundle(tmp_path):
    config = VectorizerConfig(Analyzer.WORD, 1, 1, min_df=1, max_df=1.0)
    vocab = Vocabulary(config, ["alpha"], [1], 2)
    model = LinearModel(np.array([0.0]), 0.7)
    bundle = ModelBundle(CleanMode.CLEAN0, vocab, model,
                         BundleMetadata("class", 1, "2024-01-01T00:00:00+00:00"))
    path = tmp_path / "const.toxb"
    save_bundle(bundle, path)
    return path


class TestEval:
    def _pairs(self, tmp_path):
        return write_csv(tmp_path / "p.csv", ["worker", "less_toxic", "more_toxic"],
                         [["w", "alpha text", "omega text"]] * 6)

    def test_oracle_bundle_scores_one(self, tmp_path, capsys):
        code, out, _ = run_cli(["eval", "--bundle", str(_oracle_bundle(tmp_path)),
                                "--pairs", str(self._pairs(tmp_path))], capsys)
        assert code == 0
        assert "accuracy 1.0000" in out
        assert "accuracy,ties,pairs\n1.000000,0,6" in out

    def test_constant_bundle_all_ties(self, tmp_path, capsys):
        code, out, _ = run_cli(["eval", "--bundle", str(_constant_bundle(tmp_path)),
                                "--pairs", str(self._pairs(tmp_path))], capsys)
        assert code == 0
        assert "accuracy 0.5000" in out
        assert "0.500000,6,6" in out

    def test_missing_pairs_file_exits_two(self, tmp_path, capsys):
        code, _, err = run_cli(["eval", "--bundle", str(_oracle_bundle(tmp_path)),
                                "--pairs", str(tmp_path / "nope.csv")], capsys)
        assert code == 2
        assert "file not found" in err

    def test_csv_flag_writes_file(self, tmp_path, capsys):
        out_csv = tmp_path / "result.csv"
        code, _, _ = run_cli(["eval", "--bundle", str(_oracle_bundle(tmp_path)),
                              "--pairs", str(self._pairs(tmp_path)),
                              "--csv", str(out_csv)], capsys)
        assert code == 0
        assert out_csv.read_text().startswith("accuracy,ties,pairs")


class TestGrid:
    def test_single_cell_run_writes_csv(self, tmp_path, class_csv, pairs_csv, capsys):
        out_csv = tmp_path / "grid.csv"
        code, out, _ = run_cli(
            ["grid", "--pairs", str(pairs_csv), "--class-data", str(class_csv),
             "--clean", "0", "--presets", "tfidf2", "--models", "ridge",
             "--limit", "80", "--out-csv", str(out_csv)], capsys)
        assert code == 0
        lines = out_csv.read_text().splitlines()
        assert lines[0] == "dataset,clean,preset,model,accuracy,ties,train_seconds"
        assert len(lines) == 2
        assert "per-model mean accuracy" in out

    def test_grid_without_datasets_errors(self, tmp_path, pairs_csv, capsys):
        code, _, err = run_cli(["grid", "--pairs", str(pairs_csv)], capsys)
        assert code == 1
        assert "at least one dataset" in err


class TestScoreRepl:
    def test_reads_stdin_lines_and_prints_bands(self, tmp_path, capsys, monkeypatch):
        path = _constant_bundle(tmp_path)
        monkeypatch.setattr(sys, "stdin", io.StringIO("anything\nanything\n\n"))
        code, out, _ = run_cli(["score", "--model", str(path)], capsys)
        assert code == 0
        lines = out.splitlines()
        assert lines == ["0.7000\thigh"] * 3  # constant model: same score everywhere
        assert code == 0

    def test_raw_mode_prints_full_precision(self, tmp_path, capsys, monkeypatch):
        path = _oracle_bundle(tmp_path)
        monkeypatch.setattr(sys, "stdin", io.StringIO("omega\n"))
        code, out, _ = run_cli(["score", "--model", str(path), "--raw"], capsys)
        assert code == 0
        bundle = load_bundle(path)
        assert out.strip() == repr(score_text(bundle, "omega").score)

    def test_env_var_overrides_model_flag(self, tmp_path, capsys, monkeypatch):
        env_path = _constant_bundle(tmp_path)
        monkeypatch.setenv("TOXSCORE_MODEL", str(env_path))
        monkeypatch.setattr(sys, "stdin", io.StringIO("x\n"))
        code, out, _ = run_cli(["score", "--model", str(tmp_path / "missing.toxb")],
                               capsys)
        assert code == 0
        assert out.startswith("0.7000")

    def test_missing_model_is_usage_error(self, capsys, monkeypatch):
        monkeypatch.delenv("TOXSCORE_MODEL", raising=False)
        with pytest.raises(SystemExit) as excinfo:
            cli.main(["score"])
        assert excinfo.value.code == 2

    def test_repl_subprocess_end_to_end(self, tmp_path, fixture_bundle_path):
        proc = subprocess.run(
            [sys.executable, "-m", "toxscore.cli", "score", "--model",
             str(fixture_bundle_path)],
            input="great article thanks\ngreat article thanks\n",
            capture_output=True, text=True, timeout=60)
        assert proc.returncode == 0
        lines = proc.stdout.splitlines()
        assert len(lines) == 2
        assert lines[0] == lines[1]
        score, band = lines[0].split("\t")
        float(score)
        assert band in {"low", "medium", "high"}


class TestBadBundles:
    def test_corrupt_bundle_is_runtime_error(self, tmp_path, capsys):
        path = _oracle_bundle(tmp_path)
        data = bytearray(path.read_bytes())
        data[10] ^= 0xFF
        path.write_bytes(bytes(data))
        code, _, err = run_cli(["eval", "--bundle", str(path),
                                "--pairs", str(tmp_path / "p.csv")], capsys)
        assert code == 1
        assert "checksum" in err
