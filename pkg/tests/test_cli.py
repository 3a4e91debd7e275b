import csv
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest


def run_cli(*args, cwd=None):
    return subprocess.run([sys.executable, "-m", "zsaction", *map(str, args)],
                          capture_output=True, text=True, cwd=cwd)


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """Small workspace plus affinity and model built through the CLI."""
    root = tmp_path_factory.mktemp("cli")
    ws = root / "ws"
    result = run_cli("fixture", "generate", "--seed", 1, "--objects", 20,
                     "--actions", 8, "--dim", 16, "--videos", 64, "--out", ws)
    assert result.returncode == 0, result.stderr
    affinity = root / "aff.zsem"
    result = run_cli("affinity", "build", "--workspace", ws / "manifest.json",
                     "--top", 10, "--out", affinity)
    assert result.returncode == 0, result.stderr
    model = root / "model.zsem"
    result = run_cli("train-sentences", "--workspace", ws / "manifest.json",
                     "--epochs", 60, "--seed", 2, "--out", model)
    assert result.returncode == 0, result.stderr
    return root, ws / "manifest.json", affinity, model


class TestPipeline:
    def test_artifacts_exist(self, pipeline):
        root, manifest, affinity, model = pipeline
        assert manifest.exists()
        assert affinity.exists()
        assert Path(str(affinity) + ".meta.json").exists()
        assert model.exists()
        meta = json.loads(Path(str(model) + ".meta.json").read_text())
        assert meta["config"]["epochs"] == 60
        assert "threads" not in meta["config"]

    def test_score_objects(self, pipeline, tmp_path):
        root, manifest, affinity, model = pipeline
        out = tmp_path / "obj.csv"
        result = run_cli("score", "objects", "--workspace", manifest,
                         "--affinity", affinity, "--top-objects", 10,
                         "--out", out)
        assert result.returncode == 0, result.stderr
        with open(out) as handle:
            rows = list(csv.reader(handle))
        assert rows[0][0] == "video_id"
        assert len(rows[0]) == 1 + 8
        assert len(rows) == 1 + 64

    def test_score_sentences(self, pipeline, tmp_path):
        root, manifest, affinity, model = pipeline
        out = tmp_path / "sent.csv"
        result = run_cli("score", "sentences", "--model", model,
                         "--workspace", manifest, "--top-actions", 3,
                         "--out", out)
        assert result.returncode == 0, result.stderr
        with open(out) as handle:
            rows = list(csv.reader(handle))
        scores = np.array([[float(v) for v in row[1:]] for row in rows[1:]])
        assert (np.count_nonzero(scores, axis=1) <= 3).all()

    def test_classify_and_reproducibility(self, pipeline, tmp_path):
        root, manifest, affinity, model = pipeline
        out1 = tmp_path / "p1.csv"
        out2 = tmp_path / "p2.csv"
        for out in (out1, out2):
            result = run_cli("classify", "--workspace", manifest, "--model",
                             model, "--affinity", affinity, "--mode", "fused",
                             "--top-objects", 10, "--top-actions", 3,
                             "--out", out)
            assert result.returncode == 0, result.stderr
        assert out1.read_bytes() == out2.read_bytes()
        with open(out1) as handle:
            rows = list(csv.reader(handle))
        assert rows[0][:3] == ["video_id", "true_label", "predicted_label"]
        predicted = [row[2] for row in rows[1:]]
        assert all(p.startswith("action_") for p in predicted)

    def test_evaluate_report(self, pipeline, tmp_path):
        root, manifest, affinity, model = pipeline
        report = tmp_path / "report"
        result = run_cli("evaluate", "--workspace", manifest, "--runs", 6,
                         "--unseen", 4, "--seed", 0, "--mode", "fused",
                         "--top-objects", 10, "--top-actions", 3,
                         "--top-affinity", 10, "--report", report)
        assert result.returncode == 0, result.stderr
        summary = json.loads((report / "summary.json").read_text())
        assert summary["runs"] == 6
        assert 0.0 <= summary["mean_accuracy"] <= 1.0
        assert summary["config"]["mode"] == "fused"
        assert (report / "per_class.csv").exists()

    def test_evaluate_split_file(self, pipeline, tmp_path):
        root, manifest, affinity, model = pipeline
        split_file = tmp_path / "split.json"
        split_file.write_text(json.dumps([["action_00", "action_01", "action_02"]]))
        report = tmp_path / "report"
        result = run_cli("evaluate", "--workspace", manifest,
                         "--split-file", split_file, "--mode", "fused",
                         "--top-objects", 10, "--top-actions", 3,
                         "--top-affinity", 10, "--report", report)
        assert result.returncode == 0, result.stderr
        summary = json.loads((report / "summary.json").read_text())
        assert summary["runs"] == 1

    def test_affinity_build_reproducible(self, pipeline, tmp_path):
        root, manifest, affinity, model = pipeline
        out1 = tmp_path / "a1.zsem"
        out2 = tmp_path / "a2.zsem"
        for out in (out1, out2):
            result = run_cli("affinity", "build", "--workspace", manifest,
                             "--top", 7, "--out", out)
            assert result.returncode == 0, result.stderr
        assert out1.read_bytes() == out2.read_bytes()
        meta1 = Path(str(out1) + ".meta.json").read_text()
        meta2 = Path(str(out2) + ".meta.json").read_text()
        assert meta1 == meta2


class TestConfigFile:
    def test_config_supplies_defaults_flags_win(self, pipeline, tmp_path):
        root, manifest, affinity, model = pipeline
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"epochs": 3, "seed": 11}))
        out = tmp_path / "m1.zsem"
        result = run_cli("train-sentences", "--workspace", manifest,
                         "--config", config, "--out", out)
        assert result.returncode == 0, result.stderr
        meta = json.loads(Path(str(out) + ".meta.json").read_text())
        assert meta["training"]["epochs"] == 3
        assert meta["training"]["seed"] == 11
        out2 = tmp_path / "m2.zsem"
        result = run_cli("train-sentences", "--workspace", manifest,
                         "--config", config, "--epochs", 5, "--out", out2)
        assert result.returncode == 0, result.stderr
        meta2 = json.loads(Path(str(out2) + ".meta.json").read_text())
        assert meta2["training"]["epochs"] == 5
        assert meta2["training"]["seed"] == 11


class TestExitCodes:
    def test_unknown_subcommand_usage(self):
        result = run_cli("transmogrify")
        assert result.returncode == 2
        assert "usage" in result.stderr.lower()

    def test_unknown_flag_usage(self, pipeline):
        root, manifest, affinity, model = pipeline
        result = run_cli("affinity", "build", "--workspace", manifest,
                         "--frobnicate", 1, "--out", "x.zsem")
        assert result.returncode == 2

    def test_missing_manifest(self, tmp_path):
        result = run_cli("affinity", "build", "--workspace",
                         tmp_path / "absent.json", "--top", 5,
                         "--out", tmp_path / "a.zsem")
        assert result.returncode == 3
        assert "[missing-file]" in result.stderr

    def test_malformed_matrix_file(self, pipeline, tmp_path):
        root, manifest, affinity, model = pipeline
        bad = tmp_path / "bad.zsem"
        bad.write_bytes(b"not a matrix at all")
        result = run_cli("classify", "--workspace", manifest, "--model", model,
                         "--affinity", bad, "--mode", "fused",
                         "--out", tmp_path / "p.csv")
        assert result.returncode == 4
        assert "[format]" in result.stderr

    def test_invariant_violation(self, pipeline, tmp_path):
        root, manifest, affinity, model = pipeline
        result = run_cli("evaluate", "--workspace", manifest, "--runs", 2,
                         "--unseen", 200, "--report", tmp_path / "rep")
        assert result.returncode == 5
        assert "[invariant]" in result.stderr
        assert len(result.stderr.strip().splitlines()) == 1

    def test_divergence_exit_code(self, tmp_path):
        import zsaction
        ws = zsaction.generate_fixture(0, 4, 2, 4, 4, sentences_per_class=4)
        huge = np.full_like(np.asarray(ws.action_vocab.sentence_embeddings), 1e38)
        vocab = zsaction.ActionVocabulary(
            ws.action_vocab.labels, ws.action_vocab.sentences,
            ws.action_vocab.class_embeddings, huge.astype(np.float32),
            ws.action_vocab.sentence_class_index)
        bad_ws = zsaction.Workspace(ws.object_vocab, vocab, ws.videos, ws.dim)
        manifest = zsaction.save_workspace(bad_ws, tmp_path / "ws")
        result = run_cli("train-sentences", "--workspace", manifest,
                         "--lr", "1e250", "--epochs", 2,
                         "--out", tmp_path / "m.zsem")
        assert result.returncode == 6
        assert "[divergence]" in result.stderr

    def test_help_lists_defaults(self):
        result = run_cli("evaluate", "--help")
        assert result.returncode == 0
        assert "default: 50" in result.stdout  # runs
        assert "default: 5" in result.stdout  # top actions
        assert "--top-affinity" in result.stdout

    def test_version(self):
        result = run_cli("--version")
        assert result.returncode == 0
        assert "zsaction" in result.stdout
