"""Format-conformance acceptance: everything this package emits must load
through the engine's own loaders with zero warnings, and 1-per-second
sampling must yield floor(duration) frame rows."""

import json
import math
import subprocess
import sys
import warnings
from pathlib import Path

import pytest

import zsaction
from zsextract import (ExtractionJob, FrameStatRecognizer,
                       HashingSentenceEmbedder, StaticDefinitionSource,
                       TemplateCaptioner, run_job)

from conftest import SMOKE_DURATIONS

OBJECT_LABELS = [f"prop_{i}" for i in range(8)]
ACTION_SENTENCES = {
    "spin": ["a person spins in place", "someone rotates quickly",
             "a performer twirls"],
    "wave": ["a person waves both arms", "someone waves at the camera",
             "hands wave in greeting"],
    "jump": ["a person jumps repeatedly", "someone hops on the spot",
             "a quick vertical jump"],
}
DEFINITIONS = {label: f"a {label} held by the performer"
               for label in OBJECT_LABELS}


@pytest.fixture(scope="module")
def extracted(smoke_corpus, tmp_path_factory):
    out_dir = tmp_path_factory.mktemp("extracted")
    job = ExtractionJob(videos=dict(smoke_corpus),
                        object_labels=list(OBJECT_LABELS),
                        action_sentences=dict(ACTION_SENTENCES),
                        out_dir=out_dir,
                        video_labels={"clip_a": "spin", "clip_b": "wave",
                                      "clip_c": "jump"})
    manifest_path, _, _ = run_job(
        job, FrameStatRecognizer(OBJECT_LABELS),
        StaticDefinitionSource(DEFINITIONS), HashingSentenceEmbedder(24),
        [TemplateCaptioner("one"), TemplateCaptioner("two"),
         TemplateCaptioner("three")])
    return manifest_path


def report(name, ok, detail=""):
    suffix = f" ({detail})" if detail else ""
    print(f"\n[acceptance] {name}: {'PASS' if ok else 'FAIL'}{suffix}", flush=True)
    return ok


def test_every_emitted_file_loads_with_zero_warnings(extracted):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        workspace = zsaction.load_workspace(extracted)
        affinity = zsaction.compute_affinity(workspace.object_vocab,
                                             workspace.action_vocab)
    ok = not caught
    report("format-conformance", ok,
           f"workspace + affinity loaded, {len(caught)} warnings")
    assert ok, [str(w.message) for w in caught]
    assert workspace.object_count == len(OBJECT_LABELS)
    assert workspace.action_count == len(ACTION_SENTENCES)
    assert workspace.dim == 24
    assert affinity.values.shape == (8, 3)
    assert len(workspace.videos) == 3


def test_smoke_corpus_frame_counts(extracted):
    workspace = zsaction.load_workspace(extracted)
    expected = {vid: math.floor(duration)
                for vid, duration in SMOKE_DURATIONS.items()}
    actual = {video.video_id: video.frame_logits.shape[0]
              for video in workspace.videos}
    ok = actual == expected
    report("one-per-second-rule", ok, f"frame rows {actual}")
    assert ok


def test_engine_cli_consumes_manifest(extracted, tmp_path):
    out = tmp_path / "affinity.zsem"
    result = subprocess.run(
        [sys.executable, "-m", "zsaction", "affinity", "build", "--workspace",
         str(extracted), "--top", "4", "--out", str(out)],
        capture_output=True, text=True)
    ok = result.returncode == 0 and out.exists()
    report("engine-cli-interop", ok, f"exit {result.returncode}")
    assert ok, result.stderr


def test_caption_texts_round_trip(extracted):
    manifest = json.loads(Path(extracted).read_text())
    for entry in manifest["videos"]:
        assert len(entry["captions"]) == 3
        assert all(isinstance(text, str) and text for text in entry["captions"])
