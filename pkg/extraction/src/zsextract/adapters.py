"""Provider adapters: the narrow seams between pretrained models and the
pipeline.

Three adapter shapes cover every model this pipeline touches:

* sentence embedder — text in, vector out (``encode``),
* object recognizer — frames in, logits out (``logits``), with a fixed
  label list,
* caption provider — frames in, one descriptive sentence out
  (``describe``), possibly nothing.

Definition sources map an object label to a definition sentence (first
sense by default, per-label overrides supported).

The reference adapters below are fully deterministic and dependency-free
so the pipeline can be exercised and tested without model weights; the
wrappers for real pretrained models import their libraries lazily and
are exercised only when those models are installed and downloaded.
"""

import hashlib
from typing import Optional, Protocol, Sequence, runtime_checkable

import numpy as np


@runtime_checkable
class SentenceEmbedder(Protocol):
    dim: int

    def encode(self, texts: Sequence[str]) -> np.ndarray:
        """Return one float32 row per input text, shape (len(texts), dim)."""


@runtime_checkable
class ObjectRecognizer(Protocol):
    labels: Sequence[str]

    def logits(self, frames: np.ndarray) -> np.ndarray:
        """Per-frame class logits, shape (frames, len(labels))."""


@runtime_checkable
class CaptionProvider(Protocol):
    name: str

    def describe(self, frames: np.ndarray) -> Optional[str]:
        """One descriptive sentence for the clip, or None when unavailable."""


class DefinitionSource(Protocol):
    def lookup(self, label: str) -> Optional[str]:
        """Definition sentence for an object label, or None if unknown."""


# ---------------------------------------------------------------------------
# deterministic reference adapters (no model weights required)


def _seed_from_text(text):
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


class HashingSentenceEmbedder:
    """Deterministic stand-in embedder: a seeded unit vector per text.

    Identical strings map to identical rows; different strings are nearly
    orthogonal in high dimensions.  No semantic structure, which is fine
    for format and plumbing tests.
    """

    def __init__(self, dim=32):
        self.dim = dim

    def encode(self, texts):
        rows = np.empty((len(texts), self.dim), dtype=np.float32)
        for i, text in enumerate(texts):
            rng = np.random.default_rng(_seed_from_text(text))
            vec = rng.standard_normal(self.dim)
            rows[i] = (vec / np.linalg.norm(vec)).astype(np.float32)
        return rows


class FrameStatRecognizer:
    """Deterministic stand-in recognizer: logits from frame statistics.

    Block-mean pixel features are projected to the label space with a
    seeded fixed matrix, so identical frames always yield identical
    logits.
    """

    def __init__(self, labels, seed=0, grid=4):
        self.labels = list(labels)
        self.grid = grid
        rng = np.random.default_rng(seed)
        self._projection = rng.standard_normal((grid * grid, len(self.labels)))

    def _features(self, frame):
        gray = np.asarray(frame, dtype=np.float64).mean(axis=2)
        h, w = gray.shape
        cells = []
        for r in range(self.grid):
            for c in range(self.grid):
                block = gray[r * h // self.grid:(r + 1) * h // self.grid,
                             c * w // self.grid:(c + 1) * w // self.grid]
                cells.append(block.mean() / 255.0)
        return np.asarray(cells)

    def logits(self, frames):
        feats = np.stack([self._features(f) for f in frames])
        return (feats @ self._projection).astype(np.float32)


class TemplateCaptioner:
    """Deterministic stand-in captioner describing coarse frame statistics."""

    def __init__(self, name="template"):
        self.name = name

    def describe(self, frames):
        mean = float(np.asarray(frames, dtype=np.float64).mean())
        bucket = "bright" if mean > 127 else "dark"
        return (f"{self.name} sees a {bucket} clip of {len(frames)} sampled "
                f"frames with mean intensity {int(mean)}")


class SilentCaptioner:
    """Captioner that never produces output; used to exercise fallbacks."""

    def __init__(self, name="silent"):
        self.name = name

    def describe(self, frames):
        return None


class StaticDefinitionSource:
    """Definitions from a mapping of label -> sense list (or one string).

    The first sense is used unless ``sense_overrides`` picks another; a
    curated override table is how ambiguous labels get pinned to the
    intended sense.
    """

    def __init__(self, senses, sense_overrides=None):
        self._senses = {
            label: [value] if isinstance(value, str) else list(value)
            for label, value in senses.items()
        }
        self._overrides = dict(sense_overrides or {})

    def lookup(self, label):
        senses = self._senses.get(label)
        if not senses:
            return None
        index = self._overrides.get(label, 0)
        if not 0 <= index < len(senses):
            raise KeyError(
                f"sense override {index} out of range for {label!r} "
                f"({len(senses)} senses)")
        return senses[index]


# ---------------------------------------------------------------------------
# wrappers for real pretrained models (imported lazily, not covered by
# the test suite: they need downloaded weights/corpora)


class SentenceTransformerEmbedder:
    """Paraphrase sentence embedder via the sentence-transformers library."""

    def __init__(self, model_name="paraphrase-distilroberta-base-v2"):
        from sentence_transformers import SentenceTransformer
        self._model = SentenceTransformer(model_name)
        self.dim = int(self._model.get_sentence_embedding_dimension())

    def encode(self, texts):
        return np.asarray(self._model.encode(list(texts)), dtype=np.float32)


class TorchvisionRecognizer:
    """Image-object recognizer via a torchvision classification model."""

    def __init__(self, model_name="resnet152", device="cpu"):
        import torch
        from torchvision import models
        weights = models.get_model_weights(model_name).DEFAULT
        self._model = models.get_model(model_name, weights=weights)
        self._model.eval().to(device)
        self._preprocess = weights.transforms()
        self._device = device
        self._torch = torch
        self.labels = list(weights.meta["categories"])

    def logits(self, frames):
        torch = self._torch
        with torch.no_grad():
            batch = torch.stack([
                self._preprocess(torch.from_numpy(f.copy()).permute(2, 0, 1))
                for f in frames
            ]).to(self._device)
            return self._model(batch).cpu().numpy().astype(np.float32)


class WordNetDefinitionSource:
    """First-sense WordNet gloss lookup (requires the nltk corpus)."""

    def __init__(self, sense_overrides=None):
        from nltk.corpus import wordnet
        self._wordnet = wordnet
        self._overrides = dict(sense_overrides or {})

    def lookup(self, label):
        synsets = self._wordnet.synsets(label.replace(" ", "_"))
        if not synsets:
            return None
        index = self._overrides.get(label, 0)
        if index >= len(synsets):
            return None
        return synsets[index].definition()
