"""Sentence pathway: a supervised classifier over sentence embeddings.

The model is a single affine map followed by GeLU and softmax, trained
with mini-batch gradient descent on the soft-labeled description
sentences (every sentence carries the label of the class it was
collected for).  At inference a video's caption embeddings are scored
row by row and the probability vectors averaged.
"""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import kernels
from .affinity import sidecar
from .errors import (DimensionMismatchError, InvariantError, ManifestError,
                     TrainingDivergedError)
from .store import load_matrix, save_matrix

_INV_SQRT2 = 0.7071067811865476


def gelu(x):
    """Scalar x * Phi(x) with Phi the standard normal CDF (erf form)."""
    return 0.5 * x * (1.0 + math.erf(x * _INV_SQRT2))


@dataclass
class TrainConfig:
    """Hyperparameters for mini-batch gradient descent."""

    epochs: int = 200
    learning_rate: float = 0.1
    batch_size: int = 32
    seed: int = 0


@dataclass
class SentenceClassifier:
    """Trained affine weights plus training provenance."""

    weights: np.ndarray  # (d, n) float64
    bias: np.ndarray  # (n,) float64
    class_count: int
    dim: int
    class_labels: Optional[list] = None
    training_meta: dict = field(default_factory=dict)


def train(embeddings, class_index, class_count, config=None, class_labels=None):
    """Fit weights by mini-batch gradient descent on soft-labeled sentences.

    Deterministic for a fixed config seed (Xavier-uniform init, seeded
    shuffling).  Aborts with :class:`TrainingDivergedError` naming the
    epoch if the loss goes non-finite.
    """
    config = config or TrainConfig()
    x = np.ascontiguousarray(embeddings, dtype=np.float64)
    y = np.ascontiguousarray(class_index, dtype=np.int64)
    if x.ndim != 2 or x.shape[0] < 1:
        raise InvariantError(f"training embeddings must be a non-empty 2D array, "
                             f"got shape {x.shape}")
    if y.shape != (x.shape[0],):
        raise DimensionMismatchError(
            f"{x.shape[0]} sentence embeddings but {y.shape[0] if y.ndim == 1 else y.shape} labels")
    counts = np.bincount(y, minlength=class_count)
    if (y < 0).any() or (y >= class_count).any():
        raise InvariantError("sentence class index outside the class range")
    empty = np.flatnonzero(counts == 0)
    if empty.size:
        name = class_labels[empty[0]] if class_labels else f"class {empty[0]}"
        raise InvariantError(f"{name} has no training sentences")
    if config.batch_size < 1:
        raise InvariantError(f"batch_size must be >= 1, got {config.batch_size}")
    if config.epochs < 0:
        raise InvariantError(f"epochs must be >= 0, got {config.epochs}")

    samples, dim = x.shape
    rng = np.random.default_rng(config.seed)
    limit = math.sqrt(6.0 / (dim + class_count))
    weights = rng.uniform(-limit, limit, size=(dim, class_count))
    bias = np.zeros(class_count)

    initial_loss, _, _ = kernels.ce_grads(x, y, weights, bias)
    for epoch in range(config.epochs):
        order = rng.permutation(samples)
        for start in range(0, samples, config.batch_size):
            batch = order[start:start + config.batch_size]
            loss, grad_w, grad_b = kernels.ce_grads(x[batch], y[batch], weights, bias)
            if not math.isfinite(loss):
                raise TrainingDivergedError(epoch, f"batch loss {loss!r}")
            weights -= config.learning_rate * grad_w
            bias -= config.learning_rate * grad_b

    final_loss, _, _ = kernels.ce_grads(x, y, weights, bias)
    if not math.isfinite(final_loss):
        raise TrainingDivergedError(config.epochs, f"final loss {final_loss!r}")
    predictions = np.argmax(kernels.forward_probs(x, weights, bias), axis=1)
    accuracy = float(np.mean(predictions == y))
    meta = {
        "seed": config.seed,
        "epochs": config.epochs,
        "learning_rate": config.learning_rate,
        "batch_size": config.batch_size,
        "initial_loss": float(initial_loss),
        "final_loss": float(final_loss),
        "final_accuracy": accuracy,
    }
    return SentenceClassifier(weights, bias, class_count, dim,
                              list(class_labels) if class_labels else None, meta)


def train_on_vocabulary(action_vocab, config=None):
    """Train on an action vocabulary's soft-labeled sentence embeddings."""
    return train(action_vocab.sentence_embeddings,
                 action_vocab.sentence_class_index,
                 action_vocab.size, config, class_labels=action_vocab.labels)


def predict(classifier, embedding):
    """Class probabilities for one sentence embedding."""
    s = np.asarray(embedding, dtype=np.float64)
    if s.shape != (classifier.dim,):
        raise DimensionMismatchError(
            f"sentence embedding has shape {s.shape} but the classifier "
            f"expects dimension {classifier.dim}")
    return kernels.forward_probs(s.reshape(1, -1), classifier.weights,
                                 classifier.bias)[0]


def predict_batch(classifier, embeddings):
    """Row-wise class probabilities for a batch of sentence embeddings."""
    x = np.asarray(embeddings, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != classifier.dim:
        raise DimensionMismatchError(
            f"embeddings have shape {x.shape} but the classifier expects "
            f"dimension {classifier.dim}")
    return kernels.forward_probs(x, classifier.weights, classifier.bias)


def predict_video(classifier, caption_embeddings):
    """Mean of per-caption probabilities; uniform when there are none."""
    captions = np.asarray(caption_embeddings, dtype=np.float64)
    if captions.shape[0] == 0:
        return np.full(classifier.class_count, 1.0 / classifier.class_count)
    return predict_batch(classifier, captions).mean(axis=0)


def sparsify_sentences(probs, top):
    """Keep the ``top`` largest action probabilities, zero the rest.

    Same tie and zeroing semantics as the object sparsifier.
    """
    p = np.asarray(probs, dtype=np.float64)
    n = p.shape[-1]
    if not 1 <= top <= n:
        raise InvariantError(f"top_actions must be in [1, {n}], got {top}")
    if p.ndim == 1:
        return kernels.keep_top_k(p, top)
    return kernels.keep_top_k_rows(p, top)


def save_model(classifier, path, extra_meta=None):
    """Write weights and bias as one matrix file plus a JSON sidecar.

    The stored matrix stacks W (d rows) on top of b (1 row); storage is
    float32, the format's precision.
    """
    path = Path(path)
    stacked = np.vstack([classifier.weights, classifier.bias])
    save_matrix(stacked, path)
    meta = {
        "kind": "sentence-classifier",
        "dim": classifier.dim,
        "class_count": classifier.class_count,
        "class_labels": classifier.class_labels,
        "training": classifier.training_meta,
    }
    if extra_meta:
        meta.update(extra_meta)
    sidecar(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def load_model(path):
    """Read a model written by :func:`save_model`."""
    path = Path(path)
    stacked = np.asarray(load_matrix(path), dtype=np.float64)
    if stacked.shape[0] < 2:
        raise ManifestError(
            f"{path}: model matrix must have at least 2 rows (weights + bias), "
            f"got {stacked.shape[0]}")
    meta_path = sidecar(path)
    meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}
    dim = stacked.shape[0] - 1
    declared = meta.get("dim")
    if declared is not None and declared != dim:
        raise DimensionMismatchError(
            f"{path}: matrix implies dimension {dim} but metadata declares {declared}")
    return SentenceClassifier(
        np.ascontiguousarray(stacked[:-1]), np.ascontiguousarray(stacked[-1]),
        stacked.shape[1], dim, meta.get("class_labels"), meta.get("training", {}))
