"""Deterministic synthetic workspaces for desk-scale testing.

Real workspaces come from pretrained feature extractors; the fixture
replaces them with a seeded generative model that preserves the signal
structure the engine exploits: every action class has a latent unit
direction, its description sentences and video captions cluster around
that direction, and each object class is tied to one action class so
frame logits favor the tied objects.  The pipeline therefore reaches
well-above-chance accuracy on fixtures while staying fully reproducible.
"""

import numpy as np

from .errors import InvariantError
from .store import ActionVocabulary, ObjectVocabulary, VideoRecord, Workspace


def generate_fixture(seed, objects, actions, dim, videos, *,
                     sentences_per_class=10, captions_per_video=3,
                     frames_range=(4, 10), definition_noise=0.5,
                     sentence_noise=0.35, caption_noise=0.7,
                     logit_separation=2.0, logit_noise=1.0):
    """Build a synthetic workspace; byte-identical for identical arguments.

    ``objects``, ``actions``, ``dim`` and ``videos`` are the vocabulary
    sizes m and n, the embedding dimension and the video count.  Noise
    knobs control how far sentence/caption embeddings scatter around each
    class direction and how strongly frame logits favor class-tied
    objects; the defaults give a learnable but imperfect corpus.
    """
    for name, value in (("objects", objects), ("actions", actions),
                        ("dim", dim), ("videos", videos)):
        if value < 1:
            raise InvariantError(f"{name} must be >= 1, got {value}")
    rng = np.random.default_rng(seed)

    class_dirs = _unit_rows(rng.standard_normal((actions, dim)))

    action_labels = [f"action_{z:02d}" for z in range(actions)]
    object_labels = [f"object_{y:03d}" for y in range(objects)]
    tied_class = np.arange(objects) % actions
    definitions = [
        f"implement {y:03d} commonly used while doing {action_labels[tied_class[y]]}"
        for y in range(objects)
    ]
    definition_embeddings = _unit_rows(
        class_dirs[tied_class] + definition_noise * rng.standard_normal((objects, dim)))

    sentences = []
    sentence_rows = []
    sentence_class = []
    for z in range(actions):
        sentences.append([
            f"a person performs {action_labels[z]} variant {i}"
            for i in range(sentences_per_class)
        ])
        rows = _unit_rows(class_dirs[z]
                          + sentence_noise * rng.standard_normal((sentences_per_class, dim)))
        sentence_rows.append(rows)
        sentence_class.extend([z] * sentences_per_class)
    sentence_embeddings = np.concatenate(sentence_rows, axis=0)
    # representative class vector: normalized mean of the class's sentences
    class_embeddings = _unit_rows(np.stack([
        rows.mean(axis=0) for rows in sentence_rows
    ]))

    video_records = []
    lo, hi = frames_range
    for v in range(videos):
        z = v % actions
        frames = int(rng.integers(lo, hi + 1))
        logits = logit_noise * rng.standard_normal((frames, objects))
        logits[:, tied_class == z] += logit_separation
        captions = _unit_rows(class_dirs[z]
                              + caption_noise * rng.standard_normal((captions_per_video, dim)))
        video_records.append(VideoRecord(
            video_id=f"vid_{v:04d}",
            frame_logits=_freeze32(logits),
            caption_embeddings=_freeze32(captions),
            true_label=z,
        ))

    object_vocab = ObjectVocabulary(object_labels, definitions,
                                    _freeze32(definition_embeddings))
    action_vocab = ActionVocabulary(action_labels, sentences,
                                    _freeze32(class_embeddings),
                                    _freeze32(sentence_embeddings),
                                    _freeze_index(sentence_class))
    return Workspace(object_vocab, action_vocab, video_records, dim)


def shuffle_labels(workspace, seed):
    """Return a copy with true labels permuted across videos.

    Breaks the association between video features and labels while
    keeping the label distribution; accuracy on the result should sit at
    chance, which makes this the control for leakage checks.
    """
    rng = np.random.default_rng(seed)
    labels = [v.true_label for v in workspace.videos]
    perm = rng.permutation(len(labels))
    shuffled = [
        VideoRecord(v.video_id, v.frame_logits, v.caption_embeddings,
                    labels[perm[i]])
        for i, v in enumerate(workspace.videos)
    ]
    return Workspace(workspace.object_vocab, workspace.action_vocab, shuffled,
                     workspace.dim, workspace.format_version,
                     workspace.class_embedding_method)


def _unit_rows(x):
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return x / norms


def _freeze32(x):
    out = np.ascontiguousarray(x, dtype=np.float32)
    out.flags.writeable = False
    return out


def _freeze_index(values):
    out = np.asarray(values, dtype=np.int64)
    out.flags.writeable = False
    return out
