import numpy as np
import pytest

from zsaction import generate_fixture
from zsaction.store import ActionVocabulary, ObjectVocabulary


@pytest.fixture(scope="session")
def default_workspace():
    """The standard desk-scale fixture used across suites."""
    return generate_fixture(1, 50, 20, 32, 400)


@pytest.fixture(scope="session")
def small_workspace():
    return generate_fixture(1, 10, 4, 16, 80)


def make_object_vocab(embeddings, labels=None):
    embeddings = np.asarray(embeddings, dtype=np.float32)
    m = embeddings.shape[0]
    labels = labels or [f"obj{i}" for i in range(m)]
    return ObjectVocabulary(labels, [f"definition of {l}" for l in labels],
                            embeddings)


def make_action_vocab(class_embeddings, sentence_embeddings=None,
                      sentence_class=None, labels=None):
    class_embeddings = np.asarray(class_embeddings, dtype=np.float32)
    n = class_embeddings.shape[0]
    labels = labels or [f"act{i}" for i in range(n)]
    if sentence_embeddings is None:
        sentence_embeddings = class_embeddings
        sentence_class = list(range(n))
    return ActionVocabulary(
        labels, [[f"someone does {l}"] for l in labels], class_embeddings,
        np.asarray(sentence_embeddings, dtype=np.float32),
        np.asarray(sentence_class, dtype=np.int64))
