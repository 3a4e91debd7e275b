"""Zero-shot action classification engine.

Fuses two global classifiers over whole-video features: an
object-affinity pathway (per-video object probabilities scored against
an object/action cosine-affinity matrix built from definition-sentence
embeddings) and a sentence pathway (a supervised classifier over
soft-labeled class-description sentences, applied to caption
embeddings).  Includes top-k sparsification of all three score arrays
and a repeated random unseen-class-split evaluation harness.
"""

__version__ = "0.1.0"

from .affinity import AffinityMatrix, compute_affinity, normalize_rows, sparsify_affinity
from .errors import (DimensionMismatchError, EngineError, EvaluationError,
                     InvariantError, ManifestError, MatrixFormatError,
                     TrainingDivergedError)
from .evaluation import (RunStatistics, SplitSpec, emit_report, evaluate,
                         generate_splits, load_split_file)
from .fixture import generate_fixture, shuffle_labels
from .fusion import MODES, Prediction, SparsityConfig, classify, classify_batch
from .objects import (aggregate_video, aggregate_videos, object_action_scores,
                      sparsify_objects)
from .sentences import (SentenceClassifier, TrainConfig, gelu, load_model,
                        predict, predict_batch, predict_video, save_model,
                        sparsify_sentences, train, train_on_vocabulary)
from .store import (ActionVocabulary, ObjectVocabulary, VideoRecord, Workspace,
                    load_matrix, load_workspace, save_matrix, save_workspace)

__all__ = [
    "AffinityMatrix", "ActionVocabulary", "DimensionMismatchError",
    "EngineError", "EvaluationError", "InvariantError", "ManifestError",
    "MatrixFormatError", "MODES", "ObjectVocabulary", "Prediction",
    "RunStatistics", "SentenceClassifier", "SparsityConfig", "SplitSpec",
    "TrainConfig", "TrainingDivergedError", "VideoRecord", "Workspace",
    "aggregate_video", "aggregate_videos", "classify", "classify_batch",
    "compute_affinity", "emit_report", "evaluate", "generate_fixture",
    "generate_splits", "gelu", "load_matrix", "load_model", "load_split_file",
    "load_workspace", "normalize_rows", "object_action_scores", "predict",
    "predict_batch", "predict_video", "save_matrix", "save_model",
    "save_workspace", "shuffle_labels", "sparsify_affinity",
    "sparsify_objects", "sparsify_sentences", "train", "train_on_vocabulary",
]
