"""Engine configuration: documented defaults and the echo convention.

Every primary output artifact is accompanied by a JSON echo of the
configuration that produced it (sparsity thresholds, training
hyperparameters, seed, mode, backend).  The echo deliberately excludes
the worker-thread count and output paths: results are independent of
scheduling, and identical inputs must yield byte-identical artifacts.
"""

import os
from dataclasses import dataclass
from typing import Optional

from .errors import InvariantError

DEFAULTS = {
    "top_objects": 100,   # strongest object probabilities kept per video
    "top_actions": 5,     # strongest sentence probabilities kept per video
    "top_affinity": 100,  # strongest objects kept per action column
    "runs": 50,
    "epochs": 200,
    "learning_rate": 0.1,
    "batch_size": 32,
    "seed": 0,
    "mode": "fused",
    "classifier_policy": "retrain",
    "object_weight": 1.0,
}


@dataclass
class EngineConfig:
    """Resolved runtime settings (flag > config file > default)."""

    top_objects: int = DEFAULTS["top_objects"]
    top_actions: int = DEFAULTS["top_actions"]
    top_affinity: int = DEFAULTS["top_affinity"]
    runs: int = DEFAULTS["runs"]
    epochs: int = DEFAULTS["epochs"]
    learning_rate: float = DEFAULTS["learning_rate"]
    batch_size: int = DEFAULTS["batch_size"]
    seed: int = DEFAULTS["seed"]
    mode: str = DEFAULTS["mode"]
    classifier_policy: str = DEFAULTS["classifier_policy"]
    object_weight: float = DEFAULTS["object_weight"]
    threads: Optional[int] = None  # None = available cores

    def validate(self):
        for name in ("top_objects", "top_actions", "top_affinity"):
            if getattr(self, name) < 1:
                raise InvariantError(f"{name} must be >= 1, got {getattr(self, name)}")
        for name in ("runs", "epochs", "batch_size"):
            if getattr(self, name) < 1:
                raise InvariantError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.threads is not None and self.threads < 1:
            raise InvariantError(f"threads must be >= 1, got {self.threads}")
        return self

    @property
    def worker_count(self):
        return self.threads if self.threads is not None else (os.cpu_count() or 1)

    def echo(self, **extra):
        """Reproducibility record written into output artifacts."""
        record = {
            "top_objects": self.top_objects,
            "top_actions": self.top_actions,
            "top_affinity": self.top_affinity,
            "runs": self.runs,
            "epochs": self.epochs,
            "learning_rate": self.learning_rate,
            "batch_size": self.batch_size,
            "seed": self.seed,
            "mode": self.mode,
            "classifier_policy": self.classifier_policy,
            "object_weight": self.object_weight,
        }
        record.update(extra)
        return record
