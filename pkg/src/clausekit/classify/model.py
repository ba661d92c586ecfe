"""The trained-classifier artifact and its on-disk layout.

A model directory holds a ``manifest.json`` (family, checkpoint id, winning
learning rate, label set, seed, metrics, full config and training log) next
to the backend's own weight blobs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from ..errors import DataError
from ..taxonomy import CATEGORIES, Category
from .config import BackendConfig


@dataclass(frozen=True)
class TrainingLogEntry:
    lr: float
    epoch: int
    train_loss: float
    val_weighted_f1: float

    def to_dict(self) -> dict[str, float | int]:
        return {
            "lr": self.lr,
            "epoch": self.epoch,
            "train_loss": self.train_loss,
            "val_weighted_f1": self.val_weighted_f1,
        }


class Backend(Protocol):
    def predict_proba(self, texts: Sequence[str]) -> np.ndarray: ...

    def save(self, dirpath: Path) -> None: ...


class ClassifierModel:
    """Uniform prediction surface over any backend family."""

    def __init__(
        self,
        config: BackendConfig,
        backend: Backend,
        winning_lr: float,
        training_log: Sequence[TrainingLogEntry],
        extras: dict[str, object] | None = None,
    ):
        self.config = config
        self.backend = backend
        self.winning_lr = winning_lr
        self.training_log = tuple(training_log)
        self.label_set: tuple[Category, ...] = CATEGORIES
        self.extras = dict(extras or {})

    @property
    def family(self) -> str:
        return self.config.family

    @property
    def best_val_weighted_f1(self) -> float:
        return max((e.val_weighted_f1 for e in self.training_log), default=0.0)

    def predict(self, texts: Sequence[str]) -> list[tuple[Category, float]]:
        """One (category, confidence) per text, order preserved.

        Ties in the class scores go to the lowest category ordinal
        (np.argmax picks the first maximum over canonical column order).
        """
        texts = list(texts)
        if not texts or any(not t.strip() for t in texts):
            raise DataError("predict requires non-empty clause texts")
        probs = self.backend.predict_proba(texts)
        winners = np.argmax(probs, axis=1)
        return [(CATEGORIES[int(i)], float(probs[r, i])) for r, i in enumerate(winners)]

    def save(self, dirpath: str | Path) -> None:
        d = Path(dirpath)
        d.mkdir(parents=True, exist_ok=True)
        manifest = {
            "family": self.family,
            "checkpoint_id": self.config.checkpoint_id,
            "winning_lr": self.winning_lr,
            "label_set": [c.render() for c in self.label_set],
            "seed": self.config.seed,
            "metrics": {"best_val_weighted_f1": self.best_val_weighted_f1},
            "config": self.config.to_dict(),
            "training_log": [e.to_dict() for e in self.training_log],
            "extras": self.extras,
        }
        (d / "manifest.json").write_text(
            json.dumps(manifest, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
        self.backend.save(d)

    @classmethod
    def load(cls, dirpath: str | Path) -> "ClassifierModel":
        d = Path(dirpath)
        manifest_path = d / "manifest.json"
        if not manifest_path.is_file():
            raise DataError(f"{dirpath}: not a model directory (manifest.json missing)")
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        config = BackendConfig.from_dict(manifest["config"])
        saved_labels = manifest.get("label_set", [])
        if saved_labels != [c.render() for c in CATEGORIES]:
            raise DataError(f"{dirpath}: label set {saved_labels} does not match the taxonomy")

        family = manifest["family"]
        if family == "ngram_linear":
            from .ngram import NgramLinearBackend

            backend: Backend = NgramLinearBackend.load(d, config.padding_size)
        elif family == "pretrained_encoder":
            from .encoder import EncoderBackend

            backend = EncoderBackend.load(d, config)
        else:
            from .neural import NeuralBackend

            backend = NeuralBackend.load(d, config)

        return cls(
            config=config,
            backend=backend,
            winning_lr=float(manifest["winning_lr"]),
            training_log=[TrainingLogEntry(**e) for e in manifest.get("training_log", [])],
            extras=manifest.get("extras", {}),
        )
