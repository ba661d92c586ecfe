"""Uniform train/predict capability over three backend families.

* ``ngram_linear`` — character n-gram TF-IDF + softmax regression; fast,
  deterministic, dependency-light.
* ``cnn`` / ``rnn`` / ``rnn_attention`` / ``transformer_scratch`` — neural
  baselines trained from scratch.
* ``pretrained_encoder`` — fine-tunes an external encoder checkpoint, with
  optional domain further-pretraining beforehand.

Every family runs the same protocol: grid-search over learning rates, train
up to ``epochs``, keep the checkpoint with the best validation weighted F1.
"""

from __future__ import annotations

import warnings
from typing import Sequence

from ..corpus import Clause
from ..dataset import Dataset
from ..errors import DataError, EmptyClassWarning
from ..taxonomy import CATEGORIES, Category
from .config import DEFAULT_CHECKPOINT, DEFAULT_GRIDS, FAMILIES, BackendConfig, DomainCorpus
from .model import ClassifierModel, TrainingLogEntry
from .registry import DEFAULT_REGISTRY, CheckpointRegistry

__all__ = [
    "FAMILIES",
    "DEFAULT_GRIDS",
    "DEFAULT_CHECKPOINT",
    "BackendConfig",
    "DomainCorpus",
    "ClassifierModel",
    "TrainingLogEntry",
    "CheckpointRegistry",
    "DEFAULT_REGISTRY",
    "train",
    "predict",
    "further_pretrain",
    "load_model",
]


def train(
    cfg: BackendConfig,
    train_ds: Dataset,
    val_ds: Dataset,
    registry: CheckpointRegistry | None = None,
) -> ClassifierModel:
    """Grid-search train on the train split, select on the validation split.

    The test split is deliberately not a parameter. A category absent from
    the training split triggers :class:`EmptyClassWarning` but training
    proceeds.
    """
    if len(train_ds) == 0 or len(val_ds) == 0:
        raise DataError("train and validation datasets must be non-empty")
    overlap = train_ds.clause_ids() & val_ds.clause_ids()
    if overlap:
        raise DataError(f"train and validation overlap on {len(overlap)} clause id(s)")

    counts = train_ds.class_counts()
    missing = [c.render() for c in CATEGORIES if counts[c] == 0]
    if missing:
        warnings.warn(
            f"categories absent from training data: {', '.join(missing)}",
            EmptyClassWarning,
            stacklevel=2,
        )

    log: list[TrainingLogEntry] = []

    def log_entry(lr: float, epoch: int, train_loss: float, val_f1: float) -> None:
        log.append(
            TrainingLogEntry(lr=lr, epoch=epoch, train_loss=train_loss, val_weighted_f1=val_f1)
        )

    args = (cfg, train_ds.texts(), train_ds.labels(), val_ds.texts(), val_ds.labels(), log_entry)
    extras: dict[str, object] = {}
    if cfg.family == "ngram_linear":
        from . import ngram

        backend, winning_lr = ngram.train_grid(*args)
    elif cfg.family == "pretrained_encoder":
        from . import encoder

        backend, winning_lr = encoder.train_grid(*args, registry=registry)
    else:
        from . import neural

        backend, winning_lr = neural.train_grid(*args)
        extras["embedding_mode"] = backend.embedding_mode

    return ClassifierModel(
        config=cfg, backend=backend, winning_lr=winning_lr, training_log=log, extras=extras
    )


def predict(
    model: ClassifierModel, clauses: Sequence[Clause | str]
) -> list[tuple[Category, float]]:
    """Label clauses (or raw texts) with the trained model, order preserved."""
    texts = [c.text if isinstance(c, Clause) else c for c in clauses]
    return model.predict(texts)


def further_pretrain(*args, **kwargs) -> str:
    """See :func:`clausekit.classify.encoder.further_pretrain`."""
    from . import encoder

    return encoder.further_pretrain(*args, **kwargs)


def load_model(dirpath) -> ClassifierModel:
    return ClassifierModel.load(dirpath)
