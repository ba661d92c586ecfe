"""Pretrained bidirectional encoder: fine-tuning and domain further-pretraining.

Checkpoints are consumed as external artifacts through the registry; this
module never builds an encoder from scratch. Further pretraining continues
the encoder's own objectives (masked-token prediction plus next-sentence
prediction) on unlabeled in-domain lines and writes a brand-new checkpoint,
leaving the original untouched.
"""

from __future__ import annotations

import math
import random
import warnings
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import torch
from torch import nn

from ..errors import (
    CheckpointNotFound,
    CorpusTooSmall,
    DivergedTraining,
    InvalidConfig,
    OverlengthWarning,
)
from ..taxonomy import CATEGORIES, Category
from .config import BackendConfig, DomainCorpus
from .registry import DEFAULT_REGISTRY, CheckpointRegistry

ID2LABEL = {i: c.value for i, c in enumerate(CATEGORIES)}
LABEL2ID = {c.value: i for i, c in enumerate(CATEGORIES)}


def _load_tokenizer(path_or_id: str):
    from transformers import AutoTokenizer

    try:
        return AutoTokenizer.from_pretrained(path_or_id)
    except (OSError, ValueError) as exc:
        raise CheckpointNotFound(f"cannot load tokenizer from {path_or_id!r}: {exc}") from exc


def _load_classifier(path_or_id: str):
    from transformers import AutoModelForSequenceClassification

    try:
        return AutoModelForSequenceClassification.from_pretrained(
            path_or_id,
            num_labels=len(CATEGORIES),
            id2label=ID2LABEL,
            label2id=LABEL2ID,
            ignore_mismatched_sizes=True,
        )
    except (OSError, ValueError) as exc:
        raise CheckpointNotFound(f"cannot load encoder from {path_or_id!r}: {exc}") from exc


class EncoderBackend:
    def __init__(self, tokenizer, model, cfg: BackendConfig):
        self.tokenizer = tokenizer
        self.model = model
        self.cfg = cfg

    def _encode(self, texts: Sequence[str]):
        return self.tokenizer(
            list(texts),
            padding=True,
            truncation=True,
            max_length=self.cfg.padding_size,
            return_tensors="pt",
        )

    @torch.no_grad()
    def predict_proba(self, texts: Sequence[str]) -> np.ndarray:
        untruncated = self.tokenizer(list(texts), truncation=False, padding=False)
        overlength = sum(1 for ids in untruncated["input_ids"] if len(ids) > self.cfg.padding_size)
        if overlength:
            warnings.warn(
                f"{overlength} text(s) exceed padding_size={self.cfg.padding_size} tokens and were truncated",
                OverlengthWarning,
                stacklevel=2,
            )
        self.model.eval()
        probs: list[np.ndarray] = []
        for start in range(0, len(texts), self.cfg.batch_size):
            enc = self._encode(texts[start : start + self.cfg.batch_size])
            logits = self.model(**enc).logits
            probs.append(torch.softmax(logits, dim=1).numpy())
        return np.concatenate(probs, axis=0)

    def save(self, dirpath: Path) -> None:
        target = dirpath / "encoder"
        self.model.save_pretrained(target)
        self.tokenizer.save_pretrained(target)

    @classmethod
    def load(cls, dirpath: Path, cfg: BackendConfig) -> "EncoderBackend":
        target = str(dirpath / "encoder")
        backend = cls(_load_tokenizer(target), _load_classifier(target), cfg)
        backend.model.eval()
        return backend


def train_grid(
    cfg: BackendConfig,
    train_texts: Sequence[str],
    train_labels: Sequence[Category],
    val_texts: Sequence[str],
    val_labels: Sequence[Category],
    log_entry: Callable[[float, int, float, float], None],
    registry: CheckpointRegistry | None = None,
) -> tuple[EncoderBackend, float]:
    from ..metrics import evaluate

    registry = registry or DEFAULT_REGISTRY
    resolved = registry.resolve(cfg.checkpoint_id or "")
    tokenizer = _load_tokenizer(resolved)

    y = torch.tensor([c.ordinal for c in train_labels], dtype=torch.long)
    loss_fn = nn.CrossEntropyLoss()

    best: tuple[float, dict, float] | None = None  # (f1, state, lr)
    for lr in cfg.learning_rate_grid:
        torch.manual_seed(cfg.seed)
        model = _load_classifier(resolved)
        optimizer = torch.optim.AdamW(model.parameters(), lr=lr)
        shuffler = torch.Generator().manual_seed(cfg.seed)
        backend = EncoderBackend(tokenizer, model, cfg)
        for epoch in range(1, cfg.epochs + 1):
            model.train()
            perm = torch.randperm(len(train_texts), generator=shuffler)
            epoch_loss = 0.0
            for start in range(0, len(perm), cfg.batch_size):
                batch_idx = perm[start : start + cfg.batch_size].tolist()
                enc = backend._encode([train_texts[i] for i in batch_idx])
                optimizer.zero_grad()
                logits = model(**enc).logits
                loss = loss_fn(logits, y[batch_idx])
                if not math.isfinite(loss.item()):
                    raise DivergedTraining(f"encoder: non-finite loss at lr={lr}, epoch {epoch}")
                loss.backward()
                optimizer.step()
                epoch_loss += loss.item() * len(batch_idx)
            epoch_loss /= len(perm)

            model.eval()
            with torch.no_grad():
                preds: list[Category] = []
                for start in range(0, len(val_texts), cfg.batch_size):
                    enc = backend._encode(val_texts[start : start + cfg.batch_size])
                    probs = torch.softmax(model(**enc).logits, dim=1)
                    preds.extend(CATEGORIES[i] for i in probs.argmax(dim=1).tolist())
            val_f1 = float(evaluate(preds, list(val_labels)).weighted_f1)
            log_entry(lr, epoch, epoch_loss, val_f1)
            if best is None or val_f1 > best[0]:
                state = {k: v.detach().clone() for k, v in model.state_dict().items()}
                best = (val_f1, state, lr)

    assert best is not None
    torch.manual_seed(cfg.seed)
    model = _load_classifier(resolved)
    model.load_state_dict(best[1])
    model.eval()
    return EncoderBackend(tokenizer, model, cfg), best[2]


# --- further pretraining ------------------------------------------------------


def _mask_tokens(
    input_ids: torch.Tensor,
    special_mask: torch.Tensor,
    tokenizer,
    mask_prob: float,
    rng: torch.Generator,
) -> tuple[torch.Tensor, torch.Tensor]:
    """Standard masked-token recipe: select ``mask_prob`` of the non-special
    positions (at least one per sequence), replace 80% with the mask token,
    10% with a random token, 10% left as-is."""
    labels = input_ids.clone()
    candidates = ~special_mask
    probs = torch.full(input_ids.shape, mask_prob)
    probs[special_mask] = 0.0
    selected = torch.bernoulli(probs, generator=rng).bool()
    for row in range(input_ids.size(0)):
        if not selected[row].any() and candidates[row].any():
            choices = candidates[row].nonzero(as_tuple=True)[0]
            pick = choices[torch.randint(len(choices), (1,), generator=rng)]
            selected[row, pick] = True
    labels[~selected] = -100

    replaced = torch.bernoulli(torch.full(input_ids.shape, 0.8), generator=rng).bool() & selected
    input_ids = input_ids.clone()
    input_ids[replaced] = tokenizer.mask_token_id
    randomized = (
        torch.bernoulli(torch.full(input_ids.shape, 0.5), generator=rng).bool()
        & selected
        & ~replaced
    )
    random_tokens = torch.randint(len(tokenizer), input_ids.shape, generator=rng)
    input_ids[randomized] = random_tokens[randomized]
    return input_ids, labels


def _sentence_pairs(lines: Sequence[str], rng: random.Random) -> list[tuple[str, str, int]]:
    """Adjacent-line pairs; half get a random second sentence (label 1)."""
    pairs: list[tuple[str, str, int]] = []
    for i in range(len(lines) - 1):
        if rng.random() < 0.5:
            pairs.append((lines[i], lines[i + 1], 0))
        else:
            j = rng.randrange(len(lines))
            if j == i + 1:
                j = (j + 1) % len(lines)
            pairs.append((lines[i], lines[j], 1))
    return pairs


def further_pretrain(
    checkpoint_id: str,
    corpus: DomainCorpus,
    lr: float = 5e-5,
    batch: int = 4,
    *,
    output_dir: str | Path,
    epochs: int = 1,
    mask_prob: float = 0.15,
    min_corpus_lines: int = 16,
    max_length: int = 128,
    max_steps: int | None = None,
    seed: int = 0,
    registry: CheckpointRegistry | None = None,
) -> str:
    """Continue pretraining an encoder on in-domain lines; returns the id
    (path) of the new checkpoint. No labeled data is consumed and the source
    checkpoint is never written to."""
    from transformers import AutoModelForPreTraining

    if mask_prob <= 0 or mask_prob > 1:
        raise InvalidConfig(
            f"mask_prob must be in (0, 1]; {mask_prob} makes the masked-token task vacuous"
        )
    if len(corpus) < min_corpus_lines:
        raise CorpusTooSmall(
            f"domain corpus has {len(corpus)} lines; floor is {min_corpus_lines}"
        )

    registry = registry or DEFAULT_REGISTRY
    resolved = registry.resolve(checkpoint_id)
    tokenizer = _load_tokenizer(resolved)
    try:
        model = AutoModelForPreTraining.from_pretrained(resolved)
    except (OSError, ValueError) as exc:
        raise CheckpointNotFound(f"cannot load encoder from {resolved!r}: {exc}") from exc

    rng = random.Random(seed)
    torch_rng = torch.Generator().manual_seed(seed)
    pairs = _sentence_pairs(corpus.lines, rng)
    optimizer = torch.optim.AdamW(model.parameters(), lr=lr)
    model.train()

    steps = 0
    for _ in range(epochs):
        order = list(range(len(pairs)))
        rng.shuffle(order)
        for start in range(0, len(order), batch):
            chunk = [pairs[i] for i in order[start : start + batch]]
            enc = tokenizer(
                [a for a, _, _ in chunk],
                [b for _, b, _ in chunk],
                padding=True,
                truncation=True,
                max_length=max_length,
                return_tensors="pt",
                return_special_tokens_mask=True,
            )
            special = enc.pop("special_tokens_mask").bool()
            input_ids, labels = _mask_tokens(
                enc["input_ids"], special, tokenizer, mask_prob, torch_rng
            )
            enc["input_ids"] = input_ids
            nsp = torch.tensor([lab for _, _, lab in chunk], dtype=torch.long)
            optimizer.zero_grad()
            out = model(**enc, labels=labels, next_sentence_label=nsp)
            if not math.isfinite(out.loss.item()):
                raise DivergedTraining("further pretraining produced a non-finite loss")
            out.loss.backward()
            optimizer.step()
            steps += 1
            if max_steps is not None and steps >= max_steps:
                break
        if max_steps is not None and steps >= max_steps:
            break

    out_dir = Path(output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model.save_pretrained(out_dir)
    tokenizer.save_pretrained(out_dir)
    return str(out_dir)
