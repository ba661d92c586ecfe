"""From-scratch neural baselines: CNN, RNN, RNN+attention, small transformer.

All four share a character-level vocabulary (no word segmentation needed for
CJK text), fixed-length padded inputs, Adam, and best-on-validation
checkpoint selection across the learning-rate grid. Embeddings are randomly
initialized unless a word2vec-format text file is supplied; the manifest
records which mode ran.
"""

from __future__ import annotations

import math
import warnings
from collections import Counter
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import torch
from torch import nn

from ..errors import DivergedTraining, OverlengthWarning
from ..taxonomy import CATEGORIES, Category
from .config import BackendConfig

PAD, UNK = 0, 1


class CharVocab:
    """Characters of the training texts, most frequent first; 0=pad, 1=unk."""

    def __init__(self, chars: Sequence[str]):
        self.chars = list(chars)
        self.index = {ch: i + 2 for i, ch in enumerate(self.chars)}

    def __len__(self) -> int:
        return len(self.chars) + 2

    @classmethod
    def build(cls, texts: Sequence[str]) -> "CharVocab":
        freq: Counter[str] = Counter()
        for text in texts:
            freq.update(text)
        ordered = sorted(freq, key=lambda ch: (-freq[ch], ch))
        return cls(ordered)

    def encode(self, text: str, length: int) -> list[int]:
        ids = [self.index.get(ch, UNK) for ch in text[:length]]
        return ids + [PAD] * (length - len(ids))


def encode_batch(vocab: CharVocab, texts: Sequence[str], length: int) -> torch.Tensor:
    return torch.tensor([vocab.encode(t, length) for t in texts], dtype=torch.long)


class TextCNN(nn.Module):
    def __init__(self, cfg: BackendConfig, vocab_size: int, n_classes: int):
        super().__init__()
        self.embedding = nn.Embedding(vocab_size, cfg.embedding_dim, padding_idx=PAD)
        self.convs = nn.ModuleList(
            nn.Conv1d(cfg.embedding_dim, cfg.num_filters, k) for k in cfg.kernel_sizes
        )
        self.dropout = nn.Dropout(cfg.dropout)
        self.fc = nn.Linear(cfg.num_filters * len(cfg.kernel_sizes), n_classes)

    def forward(self, ids: torch.Tensor) -> torch.Tensor:
        x = self.embedding(ids).transpose(1, 2)  # (B, E, L)
        pooled = [torch.relu(conv(x)).max(dim=2).values for conv in self.convs]
        return self.fc(self.dropout(torch.cat(pooled, dim=1)))


class TextRNN(nn.Module):
    def __init__(self, cfg: BackendConfig, vocab_size: int, n_classes: int):
        super().__init__()
        self.embedding = nn.Embedding(vocab_size, cfg.embedding_dim, padding_idx=PAD)
        self.lstm = nn.LSTM(
            cfg.embedding_dim,
            cfg.hidden_size,
            batch_first=True,
            bidirectional=True,
            num_layers=1,
        )
        self.dropout = nn.Dropout(cfg.dropout)
        self.fc = nn.Linear(2 * cfg.hidden_size, n_classes)

    def forward(self, ids: torch.Tensor) -> torch.Tensor:
        x = self.embedding(ids)
        _, (h, _) = self.lstm(x)
        final = torch.cat([h[-2], h[-1]], dim=1)
        return self.fc(self.dropout(final))


class TextRNNAttention(nn.Module):
    def __init__(self, cfg: BackendConfig, vocab_size: int, n_classes: int):
        super().__init__()
        self.embedding = nn.Embedding(vocab_size, cfg.embedding_dim, padding_idx=PAD)
        self.lstm = nn.LSTM(
            cfg.embedding_dim, cfg.hidden_size, batch_first=True, bidirectional=True
        )
        self.attn = nn.Linear(2 * cfg.hidden_size, 1, bias=False)
        self.dropout = nn.Dropout(cfg.dropout)
        self.fc = nn.Linear(2 * cfg.hidden_size, n_classes)

    def forward(self, ids: torch.Tensor) -> torch.Tensor:
        mask = ids.ne(PAD)
        x = self.embedding(ids)
        H, _ = self.lstm(x)  # (B, L, 2H)
        scores = self.attn(torch.tanh(H)).squeeze(-1)
        scores = scores.masked_fill(~mask, float("-inf"))
        weights = torch.softmax(scores, dim=1).unsqueeze(-1)
        context = (H * weights).sum(dim=1)
        return self.fc(self.dropout(context))


class TransformerScratch(nn.Module):
    def __init__(self, cfg: BackendConfig, vocab_size: int, n_classes: int):
        super().__init__()
        self.embedding = nn.Embedding(vocab_size, cfg.embedding_dim, padding_idx=PAD)
        self.positions = nn.Embedding(cfg.padding_size, cfg.embedding_dim)
        layer = nn.TransformerEncoderLayer(
            d_model=cfg.embedding_dim,
            nhead=cfg.num_heads,
            dim_feedforward=4 * cfg.embedding_dim,
            dropout=cfg.dropout,
            batch_first=True,
        )
        self.encoder = nn.TransformerEncoder(layer, num_layers=cfg.num_layers)
        self.fc = nn.Linear(cfg.embedding_dim, n_classes)

    def forward(self, ids: torch.Tensor) -> torch.Tensor:
        mask = ids.eq(PAD)
        pos = torch.arange(ids.size(1), device=ids.device).unsqueeze(0)
        x = self.embedding(ids) + self.positions(pos)
        # guard rows that are all padding so softmax stays defined
        safe_mask = mask & ~mask.all(dim=1, keepdim=True)
        h = self.encoder(x, src_key_padding_mask=safe_mask)
        keep = (~mask).unsqueeze(-1).float()
        denom = keep.sum(dim=1).clamp(min=1.0)
        return self.fc((h * keep).sum(dim=1) / denom)


_ARCHITECTURES: dict[str, type[nn.Module]] = {
    "cnn": TextCNN,
    "rnn": TextRNN,
    "rnn_attention": TextRNNAttention,
    "transformer_scratch": TransformerScratch,
}


def load_word2vec_text(path: str | Path, dim: int) -> dict[str, np.ndarray]:
    """Parse a word2vec text-format embedding file, skipping bad rows."""
    table: dict[str, np.ndarray] = {}
    with open(path, encoding="utf-8", errors="replace") as fh:
        for line in fh:
            parts = line.rstrip("\n").split(" ")
            if len(parts) != dim + 1:
                continue  # header line or truncated row
            try:
                table[parts[0]] = np.asarray([float(v) for v in parts[1:]], dtype=np.float32)
            except ValueError:
                continue
    return table


class NeuralBackend:
    def __init__(
        self,
        family: str,
        model: nn.Module,
        vocab: CharVocab,
        cfg: BackendConfig,
        embedding_mode: str = "random_init",
    ):
        self.family = family
        self.model = model
        self.vocab = vocab
        self.cfg = cfg
        self.embedding_mode = embedding_mode

    @torch.no_grad()
    def predict_proba(self, texts: Sequence[str]) -> np.ndarray:
        overlength = sum(1 for t in texts if len(t) > self.cfg.padding_size)
        if overlength:
            warnings.warn(
                f"{overlength} text(s) longer than padding_size={self.cfg.padding_size} were truncated",
                OverlengthWarning,
                stacklevel=2,
            )
        self.model.eval()
        probs: list[np.ndarray] = []
        for start in range(0, len(texts), self.cfg.batch_size):
            ids = encode_batch(self.vocab, texts[start : start + self.cfg.batch_size], self.cfg.padding_size)
            logits = self.model(ids)
            probs.append(torch.softmax(logits, dim=1).numpy())
        return np.concatenate(probs, axis=0)

    def save(self, dirpath: Path) -> None:
        torch.save(
            {
                "family": self.family,
                "state_dict": self.model.state_dict(),
                "chars": self.vocab.chars,
                "embedding_mode": self.embedding_mode,
            },
            dirpath / "weights.pt",
        )

    @classmethod
    def load(cls, dirpath: Path, cfg: BackendConfig) -> "NeuralBackend":
        blob = torch.load(dirpath / "weights.pt", map_location="cpu", weights_only=False)
        vocab = CharVocab(blob["chars"])
        model = _ARCHITECTURES[blob["family"]](cfg, len(vocab), len(CATEGORIES))
        model.load_state_dict(blob["state_dict"])
        model.eval()
        return cls(blob["family"], model, vocab, cfg, blob.get("embedding_mode", "random_init"))


def _initial_model(cfg: BackendConfig, vocab: CharVocab) -> tuple[nn.Module, str]:
    torch.manual_seed(cfg.seed)
    model = _ARCHITECTURES[cfg.family](cfg, len(vocab), len(CATEGORIES))
    embedding_mode = "random_init"
    if cfg.embedding_file:
        table = load_word2vec_text(cfg.embedding_file, cfg.embedding_dim)
        hits = 0
        with torch.no_grad():
            emb = model.get_submodule("embedding").weight
            for ch, idx in vocab.index.items():
                vec = table.get(ch)
                if vec is not None:
                    emb[idx] = torch.from_numpy(vec)
                    hits += 1
        embedding_mode = f"pretrained_file({hits} hits)"
    return model, embedding_mode


def train_grid(
    cfg: BackendConfig,
    train_texts: Sequence[str],
    train_labels: Sequence[Category],
    val_texts: Sequence[str],
    val_labels: Sequence[Category],
    log_entry: Callable[[float, int, float, float], None],
) -> tuple[NeuralBackend, float]:
    from ..metrics import evaluate

    vocab = CharVocab.build(train_texts)
    X = encode_batch(vocab, train_texts, cfg.padding_size)
    y = torch.tensor([c.ordinal for c in train_labels], dtype=torch.long)
    X_val = encode_batch(vocab, val_texts, cfg.padding_size)

    best: tuple[float, dict, float, str] | None = None  # (f1, state, lr, emb_mode)
    loss_fn = nn.CrossEntropyLoss()
    for lr in cfg.learning_rate_grid:
        model, embedding_mode = _initial_model(cfg, vocab)
        optimizer = torch.optim.Adam(model.parameters(), lr=lr)
        shuffler = torch.Generator().manual_seed(cfg.seed)
        for epoch in range(1, cfg.epochs + 1):
            model.train()
            perm = torch.randperm(len(train_texts), generator=shuffler)
            epoch_loss = 0.0
            for start in range(0, len(perm), cfg.batch_size):
                batch = perm[start : start + cfg.batch_size]
                optimizer.zero_grad()
                loss = loss_fn(model(X[batch]), y[batch])
                if not math.isfinite(loss.item()):
                    raise DivergedTraining(
                        f"{cfg.family}: non-finite loss at lr={lr}, epoch {epoch}"
                    )
                loss.backward()
                optimizer.step()
                epoch_loss += loss.item() * len(batch)
            epoch_loss /= len(perm)

            model.eval()
            with torch.no_grad():
                probs = []
                for start in range(0, len(X_val), cfg.batch_size):
                    probs.append(torch.softmax(model(X_val[start : start + cfg.batch_size]), dim=1))
                val_preds = [CATEGORIES[i] for i in torch.cat(probs).argmax(dim=1).tolist()]
            val_f1 = float(evaluate(val_preds, list(val_labels)).weighted_f1)
            log_entry(lr, epoch, epoch_loss, val_f1)
            if best is None or val_f1 > best[0]:
                state = {k: v.detach().clone() for k, v in model.state_dict().items()}
                best = (val_f1, state, lr, embedding_mode)

    assert best is not None
    model, _ = _initial_model(cfg, vocab)
    model.load_state_dict(best[1])
    model.eval()
    return NeuralBackend(cfg.family, model, vocab, cfg, best[3]), best[2]
