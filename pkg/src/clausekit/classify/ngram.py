"""Character n-gram TF-IDF features with a softmax-regression head.

The dependency-light reference backend: language-agnostic for CJK text
(character n-grams need no word segmentation), deterministic (no random
initialization), and convex. One epoch is one full-batch gradient step with
a backtracking safeguard, so the training loss never increases.
"""

from __future__ import annotations

import json
import math
import warnings
from collections import Counter
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import sparse

from ..errors import DivergedTraining, OverlengthWarning
from ..taxonomy import CATEGORIES, Category
from .config import BackendConfig


def _char_ngrams(text: str, lo: int, hi: int) -> list[str]:
    grams: list[str] = []
    for n in range(lo, hi + 1):
        grams.extend(text[i : i + n] for i in range(len(text) - n + 1))
    return grams


class CharNgramVectorizer:
    """TF-IDF over character n-grams (smoothed idf, L2-normalized rows)."""

    def __init__(self, ngram_range: tuple[int, int] = (1, 3), max_chars: int = 64):
        self.ngram_range = ngram_range
        self.max_chars = max_chars
        self.vocab: dict[str, int] = {}
        self.idf: np.ndarray = np.zeros(0)

    def fit(self, texts: Sequence[str]) -> "CharNgramVectorizer":
        lo, hi = self.ngram_range
        df: Counter[str] = Counter()
        for text in texts:
            df.update(set(_char_ngrams(text[: self.max_chars], lo, hi)))
        self.vocab = {gram: i for i, gram in enumerate(sorted(df))}
        n_docs = len(texts)
        self.idf = np.zeros(len(self.vocab))
        for gram, i in self.vocab.items():
            self.idf[i] = math.log((1 + n_docs) / (1 + df[gram])) + 1.0
        return self

    def transform(self, texts: Sequence[str]) -> sparse.csr_matrix:
        lo, hi = self.ngram_range
        data: list[float] = []
        indices: list[int] = []
        indptr = [0]
        for text in texts:
            counts: Counter[int] = Counter()
            for gram in _char_ngrams(text[: self.max_chars], lo, hi):
                idx = self.vocab.get(gram)
                if idx is not None:
                    counts[idx] += 1
            row = sorted(counts.items())
            norm = math.sqrt(sum((tf * self.idf[i]) ** 2 for i, tf in row)) or 1.0
            for i, tf in row:
                indices.append(i)
                data.append(tf * self.idf[i] / norm)
            indptr.append(len(indices))
        return sparse.csr_matrix(
            (data, indices, indptr), shape=(len(texts), len(self.vocab))
        )


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


class SoftmaxRegression:
    """Multinomial logistic regression trained by full-batch gradient descent."""

    def __init__(self, n_features: int, n_classes: int, l2: float = 1e-4):
        self.W = np.zeros((n_features, n_classes))
        self.b = np.zeros(n_classes)
        self.l2 = l2

    def _loss(self, X: sparse.csr_matrix, y: np.ndarray, W: np.ndarray, b: np.ndarray) -> float:
        P = _softmax(X @ W + b)
        nll = -np.log(np.clip(P[np.arange(len(y)), y], 1e-300, None)).mean()
        return float(nll + 0.5 * self.l2 * (W * W).sum())

    def epoch(self, X: sparse.csr_matrix, y: np.ndarray, lr: float) -> float:
        """One full-batch step with backtracking; returns the post-step loss."""
        n = X.shape[0]
        P = _softmax(X @ self.W + self.b)
        loss = self._loss(X, y, self.W, self.b)
        if not math.isfinite(loss):
            raise DivergedTraining(f"non-finite training loss {loss}")
        G = P.copy()
        G[np.arange(n), y] -= 1.0
        gW = (X.T @ G) / n + self.l2 * self.W
        gb = G.mean(axis=0)
        step = lr
        for _ in range(30):
            W_new = self.W - step * gW
            b_new = self.b - step * gb
            new_loss = self._loss(X, y, W_new, b_new)
            if new_loss <= loss:
                break
            step /= 2
        else:
            return loss  # gradient step cannot improve; keep current weights
        self.W, self.b = W_new, b_new
        if not math.isfinite(new_loss):
            raise DivergedTraining(f"non-finite training loss {new_loss}")
        return new_loss

    def predict_proba(self, X: sparse.csr_matrix) -> np.ndarray:
        return _softmax(X @ self.W + self.b)


class NgramLinearBackend:
    """Vectorizer + linear head bundle used by the uniform classifier surface."""

    def __init__(self, vectorizer: CharNgramVectorizer, head: SoftmaxRegression, padding_size: int):
        self.vectorizer = vectorizer
        self.head = head
        self.padding_size = padding_size

    def predict_proba(self, texts: Sequence[str]) -> np.ndarray:
        overlength = sum(1 for t in texts if len(t) > self.padding_size)
        if overlength:
            warnings.warn(
                f"{overlength} text(s) longer than padding_size={self.padding_size} were truncated",
                OverlengthWarning,
                stacklevel=2,
            )
        return self.head.predict_proba(self.vectorizer.transform(texts))

    def save(self, dirpath: Path) -> None:
        (dirpath / "vocab.json").write_text(
            json.dumps(
                {
                    "vocab": self.vectorizer.vocab,
                    "ngram_range": list(self.vectorizer.ngram_range),
                    "max_chars": self.vectorizer.max_chars,
                },
                ensure_ascii=False,
            ),
            encoding="utf-8",
        )
        np.savez(
            dirpath / "weights.npz",
            idf=self.vectorizer.idf,
            W=self.head.W,
            b=self.head.b,
            l2=np.array([self.head.l2]),
        )

    @classmethod
    def load(cls, dirpath: Path, padding_size: int) -> "NgramLinearBackend":
        meta = json.loads((dirpath / "vocab.json").read_text(encoding="utf-8"))
        blobs = np.load(dirpath / "weights.npz")
        vec = CharNgramVectorizer(tuple(meta["ngram_range"]), meta["max_chars"])
        vec.vocab = {str(k): int(v) for k, v in meta["vocab"].items()}
        vec.idf = blobs["idf"]
        head = SoftmaxRegression(len(vec.vocab), len(CATEGORIES), l2=float(blobs["l2"][0]))
        head.W = blobs["W"]
        head.b = blobs["b"]
        return cls(vec, head, padding_size)


def train_grid(
    cfg: BackendConfig,
    train_texts: Sequence[str],
    train_labels: Sequence[Category],
    val_texts: Sequence[str],
    val_labels: Sequence[Category],
    log_entry: Callable[[float, int, float, float], None],
) -> tuple[NgramLinearBackend, float]:
    """Grid search over learning rates; returns the backend restored to the
    best (lr, epoch) checkpoint and the winning rate.

    ``log_entry(lr, epoch, train_loss, val_weighted_f1)`` records one epoch.
    """
    vectorizer = CharNgramVectorizer(cfg.ngram_range, cfg.padding_size).fit(train_texts)
    X = vectorizer.transform(train_texts)
    X_val = vectorizer.transform(val_texts)
    y = np.array([c.ordinal for c in train_labels])

    from ..metrics import evaluate  # local import to avoid a cycle at module load

    best: tuple[float, np.ndarray, np.ndarray, float] | None = None  # (f1, W, b, lr)
    for lr in cfg.learning_rate_grid:
        head = SoftmaxRegression(X.shape[1], len(CATEGORIES), l2=cfg.l2)
        for epoch in range(1, cfg.epochs + 1):
            loss = head.epoch(X, y, lr)
            val_preds = [
                CATEGORIES[i] for i in np.argmax(head.predict_proba(X_val), axis=1)
            ]
            val_f1 = float(evaluate(val_preds, list(val_labels)).weighted_f1)
            log_entry(lr, epoch, loss, val_f1)
            if best is None or val_f1 > best[0]:
                best = (val_f1, head.W.copy(), head.b.copy(), lr)

    assert best is not None
    head = SoftmaxRegression(X.shape[1], len(CATEGORIES), l2=cfg.l2)
    head.W, head.b = best[1], best[2]
    return NgramLinearBackend(vectorizer, head, cfg.padding_size), best[3]
