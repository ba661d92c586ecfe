"""Backend families, training configuration and the unlabeled domain corpus."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from ..errors import DataError, InvalidConfig

FAMILIES = (
    "ngram_linear",
    "cnn",
    "rnn",
    "rnn_attention",
    "transformer_scratch",
    "pretrained_encoder",
)

# Per-family default learning-rate grids. Encoder fine-tuning uses far smaller
# steps than the from-scratch baselines; the linear baseline takes full-batch
# steps with a backtracking safeguard, so it tolerates large rates.
DEFAULT_GRIDS: dict[str, tuple[float, ...]] = {
    "pretrained_encoder": (7e-5, 5e-5, 3e-5, 1e-5),
    "cnn": (1e-3, 5e-4, 2.5e-4, 1e-4),
    "rnn": (1e-3, 5e-4, 2.5e-4, 1e-4),
    "rnn_attention": (1e-3, 5e-4, 2.5e-4, 1e-4),
    "transformer_scratch": (1e-3, 5e-4, 2.5e-4, 1e-4),
    "ngram_linear": (1.0, 0.3, 0.1),
}

DEFAULT_CHECKPOINT = "bert-base-chinese"


@dataclass(frozen=True)
class BackendConfig:
    """Everything a training run needs, recorded verbatim in the model manifest."""

    family: str
    checkpoint_id: str | None = None
    epochs: int = 100
    padding_size: int = 64
    learning_rate_grid: tuple[float, ...] = ()
    batch_size: int = 32
    seed: int = 0
    # architecture knobs for the from-scratch neural baselines
    embedding_dim: int = 128
    hidden_size: int = 128
    num_filters: int = 100
    kernel_sizes: tuple[int, ...] = (2, 3, 4)
    num_layers: int = 2
    num_heads: int = 4
    dropout: float = 0.1
    embedding_file: str | None = None
    ngram_range: tuple[int, int] = (1, 3)
    l2: float = 1e-4

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise InvalidConfig(f"unknown backend family {self.family!r}; expected one of {FAMILIES}")
        grid = tuple(float(lr) for lr in self.learning_rate_grid) or DEFAULT_GRIDS[self.family]
        object.__setattr__(self, "learning_rate_grid", grid)
        if not grid:
            raise InvalidConfig("learning_rate_grid must be non-empty")
        if any(lr <= 0 for lr in grid):
            raise InvalidConfig(f"learning rates must be positive, got {grid}")
        if self.epochs < 1:
            raise InvalidConfig(f"epochs must be >= 1, got {self.epochs}")
        if self.padding_size < 8:
            raise InvalidConfig(f"padding_size must be >= 8, got {self.padding_size}")
        if self.batch_size < 1:
            raise InvalidConfig(f"batch_size must be >= 1, got {self.batch_size}")
        if self.family == "pretrained_encoder" and not self.checkpoint_id:
            object.__setattr__(self, "checkpoint_id", DEFAULT_CHECKPOINT)

    def to_dict(self) -> dict[str, object]:
        return {
            "family": self.family,
            "checkpoint_id": self.checkpoint_id,
            "epochs": self.epochs,
            "padding_size": self.padding_size,
            "learning_rate_grid": list(self.learning_rate_grid),
            "batch_size": self.batch_size,
            "seed": self.seed,
            "embedding_dim": self.embedding_dim,
            "hidden_size": self.hidden_size,
            "num_filters": self.num_filters,
            "kernel_sizes": list(self.kernel_sizes),
            "num_layers": self.num_layers,
            "num_heads": self.num_heads,
            "dropout": self.dropout,
            "embedding_file": self.embedding_file,
            "ngram_range": list(self.ngram_range),
            "l2": self.l2,
        }

    @classmethod
    def from_dict(cls, d: dict[str, object]) -> "BackendConfig":
        kwargs = dict(d)
        for key in ("learning_rate_grid", "kernel_sizes", "ngram_range"):
            if key in kwargs and kwargs[key] is not None:
                kwargs[key] = tuple(kwargs[key])  # type: ignore[arg-type]
        return cls(**kwargs)  # type: ignore[arg-type]


@dataclass(frozen=True)
class DomainCorpus:
    """Unlabeled in-domain text lines used for further pretraining."""

    lines: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.lines:
            raise DataError("domain corpus is empty")

    def __len__(self) -> int:
        return len(self.lines)

    @classmethod
    def from_file(cls, path: str | Path) -> "DomainCorpus":
        lines = tuple(
            line.strip()
            for line in Path(path).read_text(encoding="utf-8").splitlines()
            if line.strip()
        )
        return cls(lines=lines)
