"""Per-class precision/recall/F1 and the support-weighted F1.

For each category c, precision = N_correct/N_labeled, recall =
N_correct/N_true and F1 = 2PR/(P+R); the overall score is the support
(N_true) weighted mean of per-class F1. All values are computed as exact
rationals and only converted to floats at the report boundary.

Zero-denominator conventions (flagged per class in the report): P := 0 when
nothing was predicted as c, R := 0 when c has no gold examples, F1 := 0 when
P + R = 0. Classes with zero support carry zero weight in the average.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Sequence

from .errors import LengthMismatch
from .taxonomy import CATEGORIES, Category


@dataclass(frozen=True)
class ConfusionTally:
    """Raw per-category counts: predicted-as, gold, and both."""

    labeled: Mapping[Category, int]
    true: Mapping[Category, int]
    correct: Mapping[Category, int]
    total: int


def tally(preds: Sequence[Category], golds: Sequence[Category]) -> ConfusionTally:
    if len(preds) != len(golds):
        raise LengthMismatch(f"{len(preds)} predictions vs {len(golds)} gold labels")
    if not preds:
        raise LengthMismatch("need at least one (prediction, gold) pair")
    labeled = {c: 0 for c in CATEGORIES}
    true = {c: 0 for c in CATEGORIES}
    correct = {c: 0 for c in CATEGORIES}
    for p, g in zip(preds, golds):
        labeled[p] += 1
        true[g] += 1
        if p is g:
            correct[p] += 1
    return ConfusionTally(labeled=labeled, true=true, correct=correct, total=len(preds))


@dataclass(frozen=True)
class ClassMetrics:
    precision: Fraction
    recall: Fraction
    f1: Fraction
    support: int
    flags: tuple[str, ...] = ()


def per_class_prf(t: ConfusionTally) -> dict[Category, ClassMetrics]:
    out: dict[Category, ClassMetrics] = {}
    for c in CATEGORIES:
        n_correct = t.correct[c]
        n_labeled = t.labeled[c]
        n_true = t.true[c]
        flags: list[str] = []
        if n_labeled > 0:
            precision = Fraction(n_correct, n_labeled)
        else:
            precision = Fraction(0)
            flags.append("no_predictions")
        if n_true > 0:
            recall = Fraction(n_correct, n_true)
        else:
            recall = Fraction(0)
            flags.append("no_gold")
        if precision + recall > 0:
            f1 = 2 * precision * recall / (precision + recall)
        else:
            f1 = Fraction(0)
            flags.append("zero_pr")
        out[c] = ClassMetrics(
            precision=precision, recall=recall, f1=f1, support=n_true, flags=tuple(flags)
        )
    return out


def weighted_f1(per_class: Mapping[Category, ClassMetrics]) -> Fraction:
    total_support = sum(m.support for m in per_class.values())
    if total_support < 1:
        raise LengthMismatch("weighted F1 needs at least one gold example")
    return sum((m.support * m.f1 for m in per_class.values()), Fraction(0)) / total_support


@dataclass(frozen=True)
class EvalReport:
    """Per-class metrics plus the weighted F1, with exact internals."""

    per_class: Mapping[Category, ClassMetrics]
    weighted_f1: Fraction
    total: int

    @property
    def weighted_f1_float(self) -> float:
        return float(self.weighted_f1)

    def to_dict(self) -> dict[str, object]:
        return {
            "per_class": {
                c.render(): {
                    "precision": float(m.precision),
                    "recall": float(m.recall),
                    "f1": float(m.f1),
                    "support": m.support,
                    "flags": list(m.flags),
                }
                for c, m in self.per_class.items()
            },
            "weighted_f1": float(self.weighted_f1),
            "total": self.total,
        }

    def to_json(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), ensure_ascii=False, indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["category", "precision", "recall", "f1", "support"])
            for c in CATEGORIES:
                m = self.per_class[c]
                writer.writerow(
                    [c.render(), float(m.precision), float(m.recall), float(m.f1), m.support]
                )
            writer.writerow(["weighted_avg", "", "", float(self.weighted_f1), self.total])

    def summary_line(self) -> str:
        return f"weighted F1: {100 * float(self.weighted_f1):.2f}%  (n={self.total})"


def evaluate(preds: Sequence[Category], golds: Sequence[Category]) -> EvalReport:
    """One-shot tally + per-class metrics + weighted F1."""
    t = tally(preds, golds)
    per_class = per_class_prf(t)
    return EvalReport(per_class=per_class, weighted_f1=weighted_f1(per_class), total=t.total)
