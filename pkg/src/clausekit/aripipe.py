"""Pre-interpretation filtering and the before/after success-rate experiment.

Clauses predicted into the hard group (general, term, other) are excluded
before a downstream rule interpreter runs; the harness measures the success
percentage over all clauses versus over the kept ones. The interpreter is
injected behind a one-method port so any external system (or the built-in
scriptable mock) can be plugged in; "successful" and "correct" are collapsed
into one binary outcome per clause.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Protocol, Sequence

from .corpus import Clause
from .errors import DataError, LengthMismatch
from .taxonomy import CATEGORIES, Category, InterpretabilityGroup, group_of

#: Categories whose clauses are forwarded to the interpreter.
KEPT_CATEGORIES: tuple[Category, ...] = tuple(
    c for c in CATEGORIES if group_of(c) is not InterpretabilityGroup.HARD
)


class InterpreterPort(Protocol):
    """External rule interpreter: one clause in, success or failure out.

    Implementations must be deterministic per clause.
    """

    def interpret(self, clause: Clause) -> bool: ...


class MockInterpreter:
    """Scriptable mock: outcomes looked up by clause_id, default failure."""

    def __init__(self, outcomes: Mapping[str, bool] | None = None, default: bool = False):
        self._outcomes = dict(outcomes or {})
        self._default = default

    def interpret(self, clause: Clause) -> bool:
        return self._outcomes.get(clause.clause_id, self._default)

    @classmethod
    def from_jsonl(cls, path: str | Path, default: bool = False) -> "MockInterpreter":
        """Load a script file of {clause_id, outcome} records, outcome one of
        "success"/"failure"."""
        outcomes: dict[str, bool] = {}
        with open(path, encoding="utf-8") as fh:
            for i, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    rec = json.loads(line)
                    outcome = str(rec["outcome"]).lower()
                    if outcome not in ("success", "failure"):
                        raise ValueError(f"outcome must be success/failure, got {outcome!r}")
                    outcomes[str(rec["clause_id"])] = outcome == "success"
                except (json.JSONDecodeError, KeyError, ValueError) as exc:
                    raise DataError(f"{path}:{i}: bad outcome record: {exc}") from exc
        return cls(outcomes, default=default)


def filter_interpretable(
    clauses: Sequence[Clause], predictions: Sequence[Category]
) -> list[Clause]:
    """Keep clauses predicted direct/indirect/method/reference, in order."""
    if len(clauses) != len(predictions):
        raise LengthMismatch(f"{len(clauses)} clauses vs {len(predictions)} predictions")
    kept_set = set(KEPT_CATEGORIES)
    return [cl for cl, cat in zip(clauses, predictions) if cat in kept_set]


def _round_half_up_pct(numerator: int, denominator: int) -> int:
    """Integer headline percent, halves rounding up, computed exactly."""
    if denominator == 0:
        return 0
    pct = Fraction(100 * numerator, denominator)
    floor = pct.numerator // pct.denominator
    return floor + (1 if 2 * (pct - floor) >= 1 else 0)


@dataclass(frozen=True)
class FilterReport:
    """Before/after interpretation outcomes plus per-category keep tallies."""

    input_count_before: int
    success_count_before: int
    kept_count: int
    success_count_after: int
    kept_by_category: Mapping[Category, int]
    dropped_by_category: Mapping[Category, int]

    def __post_init__(self) -> None:
        if self.kept_count > self.input_count_before:
            raise DataError("kept count exceeds input count")
        if self.success_count_after > self.success_count_before:
            raise DataError("after-filter successes exceed before-filter successes")

    @classmethod
    def from_counts(
        cls,
        input_count_before: int,
        success_count_before: int,
        kept_count: int,
        success_count_after: int,
        kept_by_category: Mapping[Category, int] | None = None,
        dropped_by_category: Mapping[Category, int] | None = None,
    ) -> "FilterReport":
        empty = {c: 0 for c in CATEGORIES}
        return cls(
            input_count_before=input_count_before,
            success_count_before=success_count_before,
            kept_count=kept_count,
            success_count_after=success_count_after,
            kept_by_category=dict(kept_by_category or empty),
            dropped_by_category=dict(dropped_by_category or empty),
        )

    @property
    def pct_before_exact(self) -> Fraction:
        return Fraction(100 * self.success_count_before, self.input_count_before)

    @property
    def pct_after_exact(self) -> Fraction:
        if self.kept_count == 0:
            return Fraction(0)
        return Fraction(100 * self.success_count_after, self.kept_count)

    @property
    def pct_before(self) -> int:
        """Headline integer percentage."""
        return _round_half_up_pct(self.success_count_before, self.input_count_before)

    @property
    def pct_after(self) -> int:
        return _round_half_up_pct(self.success_count_after, self.kept_count)

    def to_dict(self) -> dict[str, object]:
        return {
            "before": {
                "input_clauses": self.input_count_before,
                "successful_clauses": self.success_count_before,
                "pct_successful": self.pct_before,
                "pct_successful_exact": float(self.pct_before_exact),
            },
            "after": {
                "input_clauses": self.kept_count,
                "successful_clauses": self.success_count_after,
                "pct_successful": self.pct_after,
                "pct_successful_exact": float(self.pct_after_exact),
            },
            "kept_by_category": {c.render(): self.kept_by_category.get(c, 0) for c in CATEGORIES},
            "dropped_by_category": {
                c.render(): self.dropped_by_category.get(c, 0) for c in CATEGORIES
            },
        }

    def to_json(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), ensure_ascii=False, indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )

    def to_csv(self, path: str | Path) -> None:
        """Two data rows: before and after filtering."""
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["stage", "input_clauses", "successful_clauses", "pct_successful"])
            writer.writerow(
                ["before", self.input_count_before, self.success_count_before, self.pct_before]
            )
            writer.writerow(["after", self.kept_count, self.success_count_after, self.pct_after])


class ClauseClassifier(Protocol):
    """The slice of a trained classifier this harness needs."""

    def predict(self, texts: Sequence[str]) -> list[tuple[Category, float]]: ...


def run_filter_experiment(
    clauses: Sequence[Clause],
    classifier: ClauseClassifier,
    interpreter: InterpreterPort,
) -> FilterReport:
    """Classify, interpret everything, filter, and compare success rates."""
    if not clauses:
        raise DataError("no clauses supplied to the filter experiment")
    predictions = [cat for cat, _ in classifier.predict([c.text for c in clauses])]
    return experiment_from_predictions(clauses, predictions, interpreter)


def experiment_from_predictions(
    clauses: Sequence[Clause],
    predictions: Sequence[Category],
    interpreter: InterpreterPort,
) -> FilterReport:
    """Experiment core, reusable when predictions are already on disk.

    The interpreter runs once per clause (its contract is deterministic per
    clause, so the after-filter pass reuses the recorded outcome); an
    exception from the port counts as a failure outcome for that clause.
    """
    if not clauses:
        raise DataError("no clauses supplied to the filter experiment")
    if len(clauses) != len(predictions):
        raise LengthMismatch(f"{len(clauses)} clauses vs {len(predictions)} predictions")

    outcomes: list[bool] = []
    for clause in clauses:
        try:
            outcomes.append(bool(interpreter.interpret(clause)))
        except Exception:
            outcomes.append(False)

    kept_set = set(KEPT_CATEGORIES)
    kept_by_category = {c: 0 for c in CATEGORIES}
    dropped_by_category = {c: 0 for c in CATEGORIES}
    success_before = 0
    kept_count = 0
    success_after = 0
    for cat, ok in zip(predictions, outcomes):
        success_before += ok
        if cat in kept_set:
            kept_by_category[cat] += 1
            kept_count += 1
            success_after += ok
        else:
            dropped_by_category[cat] += 1

    return FilterReport(
        input_count_before=len(clauses),
        success_count_before=success_before,
        kept_count=kept_count,
        success_count_after=success_after,
        kept_by_category=kept_by_category,
        dropped_by_category=dropped_by_category,
    )
