"""Labeled clause dataset: load/save, augmentation, balance, splitting.

Augmentation generates new examples by replacing numeric values and
comparison-operator phrases only; everything else in the sentence is kept
verbatim, so the label is preserved by construction. Splits are seeded and
reproducible, with ratios held as exact rationals.
"""

from __future__ import annotations

import hashlib
import json
import random
import re
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Literal, Mapping, Sequence

from .corpus import Clause
from .errors import DataError, DatasetIntegrityError, NoReplaceableToken, RatioError
from .taxonomy import CATEGORIES, Category

Provenance = Literal["manual", "augmented"]


@dataclass(frozen=True)
class LabeledClause:
    """A clause with its category label and its origin."""

    clause: Clause
    label: Category
    provenance: Provenance = "manual"
    parent_id: str | None = None

    def __post_init__(self) -> None:
        if self.provenance not in ("manual", "augmented"):
            raise DatasetIntegrityError(f"bad provenance {self.provenance!r}")
        if (self.parent_id is not None) != (self.provenance == "augmented"):
            raise DatasetIntegrityError(
                f"{self.clause.clause_id}: parent_id must be set iff provenance is 'augmented'"
            )

    @property
    def clause_id(self) -> str:
        return self.clause.clause_id

    @property
    def text(self) -> str:
        return self.clause.text

    def to_dict(self) -> dict[str, object]:
        return {
            "clause_id": self.clause.clause_id,
            "doc_id": self.clause.doc_id,
            "text": self.clause.text,
            "label": self.label.render(),
            "provenance": self.provenance,
            "parent_id": self.parent_id,
        }


class Dataset:
    """Immutable collection of labeled clauses.

    ``check_lineage=True`` (the default for full datasets) additionally
    verifies that every augmented example points at a manual parent present
    in the dataset and carries the parent's label. Split parts are built
    without the lineage check since a parent may land in another part.
    """

    def __init__(self, examples: Iterable[LabeledClause], *, check_lineage: bool = True):
        self.examples: tuple[LabeledClause, ...] = tuple(examples)
        seen: set[str] = set()
        for ex in self.examples:
            if ex.clause_id in seen:
                raise DatasetIntegrityError(f"duplicate clause_id {ex.clause_id!r}")
            seen.add(ex.clause_id)
        if check_lineage:
            by_id = {ex.clause_id: ex for ex in self.examples}
            for ex in self.examples:
                if ex.provenance != "augmented":
                    continue
                parent = by_id.get(ex.parent_id or "")
                if parent is None:
                    raise DatasetIntegrityError(
                        f"{ex.clause_id}: augmented example references missing parent {ex.parent_id!r}"
                    )
                if parent.provenance != "manual":
                    raise DatasetIntegrityError(
                        f"{ex.clause_id}: parent {ex.parent_id!r} is not a manual example"
                    )
                if parent.label is not ex.label:
                    raise DatasetIntegrityError(
                        f"{ex.clause_id}: label {ex.label} differs from parent label {parent.label}"
                    )

    def __len__(self) -> int:
        return len(self.examples)

    def __iter__(self):
        return iter(self.examples)

    def texts(self) -> list[str]:
        return [ex.text for ex in self.examples]

    def labels(self) -> list[Category]:
        return [ex.label for ex in self.examples]

    def class_counts(self) -> dict[Category, int]:
        counts = {c: 0 for c in CATEGORIES}
        for ex in self.examples:
            counts[ex.label] += 1
        return counts

    def clause_ids(self) -> set[str]:
        return {ex.clause_id for ex in self.examples}


@dataclass(frozen=True)
class BalanceReport:
    """Per-category example counts, split by provenance."""

    manual: Mapping[Category, int]
    augmented: Mapping[Category, int]

    @property
    def total(self) -> Mapping[Category, int]:
        return {c: self.manual[c] + self.augmented[c] for c in CATEGORIES}

    @property
    def manual_total(self) -> int:
        return sum(self.manual.values())

    @property
    def augmented_total(self) -> int:
        return sum(self.augmented.values())

    @property
    def grand_total(self) -> int:
        return self.manual_total + self.augmented_total

    def to_dict(self) -> dict[str, object]:
        return {
            "manual": {c.render(): self.manual[c] for c in CATEGORIES},
            "augmented": {c.render(): self.augmented[c] for c in CATEGORIES},
            "total": {c.render(): self.total[c] for c in CATEGORIES},
            "manual_total": self.manual_total,
            "augmented_total": self.augmented_total,
            "grand_total": self.grand_total,
        }


def balance_report(ds: Dataset) -> BalanceReport:
    manual = {c: 0 for c in CATEGORIES}
    augmented = {c: 0 for c in CATEGORIES}
    for ex in ds.examples:
        bucket = manual if ex.provenance == "manual" else augmented
        bucket[ex.label] += 1
    return BalanceReport(manual=manual, augmented=augmented)


# --- augmentation -----------------------------------------------------------

# Interchangeable comparison-operator phrases, grouped by language so a swap
# stays within its own group. Longest phrase wins at any match position.
DEFAULT_COMPARATOR_GROUPS: tuple[tuple[str, ...], ...] = (
    ("not less than", "not greater than", "less than", "more than", "equal to"),
    ("不大于", "不小于", "不应大于", "不应小于", "不宜大于", "不宜小于", "大于", "小于", "等于"),
)

_NUMBER_RE = re.compile(r"\d+(?:\.\d+)?")


@dataclass(frozen=True)
class AugmentConfig:
    """Knobs for value/comparator replacement."""

    magnitude_band: tuple[float, float] = (0.1, 10.0)
    comparator_groups: tuple[tuple[str, ...], ...] = DEFAULT_COMPARATOR_GROUPS
    max_attempts: int = 40

    def comparator_pattern(self) -> re.Pattern[str]:
        phrases = [p for group in self.comparator_groups for p in group]
        phrases.sort(key=len, reverse=True)
        parts = []
        for p in phrases:
            escaped = re.escape(p)
            if re.fullmatch(r"[A-Za-z ]+", p):
                escaped = rf"\b{escaped}\b"
            parts.append(escaped)
        return re.compile("|".join(parts))

    def group_for(self, phrase: str) -> tuple[str, ...]:
        for group in self.comparator_groups:
            if phrase in group:
                return group
        return ()


def _replacement_number(token: str, rng: random.Random, band: tuple[float, float]) -> str:
    """Fresh number of the same lexical shape: integers stay integers and
    decimals keep their precision; drawn from a magnitude band around the
    original value."""
    lo_f, hi_f = band
    value = float(token)
    if "." in token:
        decimals = len(token.split(".")[1])
        lo = value * lo_f if value > 0 else 0.1
        hi = value * hi_f if value > 0 else 10.0
        for _ in range(20):
            candidate = f"{rng.uniform(lo, hi):.{decimals}f}"
            if candidate != token and float(candidate) > 0:
                return candidate
        return f"{value + 10 ** -decimals:.{decimals}f}"
    ivalue = int(token)
    lo_i = max(1, round(ivalue * lo_f)) if ivalue > 0 else 1
    hi_i = max(lo_i + 1, round(ivalue * hi_f)) if ivalue > 0 else 10
    for _ in range(20):
        candidate = str(rng.randint(lo_i, hi_i))
        if candidate != token:
            return candidate
    return str(ivalue + 1)


def _replaceable_tokens(
    text: str, cfg: AugmentConfig
) -> tuple[list[re.Match[str]], list[re.Match[str]]]:
    numbers = list(_NUMBER_RE.finditer(text))
    comparators = [
        m for m in cfg.comparator_pattern().finditer(text) if cfg.group_for(m.group())
    ]
    if not numbers and not comparators:
        raise NoReplaceableToken(
            f"no numeric literal or comparator phrase in: {text[:60]!r}"
        )
    return numbers, comparators


def _one_variant(text: str, rng: random.Random, cfg: AugmentConfig) -> str:
    numbers, comparators = _replaceable_tokens(text, cfg)

    replace_numbers: list[re.Match[str]] = []
    if numbers:
        replace_numbers = [m for m in numbers if rng.random() < 0.5]
    swap_comparator = bool(comparators) and (rng.random() < 0.5 or not replace_numbers)
    if not replace_numbers and not swap_comparator:
        replace_numbers = [rng.choice(numbers)]

    edits: list[tuple[int, int, str]] = []
    for m in replace_numbers:
        edits.append((m.start(), m.end(), _replacement_number(m.group(), rng, cfg.magnitude_band)))
    if swap_comparator:
        m = rng.choice(comparators)
        group = cfg.group_for(m.group())
        alternatives = [p for p in group if p != m.group()]
        if alternatives:
            edits.append((m.start(), m.end(), rng.choice(alternatives)))

    out = text
    for start, end, new in sorted(edits, reverse=True):
        out = out[:start] + new + out[end:]
    return out


def augment(
    example: LabeledClause,
    rng_seed: int,
    n: int,
    lexicons: AugmentConfig | None = None,
) -> list[LabeledClause]:
    """Generate up to ``n`` augmented variants of a manual example.

    Each variant differs from the parent only in numeric values and/or one
    comparator phrase; label and the rest of the token stream are preserved.
    Deterministic for a given seed. Raises :class:`NoReplaceableToken` when
    the text offers nothing to replace.
    """
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    if example.provenance != "manual":
        raise DataError(f"{example.clause_id}: only manual examples can be augmented")
    cfg = lexicons or AugmentConfig()
    _replaceable_tokens(example.text, cfg)  # unsuitable examples fail even for n=0
    if n == 0:
        return []
    rng = random.Random(rng_seed)
    seen = {example.text}
    children: list[LabeledClause] = []
    attempts = 0
    while len(children) < n and attempts < cfg.max_attempts * n:
        attempts += 1
        variant = _one_variant(example.text, rng, cfg)
        if variant in seen:
            continue
        seen.add(variant)
        k = len(children) + 1
        child_clause = replace(
            example.clause,
            clause_id=f"{example.clause_id}~aug{k}",
            text=variant,
        )
        children.append(
            LabeledClause(
                clause=child_clause,
                label=example.label,
                provenance="augmented",
                parent_id=example.clause_id,
            )
        )
    return children


def derive_seed(base_seed: int, clause_id: str) -> int:
    """Stable per-example seed so augmentation over many parents can run in
    parallel without sharing RNG state."""
    digest = hashlib.sha256(f"{base_seed}:{clause_id}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def augment_dataset(
    ds: Dataset,
    base_seed: int,
    per_example: int,
    categories: Sequence[Category] = (Category.DIRECT, Category.INDIRECT),
    lexicons: AugmentConfig | None = None,
) -> Dataset:
    """Augment every manual example of the target categories.

    Examples without replaceable tokens are skipped. Augmented texts that
    duplicate anything already in the dataset (or each other) are dropped to
    avoid leaking identical strings across later splits.
    """
    existing_texts = {ex.text for ex in ds.examples}
    out = list(ds.examples)
    wanted = set(categories)
    for ex in ds.examples:
        if ex.provenance != "manual" or ex.label not in wanted:
            continue
        try:
            children = augment(ex, derive_seed(base_seed, ex.clause_id), per_example, lexicons)
        except NoReplaceableToken:
            continue
        for child in children:
            if child.text in existing_texts:
                continue
            existing_texts.add(child.text)
            out.append(child)
    return Dataset(out)


# --- splitting ----------------------------------------------------------------


def _as_fraction(r: float | str | Fraction) -> Fraction:
    if isinstance(r, Fraction):
        return r
    if isinstance(r, str):
        return Fraction(r)
    return Fraction(str(r))


@dataclass(frozen=True)
class SplitSpec:
    """Train/val/test ratios (exact rationals summing to 1) plus a seed."""

    ratios: tuple[Fraction, Fraction, Fraction]
    seed: int = 0
    stratified: bool = False

    def __post_init__(self) -> None:
        if len(self.ratios) != 3:
            raise RatioError(f"need exactly 3 ratios, got {len(self.ratios)}")
        ratios = tuple(_as_fraction(r) for r in self.ratios)
        object.__setattr__(self, "ratios", ratios)
        if any(r <= 0 for r in ratios):
            raise RatioError(f"all ratios must be > 0, got {ratios}")
        if sum(ratios) != 1:
            raise RatioError(f"ratios must sum to exactly 1, got {ratios} (sum {sum(ratios)})")

    @classmethod
    def of(
        cls,
        train: float | str = "0.8",
        val: float | str = "0.1",
        test: float | str = "0.1",
        seed: int = 0,
        stratified: bool = False,
    ) -> "SplitSpec":
        return cls(
            ratios=(_as_fraction(train), _as_fraction(val), _as_fraction(test)),
            seed=seed,
            stratified=stratified,
        )


def _part_sizes(n: int, ratios: tuple[Fraction, Fraction, Fraction]) -> tuple[int, int, int]:
    # floor each share, then hand the remainder out train-first
    sizes = [int(r * n) for r in ratios]
    remainder = n - sum(sizes)
    for i in range(remainder):
        sizes[i % 3] += 1
    return sizes[0], sizes[1], sizes[2]


def split(ds: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset, Dataset]:
    """Seeded random partition into train/val/test.

    The three parts are disjoint and exhaustive; sizes follow the ratios with
    the rounding remainder assigned train-first. Stratified mode applies the
    same rule per category.
    """
    n = len(ds)
    if n < 10:
        raise DataError(f"need at least 10 examples to split, got {n}")
    rng = random.Random(spec.seed)

    def partition(indices: list[int]) -> tuple[list[int], list[int], list[int]]:
        order = list(indices)
        rng.shuffle(order)
        n_train, n_val, _ = _part_sizes(len(order), spec.ratios)
        return (
            order[:n_train],
            order[n_train : n_train + n_val],
            order[n_train + n_val :],
        )

    if spec.stratified:
        train_idx: list[int] = []
        val_idx: list[int] = []
        test_idx: list[int] = []
        for cat in CATEGORIES:
            members = [i for i, ex in enumerate(ds.examples) if ex.label is cat]
            if not members:
                continue
            tr, va, te = partition(members)
            train_idx += tr
            val_idx += va
            test_idx += te
    else:
        train_idx, val_idx, test_idx = partition(list(range(n)))

    def take(indices: list[int]) -> Dataset:
        return Dataset((ds.examples[i] for i in indices), check_lineage=False)

    return take(train_idx), take(val_idx), take(test_idx)


# --- JSONL serialization ------------------------------------------------------

_FIELDS = ("clause_id", "doc_id", "text", "label", "provenance", "parent_id")


def save_jsonl(ds: Dataset, path: str | Path) -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for ex in ds.examples:
            fh.write(json.dumps(ex.to_dict(), ensure_ascii=False) + "\n")
            n += 1
    return n


def load_jsonl(
    path: str | Path,
    field_map: Mapping[str, str] | None = None,
    label_map: Mapping[str, str] | None = None,
    check_lineage: bool = True,
) -> Dataset:
    """Load a dataset from JSONL.

    ``field_map`` renames foreign field names onto ours (e.g.
    ``{"sentence": "text", "category": "label"}``) so externally published
    datasets can be loaded after a one-time mapping; ``label_map`` rewrites
    foreign label values onto the seven canonical tokens.
    """
    examples: list[LabeledClause] = []
    with open(path, encoding="utf-8") as fh:
        for i, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{i}: not valid JSON: {exc}") from exc
            if field_map:
                rec = {field_map.get(k, k): v for k, v in rec.items()}
            try:
                raw_label = str(rec["label"])
                if label_map:
                    raw_label = label_map.get(raw_label, raw_label)
                label = Category.parse(raw_label)
                clause = Clause(
                    clause_id=str(rec.get("clause_id", f"{Path(path).stem}:{i:04d}")),
                    doc_id=str(rec.get("doc_id", Path(path).stem)),
                    text=str(rec["text"]),
                    first_line=int(rec.get("first_line", 0)),
                    last_line=int(rec.get("last_line", 0)),
                )
                examples.append(
                    LabeledClause(
                        clause=clause,
                        label=label,
                        provenance=rec.get("provenance", "manual"),
                        parent_id=rec.get("parent_id"),
                    )
                )
            except (KeyError, ValueError) as exc:
                raise DataError(f"{path}:{i}: bad record: {exc}") from exc
    return Dataset(examples, check_lineage=check_lineage)
