"""The seven clause categories and their interpretability groups.

Categories describe what a compliance checker would need in order to turn a
clause into an executable rule; each category maps to one of three
interpretability groups, and each group carries an exact per-clause score
(1, 1/2 or 0). Scores are kept as :class:`fractions.Fraction` so that
document-level sums are reproducible bit-exactly; they are converted to
floats only when a report is rendered.
"""

from __future__ import annotations

import enum
from fractions import Fraction


class Category(enum.Enum):
    """The seven clause categories, in canonical (tie-breaking) order."""

    DIRECT = "direct"
    INDIRECT = "indirect"
    METHOD = "method"
    REFERENCE = "reference"
    GENERAL = "general"
    TERM = "term"
    OTHER = "other"

    def __str__(self) -> str:
        return self.value

    @property
    def ordinal(self) -> int:
        """Position in canonical order; lowest ordinal wins argmax ties."""
        return CATEGORIES.index(self)

    @classmethod
    def parse(cls, token: str) -> "Category":
        """Parse a lowercase ASCII token (the serialized form) back to a category."""
        try:
            return cls(token)
        except ValueError:
            valid = ", ".join(c.value for c in cls)
            raise ValueError(f"unknown category {token!r}; expected one of: {valid}") from None

    def render(self) -> str:
        """Serialized form: the lowercase token used in JSONL and CSV files."""
        return self.value


#: Canonical category order used everywhere a stable ordering is needed.
CATEGORIES: tuple[Category, ...] = tuple(Category)


class InterpretabilityGroup(enum.Enum):
    """Three-way grouping of the categories by how hard a clause is to interpret."""

    EASY = "easy"
    MEDIUM = "medium"
    HARD = "hard"

    @property
    def score(self) -> Fraction:
        """Exact per-clause score: easy=1, medium=1/2, hard=0."""
        return _GROUP_SCORES[self]


_GROUP_SCORES: dict[InterpretabilityGroup, Fraction] = {
    InterpretabilityGroup.EASY: Fraction(1),
    InterpretabilityGroup.MEDIUM: Fraction(1, 2),
    InterpretabilityGroup.HARD: Fraction(0),
}

_CATEGORY_GROUPS: dict[Category, InterpretabilityGroup] = {
    Category.DIRECT: InterpretabilityGroup.EASY,
    Category.INDIRECT: InterpretabilityGroup.EASY,
    Category.METHOD: InterpretabilityGroup.MEDIUM,
    Category.REFERENCE: InterpretabilityGroup.MEDIUM,
    Category.GENERAL: InterpretabilityGroup.HARD,
    Category.TERM: InterpretabilityGroup.HARD,
    Category.OTHER: InterpretabilityGroup.HARD,
}


def group_of(category: Category) -> InterpretabilityGroup:
    """Interpretability group of a category (total function on the enum)."""
    return _CATEGORY_GROUPS[category]


def clause_score(category: Category) -> Fraction:
    """Exact score contributed by one clause of the given category."""
    return group_of(category).score
