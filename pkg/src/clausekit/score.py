"""Document-level interpretability score and corpus-level aggregation.

A document's total score is the sum of its clauses' scores (1 per easy
clause, 1/2 per medium, 0 per hard); its interpretability is that total
over the clause count, as a percentage. The clause count is the number of
segmented clauses fed to the classifier. Aggregation reports both a
clause-weighted average (pooling all clauses of a group) and a code-mean
average (mean over documents), since either reading of a group average is
defensible; reports carry both.

All arithmetic is exact (rationals); floats appear only in rendered output.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import CodeMeta
from .errors import EmptyDocument, MissingMeta
from .taxonomy import CATEGORIES, Category, clause_score


@dataclass(frozen=True)
class DocumentScore:
    """Eq-style score for one document: counts, exact total, percentage."""

    doc_id: str
    clause_count: int
    category_counts: Mapping[Category, int]
    total_score: Fraction

    @property
    def interpretability(self) -> Fraction:
        """Exact percentage in [0, 100]."""
        return 100 * self.total_score / self.clause_count

    @property
    def interpretability_pct(self) -> float:
        return float(self.interpretability)

    def to_dict(self) -> dict[str, object]:
        return {
            "doc_id": self.doc_id,
            "clause_count": self.clause_count,
            "category_counts": {c.render(): self.category_counts[c] for c in CATEGORIES},
            "total_score": str(self.total_score),
            "interpretability_pct": float(self.interpretability),
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, object]) -> "DocumentScore":
        counts = {
            Category.parse(k): int(v)
            for k, v in dict(d["category_counts"]).items()  # type: ignore[arg-type]
        }
        counts = {c: counts.get(c, 0) for c in CATEGORIES}
        return cls(
            doc_id=str(d["doc_id"]),
            clause_count=int(d["clause_count"]),
            category_counts=counts,
            total_score=Fraction(str(d["total_score"])),
        )


def score_document(categories: Sequence[Category], doc_id: str = "") -> DocumentScore:
    """Score one document from its per-clause predicted categories."""
    if not categories:
        raise EmptyDocument(f"{doc_id or 'document'}: no clauses to score")
    counts = {c: 0 for c in CATEGORIES}
    for cat in categories:
        counts[cat] += 1
    total = sum((counts[c] * clause_score(c) for c in CATEGORIES), Fraction(0))
    return DocumentScore(
        doc_id=doc_id,
        clause_count=len(categories),
        category_counts=counts,
        total_score=total,
    )


def score_from_counts(counts: Mapping[Category, int], doc_id: str = "") -> DocumentScore:
    """Score directly from category counts (equivalent to clause-by-clause)."""
    full = {c: int(counts.get(c, 0)) for c in CATEGORIES}
    n = sum(full.values())
    if n == 0:
        raise EmptyDocument(f"{doc_id or 'document'}: no clauses to score")
    total = sum((full[c] * clause_score(c) for c in CATEGORIES), Fraction(0))
    return DocumentScore(doc_id=doc_id, clause_count=n, category_counts=full, total_score=total)


def highly_interpretable_fraction(
    scores: Sequence[DocumentScore], threshold_pct: float | Fraction = 50
) -> Fraction:
    """Fraction of documents strictly above the threshold percentage."""
    if not scores:
        raise EmptyDocument("no document scores supplied")
    threshold = Fraction(str(threshold_pct)) if not isinstance(threshold_pct, Fraction) else threshold_pct
    hits = sum(1 for s in scores if s.interpretability > threshold)
    return Fraction(hits, len(scores))


@dataclass(frozen=True)
class CorpusRow:
    """One aggregation row: a (domain, level) group, a per-level total, or the
    overall row."""

    domain: str
    level: str
    codes: int
    clauses: int
    clause_weighted: Fraction  # percent
    code_mean: Fraction  # percent
    max_pct: Fraction  # percent
    highly_interpretable: Fraction  # fraction of codes in [0, 1]

    def to_dict(self) -> dict[str, object]:
        return {
            "domain": self.domain,
            "level": self.level,
            "codes": self.codes,
            "clauses": self.clauses,
            "interp_clause_weighted_pct": float(self.clause_weighted),
            "interp_code_mean_pct": float(self.code_mean),
            "max_pct": float(self.max_pct),
            "highly_interpretable_frac": float(self.highly_interpretable),
        }


CSV_COLUMNS = (
    "domain",
    "level",
    "codes",
    "clauses",
    "interp_clause_weighted_pct",
    "interp_code_mean_pct",
    "max_pct",
    "highly_interpretable_frac",
)


@dataclass(frozen=True)
class CorpusReport:
    rows: tuple[CorpusRow, ...]

    def to_dict(self) -> dict[str, object]:
        return {"rows": [r.to_dict() for r in self.rows]}

    def to_json(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), ensure_ascii=False, indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )

    def to_csv(self, path: str | Path) -> None:
        # percentages at 2 decimals, fractions at 4
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for r in self.rows:
                writer.writerow(
                    [
                        r.domain,
                        r.level,
                        r.codes,
                        r.clauses,
                        f"{float(r.clause_weighted):.2f}",
                        f"{float(r.code_mean):.2f}",
                        f"{float(r.max_pct):.2f}",
                        f"{float(r.highly_interpretable):.4f}",
                    ]
                )


def _make_row(domain: str, level: str, members: Sequence[DocumentScore]) -> CorpusRow:
    clauses = sum(s.clause_count for s in members)
    total_score = sum((s.total_score for s in members), Fraction(0))
    clause_weighted = 100 * total_score / clauses
    code_mean = sum((s.interpretability for s in members), Fraction(0)) / len(members)
    return CorpusRow(
        domain=domain,
        level=level,
        codes=len(members),
        clauses=clauses,
        clause_weighted=clause_weighted,
        code_mean=code_mean,
        max_pct=max(s.interpretability for s in members),
        highly_interpretable=highly_interpretable_fraction(members),
    )


def aggregate(
    scores: Sequence[DocumentScore], metas: Mapping[str, CodeMeta]
) -> CorpusReport:
    """Aggregate document scores by (domain, level), with per-level totals and
    an overall row. Rows are ordered domain-then-level, deterministically."""
    if not scores:
        raise EmptyDocument("no document scores to aggregate")
    for s in scores:
        if s.doc_id not in metas:
            raise MissingMeta(f"no metadata for document {s.doc_id!r}")

    groups: dict[tuple[str, str], list[DocumentScore]] = {}
    by_level: dict[str, list[DocumentScore]] = {}
    for s in scores:
        meta = metas[s.doc_id]
        key = (meta.domain_tag, meta.level.value)
        groups.setdefault(key, []).append(s)
        by_level.setdefault(meta.level.value, []).append(s)

    rows = [
        _make_row(domain, level, members)
        for (domain, level), members in sorted(groups.items())
    ]
    rows += [
        _make_row("Total", level, members) for level, members in sorted(by_level.items())
    ]
    rows.append(_make_row("All", "All", list(scores)))
    return CorpusReport(rows=tuple(rows))


def write_scores_json(scores: Iterable[DocumentScore], path: str | Path) -> None:
    payload = [s.to_dict() for s in scores]
    Path(path).write_text(
        json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )


def read_scores_json(path: str | Path) -> list[DocumentScore]:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return [DocumentScore.from_dict(d) for d in payload]
