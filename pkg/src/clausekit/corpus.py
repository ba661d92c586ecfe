"""Ingestion of raw regulatory documents: cleaning and clause segmentation.

Documents arrive as plain-text files (one document per file, UTF-8) plus a
sidecar JSON metadata file. Cleaning is pattern-driven: an ordered set of
keep/drop predicates removes front matter (editor names, departments),
table fragments and garbled-symbol lines while preserving the provisions
themselves and their source line numbers. Segmentation then merges
continuation lines into the provision they belong to, so each clause is one
semantically complete unit.
"""

from __future__ import annotations

import enum
import json
import re
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import DataError, EmptyAfterCleaning


class CodeLevel(enum.Enum):
    """Standard level of a building code: national, industrial or local."""

    GB = "GB"
    HB = "HB"
    DB = "DB"

    @classmethod
    def parse(cls, token: str) -> "CodeLevel":
        try:
            return cls(token.upper())
        except ValueError:
            raise ValueError(f"unknown code level {token!r}; expected GB, HB or DB") from None


@dataclass(frozen=True)
class CodeMeta:
    """Descriptive metadata for one building code."""

    title: str
    level: CodeLevel
    domain_tag: str
    year: int | None = None

    @classmethod
    def from_dict(cls, d: Mapping[str, object]) -> "CodeMeta":
        return cls(
            title=str(d.get("title", "")),
            level=CodeLevel.parse(str(d["level"])),
            domain_tag=str(d.get("domain_tag", "")),
            year=int(d["year"]) if d.get("year") is not None else None,
        )

    def to_dict(self) -> dict[str, object]:
        return {
            "title": self.title,
            "level": self.level.value,
            "domain_tag": self.domain_tag,
            "year": self.year,
        }


@dataclass(frozen=True)
class RawDocument:
    """A document as a sequence of text lines, each traceable to its source line.

    ``line_numbers`` holds the 1-based position of every line in the original
    file; cleaning preserves this mapping so surviving lines stay traceable.
    """

    doc_id: str
    lines: tuple[str, ...]
    meta: CodeMeta
    line_numbers: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if not self.line_numbers:
            object.__setattr__(self, "line_numbers", tuple(range(1, len(self.lines) + 1)))
        if len(self.line_numbers) != len(self.lines):
            raise DataError(
                f"{self.doc_id}: {len(self.lines)} lines but {len(self.line_numbers)} line numbers"
            )


@dataclass(frozen=True)
class Clause:
    """One normative provision after cleaning, merging and normalization."""

    clause_id: str
    doc_id: str
    text: str
    first_line: int
    last_line: int

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise DataError(f"{self.clause_id}: clause text is empty")
        if "\n" in self.text:
            raise DataError(f"{self.clause_id}: clause text contains a line break")

    def to_dict(self) -> dict[str, object]:
        return {
            "clause_id": self.clause_id,
            "doc_id": self.doc_id,
            "text": self.text,
            "first_line": self.first_line,
            "last_line": self.last_line,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, object]) -> "Clause":
        return cls(
            clause_id=str(d["clause_id"]),
            doc_id=str(d["doc_id"]),
            text=str(d["text"]),
            first_line=int(d.get("first_line", 0)),
            last_line=int(d.get("last_line", 0)),
        )


# --- cleaning ---------------------------------------------------------------

# Front matter that crawled Chinese codes typically carry: approval notices,
# editor/department rosters, publishing info, tables of contents.
DEFAULT_DROP_PATTERNS: tuple[str, ...] = (
    r"主编单位|参编单位|主编部门|批准部门|施行日期|发布日期|实施日期",
    r"主要起草人|主要起草单位|主要审查人|参加起草|编制组成员|编制单位",
    r"出版社|定价|统一书号|书号|印刷|开本",
    r"^\s*(目\s*次|目\s*录|前\s*言|修订说明|编制说明|本规范用词说明|条文说明)\s*$",
    r"^\s*中华人民共和国(国家标准|行业标准|地方标准)\s*$",
    r"^\s*第?\s*[-—–]?\s*\d+\s*[-—–]?\s*页?\s*$",  # bare page numbers
)

# Lines worth keeping even if a drop rule matches (none by default).
DEFAULT_KEEP_PATTERNS: tuple[str, ...] = ()

_CJK_RE = re.compile(r"[一-鿿㐀-䶿]")
_WORD_RE = re.compile(r"[一-鿿㐀-䶿A-Za-z0-9]")


def _cjk_ratio(line: str) -> float:
    stripped = re.sub(r"\s", "", line)
    if not stripped:
        return 0.0
    return len(_CJK_RE.findall(stripped)) / len(stripped)


def _wordlike_ratio(line: str) -> float:
    """Share of characters that are CJK, ASCII letters or digits; low values
    indicate garbled symbol runs."""
    stripped = re.sub(r"\s", "", line)
    if not stripped:
        return 0.0
    return len(_WORD_RE.findall(stripped)) / len(stripped)


def _looks_like_table_fragment(line: str) -> bool:
    """Table rows flattened to text: several cells separated by runs of
    whitespace or pipes, mostly short numeric/label tokens."""
    if "|" in line and line.count("|") >= 2:
        return True
    cells = re.split(r"[\t　]| {2,}", line.strip())
    cells = [c for c in cells if c]
    if len(cells) >= 3:
        shortish = sum(1 for c in cells if len(c) <= 6)
        numericish = sum(1 for c in cells if re.fullmatch(r"[\d.%×xX~\-–—/]+", c))
        if numericish >= 2 or (shortish == len(cells) and numericish >= 1):
            return True
    return False


@dataclass(frozen=True)
class CleaningConfig:
    """Ordered keep/drop predicates applied line-by-line.

    Evaluation order per line: blank lines always drop; keep patterns
    override everything else; then drop patterns, the garbled-symbol ratio,
    the table-fragment heuristic and the minimum CJK ratio apply. Per-line
    predicates make cleaning idempotent by construction.
    """

    drop_patterns: tuple[str, ...] = DEFAULT_DROP_PATTERNS
    keep_patterns: tuple[str, ...] = DEFAULT_KEEP_PATTERNS
    min_wordlike_ratio: float = 0.35
    drop_table_fragments: bool = True
    min_cjk_ratio: float = 0.0
    min_line_chars: int = 2

    def __post_init__(self) -> None:
        object.__setattr__(self, "_drop_res", tuple(re.compile(p) for p in self.drop_patterns))
        object.__setattr__(self, "_keep_res", tuple(re.compile(p) for p in self.keep_patterns))

    def keeps(self, line: str) -> bool:
        stripped = line.strip()
        if not stripped:
            return False
        for rx in self._keep_res:  # type: ignore[attr-defined]
            if rx.search(line):
                return True
        if len(re.sub(r"\s", "", stripped)) < self.min_line_chars:
            return False
        for rx in self._drop_res:  # type: ignore[attr-defined]
            if rx.search(line):
                return False
        if _wordlike_ratio(line) < self.min_wordlike_ratio:
            return False
        if self.drop_table_fragments and _looks_like_table_fragment(line):
            return False
        if self.min_cjk_ratio > 0 and _cjk_ratio(line) < self.min_cjk_ratio:
            return False
        return True

    @classmethod
    def from_dict(cls, d: Mapping[str, object]) -> "CleaningConfig":
        kwargs: dict[str, object] = {}
        for key in (
            "drop_patterns",
            "keep_patterns",
            "min_wordlike_ratio",
            "drop_table_fragments",
            "min_cjk_ratio",
            "min_line_chars",
        ):
            if key in d:
                value = d[key]
                if key.endswith("_patterns"):
                    value = tuple(str(v) for v in value)  # type: ignore[union-attr]
                kwargs[key] = value
        return cls(**kwargs)  # type: ignore[arg-type]


def clean_document(raw: RawDocument, rules: CleaningConfig | None = None) -> RawDocument:
    """Drop non-normative lines, keeping order and source line numbers.

    Raises :class:`EmptyAfterCleaning` when nothing survives.
    """
    if not raw.lines:
        raise EmptyAfterCleaning(f"{raw.doc_id}: document has no lines")
    rules = rules or CleaningConfig()
    kept: list[str] = []
    kept_numbers: list[int] = []
    for line, number in zip(raw.lines, raw.line_numbers):
        if rules.keeps(line):
            kept.append(line)
            kept_numbers.append(number)
    if not kept:
        raise EmptyAfterCleaning(
            f"{raw.doc_id}: no lines survived cleaning "
            f"({len(raw.lines)} in); check the input or relax the rules"
        )
    return RawDocument(
        doc_id=raw.doc_id, lines=tuple(kept), meta=raw.meta, line_numbers=tuple(kept_numbers)
    )


# --- segmentation -----------------------------------------------------------

# A new clause starts at a provision number ("3.2.7", "第3.2.7条"), a chapter
# or appendix heading, or a list marker; anything else continues the previous
# clause (sentences wrapped across lines).
_CLAUSE_START_RES: tuple[re.Pattern[str], ...] = (
    re.compile(r"^\s*第?\d+(?:[.．]\s?\d+)+\s*条?"),  # 3.2.7 / 第3.2.7条
    re.compile(r"^\s*\d+\s+\S"),  # chapter heading: "3 厂房"
    re.compile(r"^\s*第[一二三四五六七八九十百\d]+[章节条款]"),
    re.compile(r"^\s*附\s*录\s*[A-Z一二三四五六七八九十]?"),
    re.compile(r"^\s*[（(]\d+[)）]"),  # (1) （2）
    re.compile(r"^\s*\d+[)）]\s*\S"),
    re.compile(r"^\s*[一二三四五六七八九十]+[、.．]"),
)


def starts_new_clause(line: str) -> bool:
    return any(rx.match(line) for rx in _CLAUSE_START_RES)


def normalize_clause_text(text: str) -> str:
    """NFC normalization, full-width spaces to ASCII, whitespace collapsed."""
    text = unicodedata.normalize("NFC", text)
    text = text.replace("　", " ")
    text = re.sub(r"\s+", " ", text)
    return text.strip()


def segment_clauses(doc: RawDocument) -> list[Clause]:
    """Split a cleaned document into clauses, merging continuation lines.

    Clause ids are dense ordinals over the document; an empty document yields
    an empty list.
    """
    clauses: list[Clause] = []
    pieces: list[str] = []
    first = last = 0

    def flush() -> None:
        if not pieces:
            return
        text = normalize_clause_text(" ".join(pieces))
        if not text:
            pieces.clear()
            return
        ordinal = len(clauses) + 1
        clauses.append(
            Clause(
                clause_id=f"{doc.doc_id}:{ordinal:04d}",
                doc_id=doc.doc_id,
                text=text,
                first_line=first,
                last_line=last,
            )
        )
        pieces.clear()

    for line, number in zip(doc.lines, doc.line_numbers):
        if starts_new_clause(line) or not pieces:
            flush()
            first = number
        pieces.append(line)
        last = number
    flush()
    return clauses


# --- file loading -----------------------------------------------------------


def load_document(path: str | Path, meta: CodeMeta, doc_id: str | None = None) -> RawDocument:
    """Read one UTF-8 text file as a RawDocument; doc_id defaults to the stem."""
    p = Path(path)
    text = p.read_text(encoding="utf-8")
    lines = tuple(text.splitlines())
    return RawDocument(doc_id=doc_id or p.stem, lines=lines, meta=meta)


def load_meta_file(path: str | Path) -> dict[str, CodeMeta]:
    """Read the sidecar metadata JSON: a mapping of doc_id to metadata fields."""
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if not isinstance(payload, dict):
        raise DataError(f"{path}: metadata file must be a JSON object keyed by doc_id")
    metas: dict[str, CodeMeta] = {}
    for doc_id, entry in payload.items():
        try:
            metas[doc_id] = CodeMeta.from_dict(entry)
        except (KeyError, ValueError) as exc:
            raise DataError(f"{path}: bad metadata for {doc_id!r}: {exc}") from exc
    return metas


def write_clauses_jsonl(clauses: Iterable[Clause], path: str | Path) -> int:
    """Write clauses to JSONL; returns the number written."""
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for clause in clauses:
            fh.write(json.dumps(clause.to_dict(), ensure_ascii=False) + "\n")
            n += 1
    return n


def read_clauses_jsonl(path: str | Path) -> list[Clause]:
    clauses: list[Clause] = []
    with open(path, encoding="utf-8") as fh:
        for i, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                clauses.append(Clause.from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError) as exc:
                raise DataError(f"{path}:{i}: bad clause record: {exc}") from exc
    return clauses
