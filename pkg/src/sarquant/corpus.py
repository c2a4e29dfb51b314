"""Data model for multi-annotator sarcasm corpora.

A sentence is judged sarcastic/non-sarcastic by a quorum of A annotators
(11 by default); the aggregated label is the fraction of yes-votes, a
sarcasm level in [0, 1].  Files are UTF-8 JSON Lines; text is stored
verbatim, with no Unicode normalization.
"""

from __future__ import annotations

import json
import logging
import os
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, Sequence

from ._util import atomic_writer

logger = logging.getLogger(__name__)

DEFAULT_QUORUM = 11
#: Strict majority of an 11-annotator quorum; used for binary summaries.
DEFAULT_THRESHOLD = 6 / 11


class CorpusFormatError(ValueError):
    """Malformed corpus input; carries the offending line number if known."""

    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class Category(Enum):
    POLITICS = "politics"
    ENTERTAINMENT = "entertainment"
    PRODUCTS_SERVICES = "products_services"
    SPORTS = "sports"
    UNKNOWN = "unknown"

    @classmethod
    def parse(cls, raw: str) -> "Category":
        """Parse a category name; unrecognized values map to UNKNOWN with a warning."""
        key = raw.strip().lower().replace(" ", "_").replace("-", "_")
        if key == "products_and_services":
            key = "products_services"
        for member in cls:
            if member.value == key:
                return member
        logger.warning("unknown category %r, falling back to 'unknown'", raw)
        return cls.UNKNOWN


@dataclass(frozen=True)
class VoteRecord:
    """One sentence plus its per-annotator binary judgments."""

    id: str
    text: str
    category: Category
    votes: tuple[int, ...]


@dataclass(frozen=True)
class LabeledExample:
    """Sentence plus aggregated sarcasm level in [0, 1]."""

    id: str
    text: str
    category: Category
    label: float


@dataclass
class CorpusStats:
    total: int
    per_category: dict[str, int]
    #: Histogram over levels k/A, index k in 0..A.
    level_histogram: list[int]
    #: Count of examples with level >= threshold.
    sarcastic_count: int
    threshold: float
    quorum: int = DEFAULT_QUORUM


def aggregate_label(votes: Sequence[int]) -> float:
    """Fraction of yes-votes: (number of 1s) / (number of votes)."""
    if len(votes) == 0:
        raise ValueError("cannot aggregate an empty vote sequence")
    for position, vote in enumerate(votes, start=1):
        if vote not in (0, 1):
            raise ValueError(f"non-binary vote at position {position}")
    return sum(votes) / len(votes)


def parse_label_string(s: str, quorum: int = DEFAULT_QUORUM) -> float:
    """Parse a label written as "k/A", "1", or "0" into a level in [0, 1]."""
    text = s.strip()
    if "/" in text:
        num_str, _, den_str = text.partition("/")
        try:
            k, denominator = int(num_str), int(den_str)
        except ValueError:
            raise CorpusFormatError(f"malformed label {s!r}") from None
        if denominator != quorum:
            raise CorpusFormatError(
                f"label denominator {denominator} != quorum {quorum} in {s!r}"
            )
        if not 0 <= k <= quorum:
            raise CorpusFormatError(f"label numerator {k} out of range 0..{quorum}")
        return k / quorum
    try:
        value = int(text)
    except ValueError:
        raise CorpusFormatError(f"malformed label {s!r}") from None
    if value not in (0, 1):
        raise CorpusFormatError(f"integer label must be 0 or 1, got {value}")
    return float(value)


def format_label(level: float, quorum: int = DEFAULT_QUORUM) -> str:
    """Format a level k/A back to its "k/A" (or "0"/"1") string form."""
    k = round(level * quorum)
    if abs(level * quorum - k) > 1e-6 or not 0 <= k <= quorum:
        raise ValueError(f"level {level!r} is not a multiple of 1/{quorum}")
    if k == 0:
        return "0"
    if k == quorum:
        return "1"
    return f"{k}/{quorum}"


def binarize(level: float, threshold: float = DEFAULT_THRESHOLD) -> int:
    """Binary sarcastic/non-sarcastic view: 1 iff level >= threshold."""
    if not 0.0 <= level <= 1.0:
        raise ValueError(f"level {level} outside [0, 1]")
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold {threshold} outside (0, 1)")
    return 1 if level >= threshold else 0


def parse_vote_record(
    line: str,
    quorum: int = DEFAULT_QUORUM,
    line_number: int | None = None,
) -> VoteRecord:
    """Parse one votes-file JSON line into a validated VoteRecord."""
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise CorpusFormatError(f"malformed JSON: {exc.msg}", line_number) from None
    if not isinstance(obj, dict):
        raise CorpusFormatError("expected a JSON object", line_number)

    for field_name in ("id", "text", "category", "votes"):
        if field_name not in obj:
            raise CorpusFormatError(f"missing field {field_name!r}", line_number)

    record_id = obj["id"]
    if not isinstance(record_id, str) or not record_id:
        raise CorpusFormatError("field 'id' must be a non-empty string", line_number)
    text = obj["text"]
    if not isinstance(text, str):
        raise CorpusFormatError("field 'text' must be a string", line_number)
    if not isinstance(obj["category"], str):
        raise CorpusFormatError("field 'category' must be a string", line_number)

    votes = obj["votes"]
    if not isinstance(votes, list):
        raise CorpusFormatError("field 'votes' must be an array", line_number)
    if len(votes) != quorum:
        raise CorpusFormatError(
            f"vote count {len(votes)} != quorum {quorum}", line_number
        )
    for position, vote in enumerate(votes, start=1):
        if not isinstance(vote, int) or isinstance(vote, bool) or vote not in (0, 1):
            raise CorpusFormatError(f"non-binary vote at position {position}", line_number)

    return VoteRecord(
        id=record_id,
        text=text,
        category=Category.parse(obj["category"]),
        votes=tuple(votes),
    )


def load_vote_records(path: str | os.PathLike, quorum: int = DEFAULT_QUORUM) -> list[VoteRecord]:
    """Load a votes file; duplicate ids are a hard error."""
    records: list[VoteRecord] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            record = parse_vote_record(line, quorum=quorum, line_number=line_number)
            if record.id in seen:
                raise CorpusFormatError(f"duplicate id {record.id!r}", line_number)
            seen.add(record.id)
            records.append(record)
    return records


def aggregate_corpus(records: Iterable[VoteRecord]) -> list[LabeledExample]:
    """Aggregate vote records into labeled examples (level = yes-fraction)."""
    return [
        LabeledExample(
            id=record.id,
            text=record.text,
            category=record.category,
            label=aggregate_label(record.votes),
        )
        for record in records
    ]


def _parse_labeled_line(line: str, line_number: int | None = None) -> LabeledExample:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise CorpusFormatError(f"malformed JSON: {exc.msg}", line_number) from None
    if not isinstance(obj, dict):
        raise CorpusFormatError("expected a JSON object", line_number)
    for field_name in ("id", "text", "category", "label"):
        if field_name not in obj:
            raise CorpusFormatError(f"missing field {field_name!r}", line_number)
    if not isinstance(obj["id"], str) or not obj["id"]:
        raise CorpusFormatError("field 'id' must be a non-empty string", line_number)
    if not isinstance(obj["text"], str):
        raise CorpusFormatError("field 'text' must be a string", line_number)
    label = obj["label"]
    if isinstance(label, bool) or not isinstance(label, (int, float)):
        raise CorpusFormatError("field 'label' must be a number", line_number)
    if not 0.0 <= float(label) <= 1.0:
        raise CorpusFormatError(f"label {label} outside [0, 1]", line_number)
    return LabeledExample(
        id=obj["id"],
        text=obj["text"],
        category=Category.parse(obj["category"]),
        label=float(label),
    )


def load_corpus(path: str | os.PathLike) -> list[LabeledExample]:
    """Load an aggregated corpus file; duplicate ids are a hard error."""
    examples: list[LabeledExample] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            example = _parse_labeled_line(line, line_number)
            if example.id in seen:
                raise CorpusFormatError(f"duplicate id {example.id!r}", line_number)
            seen.add(example.id)
            examples.append(example)
    return examples


def labeled_example_to_json(example: LabeledExample) -> str:
    """Serialize one example to its JSON Lines form.

    Labels use Python's shortest round-trip float representation, which
    reconstructs the exact double on parse (so no precision is lost for
    any k/A value).
    """
    return json.dumps(
        {
            "id": example.id,
            "text": example.text,
            "category": example.category.value,
            "label": example.label,
        },
        ensure_ascii=False,
    )


def save_corpus(examples: Iterable[LabeledExample], path: str | os.PathLike) -> None:
    """Write an aggregated corpus file atomically."""
    with atomic_writer(path) as handle:
        for example in examples:
            handle.write(labeled_example_to_json(example) + "\n")


def corpus_stats(
    corpus: Sequence[LabeledExample],
    threshold: float = DEFAULT_THRESHOLD,
    quorum: int = DEFAULT_QUORUM,
) -> CorpusStats:
    """Counts per category, per level bin, and at the binary threshold."""
    if not corpus:
        raise ValueError("cannot compute stats of an empty corpus")
    per_category: Counter[str] = Counter()
    histogram = [0] * (quorum + 1)
    sarcastic = 0
    for example in corpus:
        per_category[example.category.value] += 1
        k = min(max(round(example.label * quorum), 0), quorum)
        histogram[k] += 1
        sarcastic += binarize(example.label, threshold)
    return CorpusStats(
        total=len(corpus),
        per_category=dict(per_category),
        level_histogram=histogram,
        sarcastic_count=sarcastic,
        threshold=threshold,
        quorum=quorum,
    )


def exact_level(yes_votes: int, quorum: int = DEFAULT_QUORUM) -> Fraction:
    """Exact rational sarcasm level k/A, for oracle-style comparisons."""
    if not 0 <= yes_votes <= quorum:
        raise ValueError(f"yes-vote count {yes_votes} out of range 0..{quorum}")
    return Fraction(yes_votes, quorum)
