"""Annotation-collection service core: sentences, votes, quorum, event log.

The append-only event log is the single source of truth; the in-memory
state is a cache rebuilt by replaying the log.  Every mutation is
validated, appended durably (flush + fsync), and only then applied and
acknowledged.  A single lock serializes mutations, so a sentence can
never collect more than the quorum of votes or two votes from the same
annotator, no matter how many clients submit concurrently.
"""

from __future__ import annotations

import json
import os
import threading
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Iterator

from .corpus import aggregate_label

EVENT_KINDS = ("import", "vote")


class ServiceError(Exception):
    """Base class for request-level service failures."""


class NotFoundError(ServiceError):
    pass


class ConflictError(ServiceError):
    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind


class ValidationError(ServiceError):
    pass


class LogCorruptionError(RuntimeError):
    """The event log cannot be replayed; refuse to start."""


@dataclass
class Sentence:
    id: str
    text: str
    category: str
    order: int
    votes: dict[str, int] = field(default_factory=dict)

    def is_complete(self, quorum: int) -> bool:
        return len(self.votes) >= quorum

    def status(self, quorum: int) -> str:
        return "complete" if self.is_complete(quorum) else "open"


@dataclass
class Progress:
    total: int
    complete: int
    total_votes: int
    per_annotator: dict[str, int]

    def as_dict(self) -> dict:
        return {
            "total": self.total,
            "complete": self.complete,
            "total_votes": self.total_votes,
            "per_annotator": self.per_annotator,
        }


def parse_sentences_jsonl(text: str) -> list[dict]:
    """Parse an import payload (JSON Lines of {"id","text","category"})."""
    items: list[dict] = []
    for line_number, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"line {line_number}: malformed JSON: {exc.msg}") from None
        if not isinstance(obj, dict):
            raise ValidationError(f"line {line_number}: expected a JSON object")
        for name in ("id", "text", "category"):
            if name not in obj:
                raise ValidationError(f"line {line_number}: missing field {name!r}")
            if not isinstance(obj[name], str):
                raise ValidationError(f"line {line_number}: field {name!r} must be a string")
        if not obj["id"]:
            raise ValidationError(f"line {line_number}: field 'id' must be non-empty")
        items.append({"id": obj["id"], "text": obj["text"], "category": obj["category"]})
    return items


def read_events(path: str | os.PathLike) -> list[dict]:
    """Read and strictly validate an event log.

    Sequence numbers must be gap-free from 1; any unparsable or
    malformed line (including a torn final write) refuses the whole log.
    """
    events: list[dict] = []
    expected_seq = 1
    with open(path, encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            stripped = line.strip()
            if not stripped:
                raise LogCorruptionError(
                    f"event log line {line_number}: unexpected blank line"
                )
            try:
                event = json.loads(stripped)
            except json.JSONDecodeError:
                raise LogCorruptionError(
                    f"event log line {line_number}: unparsable event "
                    f"(expected seq {expected_seq}); the log may be truncated"
                ) from None
            if not isinstance(event, dict):
                raise LogCorruptionError(f"event log line {line_number}: not an object")
            seq = event.get("seq")
            if seq != expected_seq:
                raise LogCorruptionError(
                    f"event log line {line_number}: sequence number {seq!r}, "
                    f"expected {expected_seq}"
                )
            if event.get("kind") not in EVENT_KINDS:
                raise LogCorruptionError(
                    f"event log line {line_number}: unknown kind {event.get('kind')!r}"
                )
            if not isinstance(event.get("payload"), dict):
                raise LogCorruptionError(f"event log line {line_number}: missing payload")
            events.append(event)
            expected_seq += 1
    return events


class EventLog:
    """Append-only JSON Lines event log with fsync-before-acknowledge."""

    def __init__(self, path: str | os.PathLike):
        self.path = os.fspath(path)
        existing = read_events(self.path) if os.path.exists(self.path) else []
        self._seq = len(existing)
        self._events = existing
        self._handle = open(self.path, "a", encoding="utf-8", newline="\n")

    def append(self, kind: str, payload: dict) -> dict:
        self._seq += 1
        event = {
            "seq": self._seq,
            "kind": kind,
            "payload": payload,
            "ts": datetime.now(timezone.utc).isoformat(),
        }
        self._handle.write(json.dumps(event, ensure_ascii=False) + "\n")
        self._handle.flush()
        os.fsync(self._handle.fileno())
        return event

    def replayed_events(self) -> list[dict]:
        """Events that were already in the log when it was opened."""
        return self._events

    def close(self) -> None:
        self._handle.close()


class AnnotationService:
    """In-memory annotation state, rebuilt from and persisted to an event log."""

    def __init__(self, log: EventLog | None = None, quorum: int = 11):
        if quorum < 1:
            raise ValueError("quorum must be >= 1")
        self.quorum = quorum
        self._log = log
        self._lock = threading.Lock()
        self._sentences: dict[str, Sentence] = {}
        self._order: list[str] = []
        if log is not None:
            for event in log.replayed_events():
                self._apply(event)

    @classmethod
    def open(cls, data_dir: str | os.PathLike, quorum: int = 11) -> "AnnotationService":
        """Open (or create) a service rooted at data_dir/events.jsonl."""
        os.makedirs(data_dir, exist_ok=True)
        log = EventLog(os.path.join(os.fspath(data_dir), "events.jsonl"))
        return cls(log=log, quorum=quorum)

    @classmethod
    def replay(cls, log_path: str | os.PathLike, quorum: int = 11) -> "AnnotationService":
        """Rebuild state from an existing log without opening it for writes."""
        service = cls(log=None, quorum=quorum)
        for event in read_events(log_path):
            service._apply(event)
        return service

    # -- event application (shared by live mutations and replay) --

    def _apply(self, event: dict) -> None:
        payload = event["payload"]
        if event["kind"] == "import":
            for item in payload["sentences"]:
                sentence = Sentence(
                    id=item["id"],
                    text=item["text"],
                    category=item["category"],
                    order=len(self._order),
                )
                self._sentences[sentence.id] = sentence
                self._order.append(sentence.id)
        elif event["kind"] == "vote":
            sentence = self._sentences[payload["sentence_id"]]
            sentence.votes[payload["annotator"]] = payload["value"]

    def _record(self, kind: str, payload: dict) -> None:
        if self._log is not None:
            event = self._log.append(kind, payload)
        else:
            event = {"seq": 0, "kind": kind, "payload": payload, "ts": ""}
        self._apply(event)

    # -- mutations --

    def import_sentences(self, items: list[dict]) -> int:
        """Register new open sentences; the whole batch is atomic."""
        with self._lock:
            seen: set[str] = set()
            for item in items:
                for name in ("id", "text", "category"):
                    if not isinstance(item.get(name), str):
                        raise ValidationError(f"sentence field {name!r} must be a string")
                sid = item["id"]
                if not sid:
                    raise ValidationError("sentence field 'id' must be non-empty")
                if sid in self._sentences or sid in seen:
                    raise ConflictError("duplicate_id", f"duplicate sentence id {sid!r}")
                seen.add(sid)
            if items:
                self._record("import", {"sentences": items})
            return len(items)

    def submit_vote(self, annotator: str, sentence_id: str, value: int) -> None:
        """Record one binary vote; flips the sentence to complete at quorum."""
        if not annotator:
            raise ValidationError("annotator name must be non-empty")
        if value not in (0, 1):
            raise ValidationError(f"vote value must be 0 or 1, got {value!r}")
        with self._lock:
            sentence = self._sentences.get(sentence_id)
            if sentence is None:
                raise NotFoundError(f"unknown sentence {sentence_id!r}")
            if sentence.is_complete(self.quorum):
                raise ConflictError("complete", f"sentence {sentence_id!r} already complete")
            if annotator in sentence.votes:
                raise ConflictError(
                    "duplicate_vote",
                    f"annotator {annotator!r} already voted on {sentence_id!r}",
                )
            self._record(
                "vote",
                {"annotator": annotator, "sentence_id": sentence_id, "value": value},
            )

    # -- reads --

    def next_task(self, annotator: str) -> Sentence | None:
        """Least-voted open sentence this annotator has not judged yet,
        ties broken by import order."""
        if not annotator:
            raise ValidationError("annotator name must be non-empty")
        with self._lock:
            best: Sentence | None = None
            for sid in self._order:
                sentence = self._sentences[sid]
                if sentence.is_complete(self.quorum) or annotator in sentence.votes:
                    continue
                if best is None or len(sentence.votes) < len(best.votes):
                    best = sentence
            return best

    def progress(self) -> Progress:
        with self._lock:
            per_annotator: Counter[str] = Counter()
            complete = 0
            total_votes = 0
            for sentence in self._sentences.values():
                total_votes += len(sentence.votes)
                if sentence.is_complete(self.quorum):
                    complete += 1
                for name in sentence.votes:
                    per_annotator[name] += 1
            return Progress(
                total=len(self._sentences),
                complete=complete,
                total_votes=total_votes,
                per_annotator=dict(per_annotator),
            )

    def export_corpus(self, include_partial: bool = False) -> Iterator[str]:
        """Aggregated-corpus JSON Lines for complete sentences.

        With include_partial, sentences with at least one vote are also
        emitted, labeled with their current yes-fraction and marked
        partial; zero-vote sentences have no defined fraction and are
        always skipped.
        """
        with self._lock:
            snapshot = [
                (sid, self._sentences[sid].text, self._sentences[sid].category,
                 dict(self._sentences[sid].votes))
                for sid in self._order
            ]
        for sid, text, category, votes in snapshot:
            complete = len(votes) >= self.quorum
            if not complete and not include_partial:
                continue
            if not votes:
                continue
            ordered = [votes[name] for name in sorted(votes)]
            doc = {
                "id": sid,
                "text": text,
                "category": category,
                "label": aggregate_label(ordered),
            }
            if not complete:
                doc["partial"] = True
            yield json.dumps(doc, ensure_ascii=False)

    def close(self) -> None:
        if self._log is not None:
            self._log.close()
