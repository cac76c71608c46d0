"""Upstream feed ingestion and the key lifecycle: upsert, delete (ghost),
key reuse and rollback.

Feed lines are JSON objects::

    {"op": "upsert", "source": "P1", "schema": "legal_ecid", "key": "763810",
     "fields": {"Name": "ABC Corp", "Status": "A", "Country": "US"},
     "ts": "2012-09-12T00:00:00Z"}

An optional ``"awaits": {"kind": "P3:EC_Num", "value": "..."}`` holds the
event back (with ``hold_until``) until a W-tag of that kind carries that value.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Union

from . import errors

OPS = ("upsert", "delete", "reuse", "rollback")


@dataclass
class FeedEvent:
    op: str
    source: str
    schema: str
    key: str
    fields: dict = field(default_factory=dict)
    ts: Optional[str] = None
    awaits: Optional[dict] = None

    @classmethod
    def from_json(cls, doc: dict) -> "FeedEvent":
        if not isinstance(doc, dict):
            raise errors.FormatRejected("feed line must be a JSON object")
        missing = [k for k in ("op", "source", "schema", "key") if k not in doc]
        if missing:
            raise errors.FormatRejected(f"feed line lacks {', '.join(missing)}")
        if doc["op"] not in OPS:
            raise errors.FormatRejected(f"unknown feed op {doc['op']!r}")
        key = str(doc["key"]) if doc["key"] is not None else ""
        if not key:
            raise errors.FormatRejected("feed key must be non-empty")
        fields = doc.get("fields") or {}
        if not isinstance(fields, dict):
            raise errors.FormatRejected("fields must be an object")
        return cls(doc["op"], str(doc["source"]), str(doc["schema"]), key,
                   {str(k): (None if v is None else str(v)) for k, v in fields.items()},
                   doc.get("ts"), doc.get("awaits"))

    def to_json(self) -> dict:
        doc = {"op": self.op, "source": self.source, "schema": self.schema, "key": self.key,
               "fields": self.fields, "ts": self.ts}
        if self.awaits is not None:
            doc["awaits"] = self.awaits
        return doc


@dataclass
class IngestReport:
    applied: Counter = field(default_factory=Counter)
    errors: list = field(default_factory=list)
    held: list = field(default_factory=list)
    outcomes: list = field(default_factory=list)

    @property
    def error_counts(self) -> Counter:
        return Counter(e["code"] for e in self.errors)

    def to_dict(self) -> dict:
        return {"applied": dict(self.applied), "total": sum(self.applied.values()),
                "errors": self.errors, "error_counts": dict(self.error_counts),
                "held": self.held}


def key_ref(schema_id: int, key: str) -> str:
    return f"{schema_id}:{key}"


class FeedLoader:
    """Applies feed events for one process.

    Parameters
    ----------
    store : Store
    process_id : int
        Registered process authoring the mutations.
    rule_id : str, optional
        Business rule cited by every mutation; defaults to the first rule.
    mapping : dict, optional
        Feed field name -> schema column name, for feeds whose column names
        differ from the schema's.
    """

    def __init__(self, store, process_id: int, rule_id: Optional[str] = None,
                 mapping: Optional[dict] = None):
        self.store = store
        self.process_id = store.process_id(process_id)
        self.rule_id = store._check_actor(self.process_id, rule_id)
        self.mapping = dict(mapping or {})

    def _values(self, sch, event: FeedEvent) -> dict:
        values = {}
        for name, v in event.fields.items():
            values[self.mapping.get(name, name)] = v
        key_name = self.store.qualified_name(sch.key_kind_id)
        values[key_name] = event.key
        return values

    def _bind(self, ref: str, row: int, history: list) -> None:
        self.store._emit("bind_key", {"key": ref, "row": row, "history": history},
                         affected={"key": [ref], "shadow": [row] + history},
                         summary=f"key {ref} -> shadow {row}")

    def apply(self, event: FeedEvent) -> dict:
        store = self.store
        with store.transaction(self.process_id, self.rule_id, source=event.source):
            sch = store.schema(event.schema)
            ref = key_ref(sch.schema_id, event.key)
            bound = store.state.feed_keys.get(ref)
            outcome = {"op": event.op, "key": event.key, "schema": sch.name}
            if event.op == "upsert":
                if bound is None:
                    row = store.load_row(sch.schema_id, self._values(sch, event))
                    self._bind(ref, row, [])
                    outcome.update(row=row, created=True)
                else:
                    row = bound["row"]
                    if store.shadow(row).archived:
                        raise errors.AlreadyArchived(
                            f"key {event.key} is deleted; send rollback or reuse",
                            key=event.key)
                    store.update_row(sch.schema_id, row, self._values(sch, event))
                    outcome.update(row=row, created=False)
            elif bound is None:
                raise errors.UnknownKey(f"key {event.key!r} was never loaded into {sch.name}",
                                        key=event.key)
            elif event.op == "delete":
                receipt = store.archive_values(bound["row"], cascade=True)
                outcome.update(row=bound["row"], archived=receipt["shadow_ids"])
            elif event.op == "rollback":
                receipt = store.restore_values(bound["row"], cascade=True)
                outcome.update(row=bound["row"], restored=receipt["shadow_ids"])
            else:  # reuse
                old = bound["row"]
                if not store.shadow(old).archived:
                    store.archive_values(old, cascade=True)
                row = store.load_row(sch.schema_id, self._values(sch, event))
                self._bind(ref, row, bound["history"] + [old])
                outcome.update(row=row, previous=old)
            row_wid = store.wid_for(outcome["row"], sch.root_kind_id)
            outcome["wid"] = row_wid
            return outcome

    def ready(self, event: FeedEvent) -> bool:
        if not event.awaits:
            return True
        store = self.store
        try:
            kid = store.kind_id(event.awaits["kind"])
        except errors.ShadowError:
            return False
        want = str(event.awaits.get("value"))
        return any(store.value_of(w) == want for w in store.wids_of_kind(kid))


def apply_event(store, event: Union[FeedEvent, dict], process_id: int,
                rule_id: Optional[str] = None) -> dict:
    if isinstance(event, dict):
        event = FeedEvent.from_json(event)
    return FeedLoader(store, process_id, rule_id).apply(event)


def _lines(source) -> Iterable[tuple[int, str]]:
    if isinstance(source, Path):
        text = source.read_text("utf-8")
    elif isinstance(source, str):
        text = source
    else:
        text = source.read()
    for n, line in enumerate(text.splitlines(), 1):
        if line.strip():
            yield n, line


def load_feed(store, source, process_id: int, *, rule_id: Optional[str] = None,
              mapping: Optional[dict] = None, strict: bool = False,
              hold_until: bool = False) -> IngestReport:
    """Apply a JSON-lines feed in file order.

    ``source`` is a :class:`~pathlib.Path`, an open file, or the feed text.

    Malformed lines and rejected events are recorded in the report and
    skipped; in ``strict`` mode the first one is raised instead. With
    ``hold_until`` events whose ``awaits`` target is missing are buffered
    and retried after every applied event.
    """
    loader = FeedLoader(store, process_id, rule_id, mapping)
    report = IngestReport()
    buffer: list = []

    def attempt(n: int, event: FeedEvent) -> bool:
        try:
            report.outcomes.append(loader.apply(event))
        except errors.ShadowError as exc:
            if strict:
                raise
            report.errors.append({"line": n, "code": exc.code, "message": exc.message})
            return False
        report.applied[event.op] += 1
        return True

    def drain() -> None:
        progress = True
        while progress and buffer:
            progress = False
            for item in list(buffer):
                if loader.ready(item[1]):
                    buffer.remove(item)
                    attempt(*item)
                    progress = True

    for n, line in _lines(source):
        try:
            event = FeedEvent.from_json(json.loads(line))
        except (ValueError, errors.ShadowError) as exc:
            if strict:
                raise errors.FormatRejected(f"line {n}: {exc}", line=n) from exc
            code = exc.code if isinstance(exc, errors.ShadowError) else "E_MALFORMED"
            report.errors.append({"line": n, "code": code, "message": str(exc)})
            continue
        if hold_until and not loader.ready(event):
            buffer.append((n, event))
            continue
        if attempt(n, event):
            drain()
    report.held = [{"line": n, "key": e.key, "awaits": e.awaits} for n, e in buffer]
    return report
