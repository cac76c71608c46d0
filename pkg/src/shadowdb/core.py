"""Event-sourced store core: state container, single-writer transactions and
the append-only JSON-lines change log.

Every mutation is a :class:`~shadowdb.records.ChangeEvent`. A command method
validates its input, allocates ids, then calls :meth:`StoreCore._emit`, which
applies the event through an ``_apply_<op>`` handler. Handlers never validate:
replaying a log re-runs only the handlers, so the log is the source of truth.
"""

from __future__ import annotations

import copy
import dataclasses
import json
import os
import threading
from collections import defaultdict
from contextlib import contextmanager
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable, Optional

from . import errors
from .records import ChangeEvent, Process

SYSTEM_PROCESS_ID = 0
SYSTEM_RULE_ID = "admin"
DEFAULT_SAFETY_CAP = 10_000

_COUNTERS = ("shadow", "wid", "relation", "etag", "kind", "perspective",
             "ptag", "schema", "process")


def default_clock() -> str:
    fixed = os.environ.get("SHADOW_FIXED_CLOCK")
    if fixed:
        return fixed
    return datetime.now(timezone.utc).isoformat(timespec="microseconds")


class State:
    """Mutable store state plus lookup indexes.

    Only the record tables and counters are serialised; the indexes are
    rebuilt by the handlers on replay.
    """

    TABLES = ("shadows", "perspectives", "kinds", "wtags", "relations", "ptags",
              "schemas", "etags", "processes")

    def __init__(self):
        self.shadows = {}
        self.perspectives = {}
        self.kinds = {}
        self.wtags = {}
        self.relations = {}
        self.ptags = {}
        self.schemas = {}
        self.etags = {}
        self.processes = {
            SYSTEM_PROCESS_ID: Process(SYSTEM_PROCESS_ID, "system",
                                       [[SYSTEM_RULE_ID, "store administration"]]),
        }
        # "schema_id:key" -> {"row": shadow_id, "history": [shadow_id, ...]}
        self.feed_keys = {}
        # materialisation key -> wid (derivations, projections, joins)
        self.memo = {}
        self.counters = {name: 1 for name in _COUNTERS}

        self.wids_by_shadow = defaultdict(list)
        self.wids_by_kind = defaultdict(list)
        self.child_rels = defaultdict(list)    # parent id -> relation ids
        self.parent_rels = defaultdict(list)   # child id -> relation ids
        self.kind_child_rels = defaultdict(list)
        self.kind_parent_rels = defaultdict(list)
        self.etags_by_wid = defaultdict(list)
        self.shadow_parents = defaultdict(list)
        self.perspective_by_name = {}
        self.kind_by_name = {}
        self.process_by_name = {"system": SYSTEM_PROCESS_ID}
        self.schema_by_name = {}
        self.ptag_by_name = {}

    def allocate(self, counter: str) -> int:
        return self.counters[counter]

    def bump(self, counter: str, used: int) -> None:
        if used >= self.counters[counter]:
            self.counters[counter] = used + 1

    def dump(self) -> dict:
        doc = {}
        for table in self.TABLES:
            rows = getattr(self, table)
            doc[table] = [dataclasses.asdict(rows[k]) for k in sorted(rows)]
        doc["feed_keys"] = {k: self.feed_keys[k] for k in sorted(self.feed_keys)}
        doc["memo"] = {k: self.memo[k] for k in sorted(self.memo)}
        doc["counters"] = dict(sorted(self.counters.items()))
        return doc


def canonical_bytes(doc) -> bytes:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"),
                      ensure_ascii=False).encode("utf-8")


class StoreCore:
    """Single-writer event-sourced store.

    Parameters
    ----------
    path : path-like, optional
        JSON-lines log file. Existing logs are replayed on open; committed
        events are appended. ``None`` keeps the store in memory.
    clock : callable, optional
        Returns ISO-8601 timestamps. Defaults to UTC now, or the value of
        ``SHADOW_FIXED_CLOCK`` when set.
    safety_cap : int
        Step limit for graph traversals before :class:`ResourceLimit`.
    """

    def __init__(self, path=None, *, clock: Optional[Callable[[], str]] = None,
                 safety_cap: int = DEFAULT_SAFETY_CAP):
        if safety_cap < 1:
            raise ValueError("safety cap must be >= 1")
        self.state = State()
        self.log: list[ChangeEvent] = []
        self.path = Path(path) if path is not None else None
        self.clock = clock or default_clock
        self.safety_cap = safety_cap
        self.read_only = False
        self._lock = threading.RLock()
        self._pending: Optional[list[ChangeEvent]] = None
        self._actor: Optional[tuple[int, str, Optional[str]]] = None
        self._txn_shadows: set[int] = set()
        self._default_actor: Optional[tuple[int, Optional[str]]] = None
        if self.path is not None and self.path.exists():
            for line_no, line in enumerate(self.path.read_text("utf-8").splitlines(), 1):
                if not line.strip():
                    continue
                self._replay_one(ChangeEvent.from_json(json.loads(line)))

    # -- construction helpers -------------------------------------------

    @classmethod
    def replay(cls, events: Iterable[ChangeEvent], **kwargs):
        """Build an in-memory store by re-applying ``events`` in order."""
        store = cls(**kwargs)
        for event in events:
            store._replay_one(ChangeEvent.from_json(copy.deepcopy(event.to_json())))
        return store

    def snapshot(self):
        """Immutable copy for readers; safe to share across threads."""
        with self._lock:
            snap = copy.copy(self)
            snap.__dict__ = dict(self.__dict__)
            snap.state = copy.deepcopy(self.state)
            snap.log = list(self.log)
            snap.path = None
            snap.read_only = True
            snap._lock = threading.RLock()
            snap._pending = None
            snap._actor = None
            snap._txn_shadows = set()
        return snap

    def fork(self):
        """Writable in-memory copy, used for what-if checks."""
        snap = self.snapshot()
        snap.read_only = False
        return snap

    def dump_state(self) -> bytes:
        return canonical_bytes(self.state.dump())

    def use_process(self, process_id: int, rule_id: Optional[str] = None) -> None:
        """Set the actor used when a mutation is issued outside a transaction."""
        self._check_actor(process_id, rule_id)
        self._default_actor = (process_id, rule_id)

    # -- transactions ------------------------------------------------------

    def _check_actor(self, process_id: int, rule_id: Optional[str]) -> str:
        proc = self.state.processes.get(process_id)
        if proc is None:
            raise errors.UnregisteredProcess(f"process {process_id!r} is not registered")
        if rule_id is None:
            return proc.rules[0][0]
        if rule_id not in {r[0] for r in proc.rules}:
            raise errors.RuleUnknown(f"rule {rule_id!r} is not registered for {proc.name}",
                                     process_id=process_id, rule_id=rule_id)
        return rule_id

    @property
    def in_transaction(self) -> bool:
        return self._pending is not None

    @contextmanager
    def transaction(self, process_id: Optional[int] = None, rule_id: Optional[str] = None,
                    *, source: Optional[str] = None):
        """Open (or join) a write transaction.

        On exit every shadow created inside must carry at least one W-tag,
        otherwise the whole transaction is rolled back and
        :class:`UntaggedShadow` is raised.
        """
        if self.read_only:
            raise errors.Conflict("snapshot is read-only")
        with self._lock:
            if self._pending is not None:
                outer = self._actor
                if process_id is not None:
                    rid = self._check_actor(process_id, rule_id)
                    self._actor = (process_id, rid, source if source is not None else outer[2])
                try:
                    yield self
                finally:
                    self._actor = outer
                return
            if process_id is None:
                if self._default_actor is None:
                    raise errors.NoTransaction("no process given and no default process set")
                process_id, rule_id = self._default_actor
            rid = self._check_actor(process_id, rule_id)
            self._pending = []
            self._actor = (process_id, rid, source)
            self._txn_shadows = set()
            try:
                yield self
                self._commit()
            except BaseException:
                self._rollback()
                raise
            finally:
                self._pending = None
                self._actor = None
                self._txn_shadows = set()

    def _commit(self) -> None:
        untagged = sorted(sid for sid in self._txn_shadows
                          if sid in self.state.shadows and not self.state.wids_by_shadow.get(sid))
        if untagged:
            raise errors.UntaggedShadow(
                f"shadows {untagged} have no W-tag at commit", shadow_ids=untagged)
        events = self._pending
        self.log.extend(events)
        if self.path is not None and events:
            with self.path.open("a", encoding="utf-8") as fh:
                for event in events:
                    fh.write(json.dumps(event.to_json(), sort_keys=True, ensure_ascii=False))
                    fh.write("\n")

    def _rollback(self) -> None:
        committed = self.log
        self.state = State()
        self.log = []
        for event in committed:
            self._replay_one(event)

    @contextmanager
    def _auto(self):
        """Join the open transaction or open a one-shot one with the default actor."""
        if self._pending is not None:
            yield
        else:
            with self.transaction():
                yield

    # -- events ------------------------------------------------------------

    def _emit(self, op: str, payload: dict, *, affected: dict, summary: Optional[str] = None):
        if self._pending is None:
            raise errors.NoTransaction(f"{op} requires an open transaction")
        process_id, rule_id, source = self._actor
        event = ChangeEvent(
            seq=len(self.log) + len(self._pending) + 1,
            timestamp=self.clock(),
            process_id=process_id,
            op=op,
            payload=payload,
            rule_id=rule_id,
            affected={k: v for k, v in affected.items() if v},
            source=source,
            summary=summary,
        )
        result = self._handler(op)(payload)
        self._pending.append(event)
        return result

    def _handler(self, op: str):
        handler = getattr(self, "_apply_" + op.replace("-", "_"), None)
        if handler is None:
            raise errors.ShadowError(f"no handler for op {op!r}")
        return handler

    def _replay_one(self, event: ChangeEvent) -> None:
        self._handler(event.op)(event.payload)
        self.log.append(event)

    def _steps(self):
        """Step counter enforcing the traversal safety cap."""
        cap = self.safety_cap
        count = 0

        def tick():
            nonlocal count
            count += 1
            if count > cap:
                raise errors.ResourceLimit(f"traversal exceeded {cap} steps", cap=cap)
        return tick
