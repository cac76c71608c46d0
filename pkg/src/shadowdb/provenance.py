"""Process and business-rule registration plus the who/what/when/where/why/how
explanation engine over the change log."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Optional

from . import errors
from .core import SYSTEM_PROCESS_ID
from .records import ChangeEvent, Process

QUESTIONS = ("who", "what", "when", "where", "why", "how")
LOCAL_SOURCE = "local"

# target prefix -> key in ChangeEvent.affected
_TARGETS = {"wid": "wid", "shadow": "shadow", "etag": "etag", "kind": "kind",
            "relation": "relation", "perspective": "perspective", "ptag": "ptag",
            "schema": "schema", "process": "process", "key": "key"}


def load_templates(path=None) -> dict:
    """Prose templates for :meth:`Explanation.prose`; a JSON object per question."""
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    text = resources.files("shadowdb").joinpath("data/explain_templates.json").read_text("utf-8")
    return json.loads(text)


def parse_target(ref) -> tuple[str, object]:
    """``"#12"`` / ``"wid:12"`` / ``"shadow:3"`` / ``"etag:4"`` -> (type, id)."""
    if isinstance(ref, tuple):
        return ref
    if isinstance(ref, int):
        return "wid", ref
    text = str(ref).strip()
    if text.startswith("#"):
        return "wid", int(text[1:])
    kind, sep, ident = text.partition(":")
    if not sep or kind not in _TARGETS:
        raise errors.NotFound(f"cannot parse explain target {ref!r}")
    if kind == "key":
        return kind, ident
    try:
        return kind, int(ident)
    except ValueError:
        raise errors.NotFound(f"cannot parse explain target {ref!r}") from None


@dataclass
class Explanation:
    target: str
    who: list = field(default_factory=list)
    what: list = field(default_factory=list)
    when: list = field(default_factory=list)
    where: list = field(default_factory=list)
    why: list = field(default_factory=list)
    how: list = field(default_factory=list)
    events: list = field(default_factory=list)
    derivation_path: Optional[list] = None
    questions: tuple = QUESTIONS

    def to_dict(self) -> dict:
        doc = {"target": self.target, "events": [e.seq for e in self.events]}
        for q in self.questions:
            doc[q] = getattr(self, q)
        if self.derivation_path is not None:
            doc["derivation_path"] = self.derivation_path
        return doc

    def prose(self, templates: Optional[dict] = None) -> str:
        t = templates or load_templates()
        parts = []
        for q in self.questions:
            vals = getattr(self, q)
            if q == "when":
                parts.append(t["when"].format(first=vals[0] if vals else "?",
                                              last=vals[-1] if vals else "?"))
            elif q == "what":
                parts.append(t["what"].format(count=len(vals), what="; ".join(map(str, vals))))
            else:
                text = "; ".join(v if isinstance(v, str) else json.dumps(v) for v in vals)
                parts.append(t[q].format(**{q: text}))
        return " ".join(parts)


class ProvenanceLog:
    def register_process(self, name: str, rules: Iterable) -> int:
        """Register an application program and its business rules.

        ``rules`` items are ``(rule_id, description)`` pairs, dicts with
        ``id``/``description``, or plain text used as both.
        """
        norm = []
        for r in rules or []:
            if isinstance(r, str):
                norm.append([r, r])
            elif isinstance(r, dict):
                norm.append([str(r["id"]), str(r.get("description") or r["id"])])
            else:
                norm.append([str(r[0]), str(r[1])])
        if not norm:
            raise errors.Conflict("a process must register at least one rule")
        if len({r[0] for r in norm}) != len(norm):
            raise errors.Conflict("rule ids must be distinct")
        if name in self.state.process_by_name:
            raise errors.Conflict(f"process {name!r} already registered")
        ctx = self._auto() if self.in_transaction or self._default_actor else \
            self.transaction(SYSTEM_PROCESS_ID)
        with ctx:
            pid = self.state.allocate("process")
            self._emit("register_process", {"process_id": pid, "name": name, "rules": norm},
                       affected={"process": [pid]}, summary=f"register process {name}")
            return pid

    def _apply_register_process(self, p: dict) -> None:
        st = self.state
        st.processes[p["process_id"]] = Process(p["process_id"], p["name"],
                                                [list(r) for r in p["rules"]])
        st.process_by_name[p["name"]] = p["process_id"]
        st.bump("process", p["process_id"])

    def process_id(self, name) -> int:
        if isinstance(name, int):
            if name not in self.state.processes:
                raise errors.UnregisteredProcess(f"process {name} is not registered")
            return name
        pid = self.state.process_by_name.get(name)
        if pid is None:
            raise errors.UnregisteredProcess(f"process {name!r} is not registered")
        return pid

    # -- explanation -------------------------------------------------------

    def _event_index(self) -> dict:
        cache = getattr(self, "_explain_cache", None)
        if cache is not None and cache[0] == len(self.log):
            return cache[1]
        index: dict = {}
        for event in self.log:
            for kind, ids in event.affected.items():
                for i in ids:
                    index.setdefault((kind, i), []).append(event)
            index.setdefault(("process", event.process_id), []).append(event)
        self._explain_cache = (len(self.log), index)
        return index

    def _exists(self, kind: str, ident) -> bool:
        st = self.state
        table = {"wid": st.wtags, "shadow": st.shadows, "etag": st.etags, "kind": st.kinds,
                 "relation": st.relations, "perspective": st.perspectives, "ptag": st.ptags,
                 "schema": st.schemas, "process": st.processes, "key": st.feed_keys}[kind]
        return ident in table

    def events_for(self, ref) -> list[ChangeEvent]:
        kind, ident = parse_target(ref)
        index = self._event_index()
        found = {e.seq: e for e in index.get((kind, ident), [])}
        if kind == "wid":
            sid = self.state.wtags[ident].shadow_id if ident in self.state.wtags else None
            if sid is not None:
                found.update({e.seq: e for e in index.get(("shadow", sid), [])})
        return [found[s] for s in sorted(found)]

    def explain(self, ref, questions: Optional[Iterable[str]] = None) -> Explanation:
        """Answer who/what/when/where/why/how for a WID, shadow, E-tag or other id."""
        kind, ident = parse_target(ref)
        if not self._exists(kind, ident):
            raise errors.NotFound(f"{kind} {ident} not found")
        qs = tuple(q for q in QUESTIONS if questions is None or q in set(questions))
        events = self.events_for((kind, ident))
        expl = Explanation(target=f"{kind}:{ident}", events=events, questions=qs)
        procs = self.state.processes
        seen = set()
        for e in events:
            name = procs[e.process_id].name if e.process_id in procs else f"process {e.process_id}"
            if name not in seen:
                expl.who.append(name)
                seen.add(name)
        expl.what = [e.summary or e.op for e in events]
        expl.when = [e.timestamp for e in events]
        expl.where = sorted({e.source or LOCAL_SOURCE for e in events})
        why = []
        for e in events:
            rules = dict(map(tuple, procs[e.process_id].rules)) if e.process_id in procs else {}
            text = f"rule {e.rule_id}: {rules.get(e.rule_id, e.rule_id)}"
            if text not in why:
                why.append(text)
        if kind == "etag":
            tag = self.state.etags[ident]
            why += [f"evidence ({ev['kind']}): {ev['body']}" for ev in tag.evidence]
            if tag.revocation_reason:
                why.append(f"revoked: {tag.revocation_reason}")
        expl.why = why
        expl.how = [{"seq": e.seq, "op": e.op, "payload": e.payload} for e in events]
        if kind == "wid" and self.state.wtags[ident].derived:
            expl.derivation_path = self.state.wtags[ident].derivation_path
            expl.how.append({"derivation_path": expl.derivation_path})
        return expl

    def targets_of(self, event: ChangeEvent) -> list[str]:
        """Every explain target that reports ``event``."""
        out = [f"{k}:{i}" for k, ids in sorted(event.affected.items()) for i in ids]
        return out or [f"process:{event.process_id}"]
