"""Plain record types held in store state.

All records are JSON-serialisable through :func:`dataclasses.asdict`; the store
dumps them in id order so that two equal states serialise to identical bytes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional

IS_A = "IS-A"
HAS_A = "HAS-A"
UNMARKED = "unmarked"
MARKERS = (IS_A, HAS_A, UNMARKED)

STRONG = "strong"
WEAK = "weak"

EVIDENCE_KINDS = ("human-decision", "external-document", "rule-derived",
                  "synchronization-point")


@dataclass
class Shadow:
    shadow_id: int
    value: Any
    # [role-label, shadow_id] pairs, insertion order preserved
    sub_shadows: list = field(default_factory=list)
    archived: bool = False
    archive_payload: Any = None
    ptags: list = field(default_factory=list)


@dataclass
class Perspective:
    perspective_id: int
    name: str
    description: str = ""


@dataclass
class WTagKind:
    kind_id: int
    perspective_id: int
    name: str
    description: str
    # component kind ids of the single decomposition template, or None
    template: Optional[list] = None
    required_ptag: Optional[int] = None


@dataclass
class WTagInstance:
    wid: int
    kind_id: int
    shadow_id: Optional[int]
    derived: bool = False
    # list of {"kind": "relation"|"etag"|"base", "id": int, ...} steps
    derivation_path: Optional[list] = None
    status: str = "active"


@dataclass
class Relation:
    relation_id: int
    level: str  # "instance" | "kind"
    child: int
    parent: int
    marker: str
    perspective_id: int
    derived: bool = False
    status: str = "active"
    role: Optional[str] = None


@dataclass
class PTag:
    ptag_id: int
    name: str
    format_spec: dict
    required_with_kind: Optional[int] = None
    converter_refs: list = field(default_factory=list)


@dataclass
class SimulatedSchema:
    schema_id: int
    name: str
    perspective_id: int
    root_kind_id: int
    # [{"kind_id", "ptag_id", "reference"?, "decompose_as"?}]
    columns: list
    key_kind_id: int


@dataclass
class Evidence:
    author_process_id: int
    timestamp: str
    kind: str
    body: str
    external_ref: Optional[str] = None


@dataclass
class ETag:
    etag_id: int
    wid_a: int
    wid_b: int
    kind: str
    # for weak tags: "a<=b" means wid_a's meaning is included in wid_b's
    direction: Optional[str]
    evidence: list
    status: str = "active"
    revocation_reason: Optional[str] = None


@dataclass
class Process:
    process_id: int
    name: str
    rules: list  # [[rule_id, description]]


@dataclass
class ChangeEvent:
    seq: int
    timestamp: str
    process_id: int
    op: str
    payload: dict
    rule_id: Optional[str] = None
    affected: dict = field(default_factory=dict)
    source: Optional[str] = None
    summary: Optional[str] = None

    def to_json(self) -> dict:
        return {
            "seq": self.seq,
            "timestamp": self.timestamp,
            "process_id": self.process_id,
            "op": self.op,
            "payload": self.payload,
            "rule_id": self.rule_id,
            "affected": self.affected,
            "source": self.source,
            "summary": self.summary,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "ChangeEvent":
        return cls(
            seq=doc["seq"],
            timestamp=doc["timestamp"],
            process_id=doc["process_id"],
            op=doc["op"],
            payload=doc["payload"],
            rule_id=doc.get("rule_id"),
            affected=doc.get("affected") or {},
            source=doc.get("source"),
            summary=doc.get("summary"),
        )
