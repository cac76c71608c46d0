"""The assembled store."""

from __future__ import annotations

from .core import StoreCore
from .equivalence import EquivalenceLedger
from .provenance import ProvenanceLog
from .semantic import SemanticSpace
from .shadow_store import ShadowSpace


class Store(ShadowSpace, SemanticSpace, EquivalenceLedger, ProvenanceLog, StoreCore):
    """Shadows, meanings, equivalences and their change log in one object.

    >>> s = Store()
    >>> pid = s.register_process("loader", [("r1", "load rows")])
    >>> with s.transaction(pid, "r1"):
    ...     p1 = s.create_perspective("P1")
    ...     k = s.define_kind(p1, "Customer_ID", "legal entity customer number")
    ...     wid = s.attach_wtag(s.insert_shadow("763810"), k)
    >>> s.value_of(wid)
    '763810'
    """
