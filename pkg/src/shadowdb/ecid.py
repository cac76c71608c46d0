"""The bundled ECID corpus: four source perspectives plus an integration one.

The stated rows (legal entity 763810 "ABC Corp", contract 87936-965042,
location customer 005487 and a billing number in area code 735) are used
verbatim. Every other row in the feeds is synthetic filler.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional

from . import errors
from .feeds import load_feed
from .manifest import apply_manifest

FIXTURE = "fixtures/ecid"


def fixture_text(name: str) -> str:
    return resources.files("shadowdb").joinpath(f"{FIXTURE}/{name}").read_text("utf-8")


def fixture_doc() -> dict:
    return json.loads(fixture_text("fixture.json"))


def find_wid(store, kind_ref: str, value: str) -> Optional[int]:
    """First WID of ``kind_ref`` whose shadow (live or archived) holds ``value``."""
    kid = store.kind_id(kind_ref)
    for wid in store.state.wids_by_kind.get(kid, []):
        wt = store.state.wtags[wid]
        if wt.shadow_id is None:
            continue
        sh = store.state.shadows[wt.shadow_id]
        current = sh.archive_payload["value"] if sh.archived else sh.value
        if current == value:
            return wid
    return None


def row_of(store, column_wid: int, root_kind: str) -> Optional[int]:
    """The row WID of ``root_kind`` that has ``column_wid`` as an observable."""
    kid = store.kind_id(root_kind)
    for rel in store.parent_relations(column_wid):
        if store.state.wtags[rel.parent].kind_id == kid:
            return rel.parent
    return None


@dataclass
class EcidFixture:
    """Handles on the well-known WIDs of the corpus."""

    processes: dict = field(default_factory=dict)
    etags: dict = field(default_factory=dict)
    wids: dict = field(default_factory=dict)
    reports: list = field(default_factory=list)

    def __getitem__(self, name: str) -> int:
        return self.wids[name]


_HANDLES = {
    "legal_customer_id": ("P1:Customer_ID", "763810", "P1:Legal_entity_based_ECID", "legal_row"),
    "location_customer": ("P2:Customer", "005487", "P2:Location_based_ECID", "location_row"),
    "ec_num": ("P3:EC_Num", "87936-965042", "P3:Contract_based_ECID", "contract_row"),
    "parent_num": ("P3:Parent_Num", "87936-965042", None, None),
    "service_id": ("P4:Service_ID", "735-555-0142", "P4:Billing_Account", "billing_row"),
}


def build_ecid(store, *, strict: bool = True) -> EcidFixture:
    """Load the manifest, the five feeds and the three reviewed E-tags."""
    doc = fixture_doc()
    fx = EcidFixture()
    apply_manifest(store, json.loads(fixture_text(doc["manifest"])))
    for proc in doc["processes"]:
        fx.processes[proc["name"]] = store.register_process(proc["name"], proc["rules"])
    for feed in doc["feeds"]:
        report = load_feed(store, fixture_text(feed["file"]), fx.processes[feed["process"]],
                           strict=strict)
        fx.reports.append(report)
    for name, (kind, value, root, row_name) in _HANDLES.items():
        wid = find_wid(store, kind, value)
        if wid is None:
            raise errors.NotFound(f"fixture value {value!r} of {kind} missing")
        fx.wids[name] = wid
        if root is not None:
            fx.wids[row_name] = row_of(store, wid, root)
    for link in doc["links"]:
        a = find_wid(store, link["a"]["kind"], link["a"]["value"])
        b = find_wid(store, link["b"]["kind"], link["b"]["value"])
        with store.transaction(fx.processes[link["process"]]):
            fx.etags[link["name"]] = store.assert_etag(a, b, link["kind"], link.get("direction"),
                                                       link["evidence"])
    return fx
