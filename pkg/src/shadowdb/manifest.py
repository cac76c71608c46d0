"""Declarative semantic manifests: perspectives, kinds, P-tags, templates,
kind relations and simulated schemas in one JSON document.

Sections are applied in a fixed order so that forward references work::

    process, perspectives, kinds, ptags, templates, kind_relations, schemas

Kinds are written ``"P1:Customer_ID"``; the perspective prefix is required.
A kind entry may carry ``template`` inline, resolved after all kinds exist.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional, Union

from . import errors
from .records import UNMARKED

SECTIONS = ("process", "perspectives", "kinds", "ptags", "templates", "kind_relations",
            "schemas")


def load_manifest(source: Union[str, Path, dict]) -> dict:
    if isinstance(source, dict):
        return source
    try:
        doc = json.loads(Path(source).read_text("utf-8"))
    except json.JSONDecodeError as exc:
        raise errors.FormatRejected(f"manifest is not JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise errors.FormatRejected("manifest must be a JSON object")
    unknown = set(doc) - set(SECTIONS) - {"description"}
    if unknown:
        raise errors.FormatRejected(f"unknown manifest sections {sorted(unknown)}")
    return doc


def _split(ref: str) -> tuple[str, str]:
    if ":" not in ref:
        raise errors.FormatRejected(f"kind {ref!r} needs a perspective prefix")
    p, name = ref.split(":", 1)
    return p, name


def apply_manifest(store, source, *, process_id: Optional[int] = None) -> dict:
    """Apply a manifest; returns the ids created, keyed by section.

    The whole manifest is one transaction: any failure leaves the store
    untouched. The acting process is ``process_id``, else the manifest's
    ``process`` entry (registered on the fly), else the store default.
    """
    doc = load_manifest(source)
    created = {"perspectives": {}, "kinds": {}, "ptags": {}, "schemas": {}}
    proc = doc.get("process")
    if process_id is None and proc is not None:
        if proc["name"] in store.state.process_by_name:
            process_id = store.state.process_by_name[proc["name"]]
        else:
            process_id = store.register_process(proc["name"], proc["rules"])
        created["process"] = process_id
    ctx = store.transaction(process_id) if process_id is not None else store._auto()
    with ctx:
        for p in doc.get("perspectives", []):
            created["perspectives"][p["name"]] = store.create_perspective(
                p["name"], p.get("description", ""))
        for k in doc.get("kinds", []):
            pname, name = _split(k["kind"])
            created["kinds"][k["kind"]] = store.define_kind(pname, name, k.get("description", ""))
        for pt in doc.get("ptags", []):
            created["ptags"][pt["name"]] = store.define_ptag(
                pt["name"], pt["format"], required_with_kind=pt.get("required_with_kind"),
                converter_refs=pt.get("converters", ()))
        templates = [(k["kind"], k["template"]) for k in doc.get("kinds", []) if "template" in k]
        templates += [(t["kind"], {"components": t["components"],
                                   "relations": t.get("relations", [])})
                      for t in doc.get("templates", [])]
        for kind, tmpl in templates:
            store.set_template(kind, tmpl)
        for r in doc.get("kind_relations", []):
            store.assert_kind_relation(r["child"], r["parent"], r.get("marker", UNMARKED))
        for s in doc.get("schemas", []):
            created["schemas"][s["name"]] = store.define_simulated_schema(
                s["perspective"], s["name"], s["root"], s["columns"], key=s.get("key"))
    return created
