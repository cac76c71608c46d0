"""Semantic space: perspectives, W-tag kinds and instances, semantic relations,
templates, simulated schemas and P-tags."""

from __future__ import annotations

import difflib
import re
from typing import Any, Iterable, Optional, Union

from . import errors, ptags
from .records import (MARKERS, UNMARKED, PTag, Perspective, Relation,
                      SimulatedSchema, WTagInstance, WTagKind)
from .shadow_store import ShadowRef

INSTANCE = "instance"
KIND = "kind"
OBSERVABLE = "observable"


def near_matches(name: str, names) -> list[str]:
    # short perspective names like P1/P2 differ by one character out of two
    return difflib.get_close_matches(name, list(names), n=3, cutoff=0.5)


def ident(name: str) -> str:
    """Identifier form of a name: runs of non-alphanumerics become ``_``."""
    return re.sub(r"[^0-9A-Za-z]+", "_", name).strip("_")


class SemanticSpace:
    # -- name resolution ---------------------------------------------------

    def perspective_id(self, name: str) -> int:
        if isinstance(name, int):
            if name not in self.state.perspectives:
                raise errors.NotFound(f"perspective {name} not found")
            return name
        pid = self.state.perspective_by_name.get(name)
        if pid is None:
            near = near_matches(name, self.state.perspective_by_name)
            raise errors.UnknownName(name, near)
        return pid

    def kind_id(self, ref: Union[int, str], perspective: Optional[Union[int, str]] = None) -> int:
        """Resolve ``"P1:Customer_ID"`` (or a name plus perspective) to a kind id."""
        if isinstance(ref, int):
            if ref not in self.state.kinds:
                raise errors.NotFound(f"kind {ref} not found")
            return ref
        if ":" in ref:
            perspective, ref = ref.split(":", 1)
        elif perspective is None:
            raise errors.UnknownName(ref, [])
        pid = self.perspective_id(perspective)
        kid = self.state.kind_by_name.get((pid, ident(ref)))
        if kid is None:
            pname = self.state.perspectives[pid].name
            names = [f"{pname}:{n}" for (p, n) in self.state.kind_by_name if p == pid]
            names += [f"{self.state.perspectives[p].name}:{n}"
                      for (p, n) in self.state.kind_by_name if p != pid and n == ident(ref)]
            near = near_matches(f"{pname}:{ident(ref)}", names)
            raise errors.UnknownName(f"{pname}:{ref}", near)
        return kid

    def qualified_name(self, kind_id: int) -> str:
        kind = self.state.kinds[kind_id]
        return f"{self.state.perspectives[kind.perspective_id].name}:{ident(kind.name)}"

    def list_perspectives(self) -> list[Perspective]:
        return [self.state.perspectives[k] for k in sorted(self.state.perspectives)]

    # -- reads -------------------------------------------------------------

    def wtag(self, wid: int) -> WTagInstance:
        try:
            return self.state.wtags[wid]
        except KeyError:
            raise errors.NotFound(f"WID {wid} not found", wid=wid) from None

    def kind(self, kind_id: int) -> WTagKind:
        try:
            return self.state.kinds[kind_id]
        except KeyError:
            raise errors.NotFound(f"kind {kind_id} not found") from None

    def perspective_of(self, wid: int) -> int:
        return self.state.kinds[self.wtag(wid).kind_id].perspective_id

    def wids_on_shadow(self, shadow_id: int) -> list[int]:
        return list(self.state.wids_by_shadow.get(shadow_id, []))

    def wid_for(self, shadow_id: int, kind_id: int) -> Optional[int]:
        for wid in self.state.wids_by_shadow.get(shadow_id, []):
            if self.state.wtags[wid].kind_id == kind_id:
                return wid
        return None

    def wids_of_kind(self, kind_id: int, *, include_derived: bool = False) -> list[int]:
        out = []
        for wid in self.state.wids_by_kind.get(kind_id, []):
            wt = self.state.wtags[wid]
            if wt.status != "active" or (wt.derived and not include_derived):
                continue
            out.append(wid)
        return out

    def value_of(self, wid: int) -> Optional[str]:
        sid = self.wtag(wid).shadow_id
        if sid is None or sid not in self.state.shadows:
            return None
        return self.state.shadows[sid].value

    def is_archived(self, wid: int) -> bool:
        sid = self.wtag(wid).shadow_id
        return sid is not None and sid in self.state.shadows and self.state.shadows[sid].archived

    def child_relations(self, wid: int, *, levels=(INSTANCE, OBSERVABLE)) -> list[Relation]:
        rels = self.state.relations
        return [rels[r] for r in self.state.child_rels.get(wid, [])
                if rels[r].level in levels and rels[r].status == "active"]

    def parent_relations(self, wid: int, *, levels=(INSTANCE, OBSERVABLE)) -> list[Relation]:
        rels = self.state.relations
        return [rels[r] for r in self.state.parent_rels.get(wid, [])
                if rels[r].level in levels and rels[r].status == "active"]

    def components(self, wid: int) -> list[int]:
        return [r.child for r in self.child_relations(wid)]

    def template_of(self, kind_id: int) -> Optional[list[int]]:
        return self.kind(kind_id).template

    def kind_relations(self, kind_id: int) -> list[Relation]:
        rels = self.state.relations
        ids = set(self.state.kind_child_rels.get(kind_id, [])) | set(
            self.state.kind_parent_rels.get(kind_id, []))
        return [rels[r] for r in sorted(ids)]

    def domain_ptag(self, kind_id: int) -> Optional[PTag]:
        """The P-tag acting as the domain of a kind: required P-tag or schema column P-tag."""
        kind = self.kind(kind_id)
        if kind.required_ptag is not None:
            return self.state.ptags[kind.required_ptag]
        for sid in sorted(self.state.schemas):
            for col in self.state.schemas[sid].columns:
                if col["kind_id"] == kind_id:
                    return self.state.ptags[col["ptag_id"]]
        return None

    # -- perspectives & kinds ------------------------------------------------

    def create_perspective(self, name: str, description: str = "") -> int:
        with self._auto():
            if not name or name in self.state.perspective_by_name:
                raise errors.Conflict(f"perspective {name!r} already exists")
            if ident(name) != name:
                raise errors.Conflict(f"perspective name {name!r} must be an identifier")
            pid = self.state.allocate("perspective")
            self._emit("create_perspective",
                       {"perspective_id": pid, "name": name, "description": description},
                       affected={"perspective": [pid]}, summary=f"perspective {name}")
            return pid

    def _apply_create_perspective(self, p: dict) -> None:
        st = self.state
        st.perspectives[p["perspective_id"]] = Perspective(p["perspective_id"], p["name"],
                                                           p["description"])
        st.perspective_by_name[p["name"]] = p["perspective_id"]
        st.bump("perspective", p["perspective_id"])

    def define_kind(self, perspective_id, name: str, description: str,
                    template=None) -> int:
        """Register a W-tag kind; ``description`` is its dictionary entry."""
        with self._auto():
            pid = self.perspective_id(perspective_id)
            if not description or not description.strip():
                raise errors.RuleViolation("Rule1", "a W-tag kind needs a description")
            if not ident(name):
                raise errors.Conflict("kind name must contain an identifier character")
            if (pid, ident(name)) in self.state.kind_by_name:
                raise errors.Conflict(f"kind {name!r} already exists in perspective")
            kid = self.state.allocate("kind")
            self._emit("define_kind",
                       {"kind_id": kid, "perspective_id": pid, "name": name,
                        "description": description},
                       affected={"kind": [kid], "perspective": [pid]},
                       summary=f"kind {name}")
            if template is not None:
                self.set_template(kid, template)
            return kid

    def _apply_define_kind(self, p: dict) -> None:
        st = self.state
        st.kinds[p["kind_id"]] = WTagKind(p["kind_id"], p["perspective_id"], p["name"],
                                          p["description"])
        st.kind_by_name[(p["perspective_id"], ident(p["name"]))] = p["kind_id"]
        st.bump("kind", p["kind_id"])

    def set_template(self, kind_id: int, template) -> None:
        """Attach the single decomposition template of a kind (W-tag Rule #8).

        ``template`` is a list of component kinds, or a dict with
        ``components`` and optional ``relations`` ``[(child, parent, marker)]``
        among the components.
        """
        with self._auto():
            kid = self.kind_id(kind_id)
            if self.state.kinds[kid].template is not None:
                raise errors.RuleViolation("Rule8", "only one decomposition structure per kind",
                                           kind_id=kid)
            if isinstance(template, dict):
                comps, extra = template.get("components", []), template.get("relations", [])
            else:
                comps, extra = template, []
            comp_ids = [self.kind_id(c) for c in comps]
            if len(set(comp_ids)) != len(comp_ids):
                raise errors.Conflict("template components must be distinct")
            self._emit("set_template", {"kind_id": kid, "components": comp_ids},
                       affected={"kind": [kid] + comp_ids},
                       summary=f"template for {self.qualified_name(kid)}")
            for cid in comp_ids:
                self._add_kind_relation(cid, kid, UNMARKED, role=ident(self.kind(cid).name),
                                        check_perspective=False)
            for child, parent, marker in extra:
                c, p = self.kind_id(child), self.kind_id(parent)
                if c not in comp_ids or p not in comp_ids:
                    raise errors.RuleViolation("Rule8", "template relations must join components")
                self._add_kind_relation(c, p, marker, check_perspective=False)

    def _apply_set_template(self, p: dict) -> None:
        self.state.kinds[p["kind_id"]].template = list(p["components"])

    def assert_kind_relation(self, child_kind, parent_kind, marker: str = UNMARKED) -> int:
        with self._auto():
            c, p = self.kind_id(child_kind), self.kind_id(parent_kind)
            tmpl = self.state.kinds[p].template
            if tmpl is not None and c not in tmpl:
                raise errors.RuleViolation("Rule8", "edge would add a second decomposition",
                                           kind_id=p)
            return self._add_kind_relation(c, p, marker)

    def _add_kind_relation(self, child: int, parent: int, marker: str, *, role=None,
                           check_perspective: bool = True) -> int:
        if marker not in MARKERS:
            raise errors.Conflict(f"unknown marker {marker!r}")
        pc = self.state.kinds[child].perspective_id
        pp = self.state.kinds[parent].perspective_id
        if check_perspective and pc != pp:
            raise errors.UseEquivalenceLedger("kind relations stay inside one perspective")
        for rid in self.state.kind_parent_rels.get(child, []):
            rel = self.state.relations[rid]
            if rel.parent == parent:
                if rel.marker != marker:
                    raise errors.Conflict("marker contradicts existing edge", relation_id=rid)
                return rid
        rid = self.state.allocate("relation")
        self._emit("relation",
                   {"relation_id": rid, "level": KIND, "child": child, "parent": parent,
                    "marker": marker, "perspective_id": pp, "derived": False, "role": role},
                   affected={"relation": [rid], "kind": [child, parent]},
                   summary=f"{self.qualified_name(child)} within {self.qualified_name(parent)}")
        return rid

    # -- W-tag instances ---------------------------------------------------

    def attach_wtag(self, shadow_id: int, kind_id) -> int:
        """Attach a fresh W-tag instance of ``kind_id`` to a shadow; returns the WID."""
        with self._auto():
            sh = self.shadow(shadow_id)
            kid = self.kind_id(kind_id)
            if self.wid_for(shadow_id, kid) is not None:
                raise errors.Conflict(f"shadow {shadow_id} already carries "
                                      f"{self.qualified_name(kid)}")
            req = self.state.kinds[kid].required_ptag
            if req is not None:
                spec = self.state.ptags[req].format_spec
                value = sh.value if not sh.archived else sh.archive_payload["value"]
                if not ptags.conforms(spec, value):
                    raise errors.FormatRejected(
                        f"{value!r} rejected by required P-tag {self.state.ptags[req].name}",
                        shadow_id=shadow_id, ptag_id=req)
            wid = self.state.allocate("wid")
            self._emit("attach_wtag", {"wid": wid, "kind_id": kid, "shadow_id": shadow_id},
                       affected={"wid": [wid], "shadow": [shadow_id], "kind": [kid]},
                       summary=f"{self.qualified_name(kid)} WID={wid} on shadow {shadow_id}")
            return wid

    def _apply_attach_wtag(self, p: dict) -> None:
        st = self.state
        wid = p["wid"]
        st.wtags[wid] = WTagInstance(wid, p["kind_id"], p["shadow_id"])
        st.wids_by_shadow[p["shadow_id"]].append(wid)
        st.wids_by_kind[p["kind_id"]].append(wid)
        st.bump("wid", wid)

    def _apply_derive(self, p: dict) -> None:
        st = self.state
        wid = p["wid"]
        st.wtags[wid] = WTagInstance(wid, p["kind_id"], None, derived=True,
                                     derivation_path=p["path"])
        st.wids_by_kind[p["kind_id"]].append(wid)
        st.memo[p["key"]] = wid
        st.bump("wid", wid)
        for rel in p["relations"]:
            self._apply_relation(rel)

    def _apply_materialize(self, p: dict) -> None:
        self.state.memo[p["key"]] = p["wid"]

    def tag(self, shadow_id: int, kind_ref) -> int:
        """``attach_wtag`` that returns the existing WID when already attached."""
        kid = self.kind_id(kind_ref)
        wid = self.wid_for(shadow_id, kid)
        return wid if wid is not None else self.attach_wtag(shadow_id, kid)

    # -- semantic relations ------------------------------------------------

    def assert_relation(self, child_wid: int, parent_wid: int, marker: str = UNMARKED,
                        *, role: Optional[str] = None) -> int:
        """Record ``child ⊆ parent`` inside one perspective."""
        with self._auto():
            if marker not in MARKERS:
                raise errors.Conflict(f"unknown marker {marker!r}")
            child, parent = self.wtag(child_wid), self.wtag(parent_wid)
            if child_wid == parent_wid:
                raise errors.Conflict("inclusion of a region in itself is implicit")
            pc, pp = self.perspective_of(child_wid), self.perspective_of(parent_wid)
            if pc != pp:
                raise errors.UseEquivalenceLedger(
                    "inclusion across perspectives needs an E-tag",
                    child=child_wid, parent=parent_wid)
            return self._instance_edge(child, parent, marker, INSTANCE, role, pp)

    def assign_observable(self, component_wid: int, composite_wid: int,
                          role: Optional[str] = None) -> int:
        """Make ``component`` an observable of ``composite``.

        Inside one perspective this is an inclusion edge; across perspectives
        it is a role assignment that takes no part in inclusion.
        """
        with self._auto():
            comp, whole = self.wtag(component_wid), self.wtag(composite_wid)
            role = role or ident(self.kind(comp.kind_id).name)
            pc, pp = self.perspective_of(component_wid), self.perspective_of(composite_wid)
            level = INSTANCE if pc == pp else OBSERVABLE
            return self._instance_edge(comp, whole, UNMARKED, level, role, pp)

    def _instance_edge(self, child: WTagInstance, parent: WTagInstance, marker: str,
                       level: str, role: Optional[str], pid: int) -> int:
        st = self.state
        for rid in st.parent_rels.get(child.wid, []):
            rel = st.relations[rid]
            if rel.parent == parent.wid and rel.status == "active" and rel.level != KIND:
                if rel.marker != marker:
                    raise errors.Conflict("marker contradicts existing edge", relation_id=rid)
                return rid
        tmpl = st.kinds[parent.kind_id].template
        if tmpl is not None and child.kind_id not in tmpl:
            raise errors.RuleViolation(
                "Rule8", f"{self.qualified_name(child.kind_id)} is not part of the "
                f"template of {self.qualified_name(parent.kind_id)}",
                child=child.wid, parent=parent.wid)
        rid = st.allocate("relation")
        self._emit("relation",
                   {"relation_id": rid, "level": level, "child": child.wid,
                    "parent": parent.wid, "marker": marker, "perspective_id": pid,
                    "derived": False, "role": role},
                   affected={"relation": [rid], "wid": [child.wid, parent.wid]},
                   summary=f"WID {child.wid} within WID {parent.wid} ({marker})")
        return rid

    def _apply_relation(self, p: dict) -> None:
        st = self.state
        rid = p["relation_id"]
        st.relations[rid] = Relation(rid, p["level"], p["child"], p["parent"], p["marker"],
                                     p["perspective_id"], p.get("derived", False),
                                     role=p.get("role"))
        if p["level"] == KIND:
            st.kind_child_rels[p["parent"]].append(rid)
            st.kind_parent_rels[p["child"]].append(rid)
        else:
            st.child_rels[p["parent"]].append(rid)
            st.parent_rels[p["child"]].append(rid)
        st.bump("relation", rid)

    def insert_tagged(self, kind_ref, value: Any = None, parts: Iterable = ()) -> int:
        """Insert a shadow with its decomposition and tag every level.

        ``parts`` holds ``(kind, part)`` with ``part`` a value, a
        :class:`ShadowRef`, a ``("wid", n)`` pair reusing an existing instance,
        or ``(value, parts)`` for nesting. Returns the WID of the new shadow.
        """
        with self._auto():
            kid = self.kind_id(kind_ref)
            sub, comp_wids = [], []
            for part_kind, part in parts:
                pk = self.kind_id(part_kind)
                role = ident(self.kind(pk).name)
                if isinstance(part, tuple) and len(part) == 2 and part[0] == "wid":
                    cw = self.wtag(part[1]).wid
                    sid = self.state.wtags[cw].shadow_id
                    if sid is not None:
                        sub.append((role, ShadowRef(sid)))
                    comp_wids.append(cw)
                    continue
                if isinstance(part, ShadowRef):
                    sub.append((role, part))
                    comp_wids.append(self.tag(part.shadow_id, pk))
                    continue
                if isinstance(part, tuple):
                    cw = self.insert_tagged(pk, part[0], part[1])
                else:
                    cw = self.insert_tagged(pk, part)
                sub.append((role, ShadowRef(self.state.wtags[cw].shadow_id)))
                comp_wids.append(cw)
            sid = self.insert_shadow(value, sub)
            wid = self.attach_wtag(sid, kid)
            for cw in comp_wids:
                self.assign_observable(cw, wid)
            return wid

    # -- P-tags ----------------------------------------------------------

    def define_ptag(self, name: str, format_spec: dict, *, required_with_kind=None,
                    converter_refs: Iterable[str] = ()) -> int:
        with self._auto():
            if name in self.state.ptag_by_name:
                raise errors.Conflict(f"P-tag {name!r} already exists")
            ptags.check_spec(format_spec)
            kid = self.kind_id(required_with_kind) if required_with_kind is not None else None
            if kid is not None and self.state.kinds[kid].required_ptag is not None:
                raise errors.Conflict("kind already has a required P-tag")
            pt = self.state.allocate("ptag")
            self._emit("define_ptag",
                       {"ptag_id": pt, "name": name, "format_spec": format_spec,
                        "required_with_kind": kid, "converter_refs": list(converter_refs)},
                       affected={"ptag": [pt], "kind": [kid] if kid else []},
                       summary=f"P-tag {name}")
            return pt

    def _apply_define_ptag(self, p: dict) -> None:
        st = self.state
        st.ptags[p["ptag_id"]] = PTag(p["ptag_id"], p["name"], p["format_spec"],
                                      p["required_with_kind"], list(p["converter_refs"]))
        st.ptag_by_name[p["name"]] = p["ptag_id"]
        if p["required_with_kind"] is not None:
            st.kinds[p["required_with_kind"]].required_ptag = p["ptag_id"]
        st.bump("ptag", p["ptag_id"])

    def ptag_id(self, ref) -> int:
        if isinstance(ref, int):
            if ref not in self.state.ptags:
                raise errors.NotFound(f"P-tag {ref} not found")
            return ref
        pt = self.state.ptag_by_name.get(ref)
        if pt is None:
            raise errors.UnknownName(ref, near_matches(ref, self.state.ptag_by_name))
        return pt

    def attach_ptag(self, shadow_id: int, ptag_ref) -> None:
        """Attach an optional P-tag; the value must conform and agree with existing P-tags."""
        with self._auto():
            sh = self.shadow(shadow_id)
            pt = self.ptag_id(ptag_ref)
            if pt in sh.ptags:
                return
            value = sh.value if not sh.archived else sh.archive_payload["value"]
            if not ptags.conforms(self.state.ptags[pt].format_spec, value):
                raise errors.FormatRejected(f"{value!r} does not conform to "
                                            f"{self.state.ptags[pt].name}")
            self._emit("attach_ptag", {"shadow_id": shadow_id, "ptag_id": pt},
                       affected={"shadow": [shadow_id], "ptag": [pt]},
                       summary=f"P-tag {self.state.ptags[pt].name} on shadow {shadow_id}")

    def _apply_attach_ptag(self, p: dict) -> None:
        self.state.shadows[p["shadow_id"]].ptags.append(p["ptag_id"])

    def _stored_ptag(self, shadow_id: int) -> Optional[PTag]:
        sh = self.shadow(shadow_id)
        if sh.ptags:
            return self.state.ptags[sh.ptags[0]]
        for wid in self.state.wids_by_shadow.get(shadow_id, []):
            dom = self.domain_ptag(self.state.wtags[wid].kind_id)
            if dom is not None:
                return dom
        return None

    def convert(self, shadow_id: int, ptag_ref) -> Optional[str]:
        """Read a shadow's value converted to the format of ``ptag_ref``; read-only."""
        target = self.state.ptags[self.ptag_id(ptag_ref)]
        sh = self.shadow(shadow_id)
        source = self._stored_ptag(shadow_id)
        if source is None:
            raise errors.NoConverter(f"shadow {shadow_id} has no stored format")
        if source.ptag_id == target.ptag_id:
            return sh.value
        return ptags.convert(sh.value, source.format_spec, target.format_spec,
                             source.converter_refs + target.converter_refs)

    def _check_ptags_for_value(self, shadow_id: int, value: Optional[str]) -> None:
        sh = self.state.shadows[shadow_id]
        specs = [self.state.ptags[p] for p in sh.ptags]
        for wid in self.state.wids_by_shadow.get(shadow_id, []):
            req = self.state.kinds[self.state.wtags[wid].kind_id].required_ptag
            if req is not None:
                specs.append(self.state.ptags[req])
        for pt in specs:
            if not ptags.conforms(pt.format_spec, value):
                raise errors.FormatRejected(f"{value!r} rejected by P-tag {pt.name}")

    # -- simulated schemas ---------------------------------------------------

    def define_simulated_schema(self, perspective_id, name: str, root_kind, columns,
                                *, key=None) -> int:
        """A one-level template whose columns each carry a domain P-tag.

        ``columns`` entries are ``(kind, ptag)`` pairs or dicts with
        ``kind``, ``ptag`` and optional ``reference`` (kind whose equal-valued
        shadow is reused, i.e. a foreign key) and ``decompose_as`` (kind whose
        segments P-tag further decomposes conforming values).
        """
        with self._auto():
            pid = self.perspective_id(perspective_id)
            if name in self.state.schema_by_name:
                raise errors.Conflict(f"schema {name!r} already exists")
            root = self.kind_id(root_kind)
            if self.state.kinds[root].perspective_id != pid:
                raise errors.UseEquivalenceLedger("schema root must live in its perspective")
            cols = []
            for col in columns:
                if not isinstance(col, dict):
                    col = {"kind": col[0], "ptag": col[1]}
                if col.get("ptag") is None:
                    raise errors.RuleViolation("SimulatedSchema(3)",
                                               "every column needs a domain P-tag")
                ck = self.kind_id(col["kind"])
                if self.state.kinds[ck].perspective_id != pid:
                    raise errors.UseEquivalenceLedger("columns must live in the schema perspective")
                if self.state.kinds[ck].template is not None:
                    raise errors.RuleViolation("SimulatedSchema(1)",
                                               "a simulated schema is one level deep")
                entry = {"kind_id": ck, "ptag_id": self.ptag_id(col["ptag"])}
                if col.get("reference") is not None:
                    entry["reference"] = self.kind_id(col["reference"])
                if col.get("decompose_as") is not None:
                    entry["decompose_as"] = self.kind_id(col["decompose_as"])
                cols.append(entry)
            col_kinds = [c["kind_id"] for c in cols]
            tmpl = self.state.kinds[root].template
            if tmpl is None:
                self.set_template(root, col_kinds)
            elif sorted(tmpl) != sorted(col_kinds):
                raise errors.RuleViolation("Rule8", "root kind already has another template")
            key_kind = self.kind_id(key) if key is not None else col_kinds[0]
            if key_kind not in col_kinds:
                raise errors.Conflict("key must be one of the columns")
            sch = self.state.allocate("schema")
            self._emit("define_schema",
                       {"schema_id": sch, "name": name, "perspective_id": pid,
                        "root_kind_id": root, "columns": cols, "key_kind_id": key_kind},
                       affected={"schema": [sch], "kind": [root] + col_kinds},
                       summary=f"simulated schema {name}")
            return sch

    def _apply_define_schema(self, p: dict) -> None:
        st = self.state
        st.schemas[p["schema_id"]] = SimulatedSchema(p["schema_id"], p["name"],
                                                     p["perspective_id"], p["root_kind_id"],
                                                     [dict(c) for c in p["columns"]],
                                                     p["key_kind_id"])
        st.schema_by_name[p["name"]] = p["schema_id"]
        st.bump("schema", p["schema_id"])

    def schema(self, ref) -> SimulatedSchema:
        if isinstance(ref, int):
            if ref not in self.state.schemas:
                raise errors.NotFound(f"schema {ref} not found")
            return self.state.schemas[ref]
        sid = self.state.schema_by_name.get(ref)
        if sid is None:
            raise errors.UnknownName(ref, near_matches(ref, self.state.schema_by_name))
        return self.state.schemas[sid]

    def _column_values(self, sch: SimulatedSchema, values: dict) -> list[tuple[dict, Optional[str]]]:
        by_kind = {}
        for k, v in values.items():
            kid = k if isinstance(k, int) else self.kind_id(k, sch.perspective_id)
            by_kind[kid] = v
        known = {c["kind_id"] for c in sch.columns}
        unknown = set(by_kind) - known
        if unknown:
            raise errors.MappingGap(f"columns {sorted(unknown)} are not in schema {sch.name}")
        out = []
        for col in sch.columns:
            v = by_kind.get(col["kind_id"])
            v = None if v is None else str(v)
            if v is not None and not ptags.conforms(self.state.ptags[col["ptag_id"]].format_spec, v):
                raise errors.FormatRejected(
                    f"{v!r} rejected by {self.state.ptags[col['ptag_id']].name} for column "
                    f"{self.qualified_name(col['kind_id'])}",
                    column=self.qualified_name(col["kind_id"]))
            out.append((col, v))
        return out

    def _column_instance(self, col: dict, value: str) -> int:
        """Create (or reuse, for reference columns) the tagged sub-shadow of one column."""
        ck = col["kind_id"]
        ref = col.get("reference")
        if ref is not None:
            for rwid in self.state.wids_by_kind.get(ref, []):
                rsid = self.state.wtags[rwid].shadow_id
                if rsid is not None and self.state.shadows[rsid].value == value:
                    wid = self.tag(rsid, ck)
                    if not self.strong_link(rwid, wid):
                        self.synchronize(rwid, wid)
                    return wid
        dec = col.get("decompose_as")
        if dec is not None:
            dom = self.domain_ptag(dec)
            segs = ptags.segment(dom.format_spec, value) if dom is not None else None
            if segs:
                tmpl = self.state.kinds[dec].template or []
                names = {ident(self.state.kinds[k].name): k for k in tmpl}
                sid = self.insert_shadow(value, [(name, text) for name, text in segs])
                wid = self.attach_wtag(sid, ck)
                dwid = self.attach_wtag(sid, dec)
                self.synchronize(wid, dwid)
                for role, sub in self.state.shadows[sid].sub_shadows:
                    swid = self.attach_wtag(sub, names[ident(role)])
                    self.assign_observable(swid, dwid, role)
                return wid
        sid = self.insert_shadow(value)
        return self.attach_wtag(sid, ck)

    def load_row(self, schema_ref, values: dict) -> int:
        """Load one row; absent columns get no sub-W-tag (relational null).

        Returns the row shadow id.
        """
        with self._auto():
            sch = self.schema(schema_ref)
            present = [(col, v) for col, v in self._column_values(sch, values) if v is not None]
            col_wids = [(col, self._column_instance(col, v)) for col, v in present]
            subs = [(ident(self.state.kinds[col["kind_id"]].name),
                     ShadowRef(self.state.wtags[w].shadow_id)) for col, w in col_wids]
            row = self.insert_shadow(None, subs)
            row_wid = self.attach_wtag(row, sch.root_kind_id)
            for col, w in col_wids:
                self.assign_observable(w, row_wid)
            return row

    def update_row(self, schema_ref, row_shadow_id: int, values: dict) -> list[int]:
        """In-place update of present columns; WIDs stay stable. Returns new column WIDs."""
        with self._auto():
            sch = self.schema(schema_ref)
            row_wid = self.wid_for(row_shadow_id, sch.root_kind_id)
            if row_wid is None:
                raise errors.NotFound(f"shadow {row_shadow_id} is not a row of {sch.name}")
            existing = {}
            for rel in self.child_relations(row_wid):
                existing[self.state.wtags[rel.child].kind_id] = rel.child
            added = []
            for col, v in self._column_values(sch, values):
                if v is None:
                    continue
                cw = existing.get(col["kind_id"])
                if cw is None:
                    cw = self._column_instance(col, v)
                    role = ident(self.state.kinds[col["kind_id"]].name)
                    self.add_sub_shadow(row_shadow_id, role, self.state.wtags[cw].shadow_id)
                    self.assign_observable(cw, row_wid)
                    added.append(cw)
                else:
                    sid = self.state.wtags[cw].shadow_id
                    self.update_value(sid, v)
                    self._update_segments(col, sid, v)
            return added

    def _update_segments(self, col: dict, shadow_id: int, value: str) -> None:
        # keep decomposed sub-shadows in step with their parent value
        dec = col.get("decompose_as")
        subs = self.state.shadows[shadow_id].sub_shadows
        if dec is None or not subs:
            return
        dom = self.domain_ptag(dec)
        segs = dict(ptags.segment(dom.format_spec, value) or []) if dom is not None else {}
        for role, sub in subs:
            if role in segs:
                self.update_value(sub, segs[role])

    def _apply_bind_key(self, p: dict) -> None:
        self.state.feed_keys[p["key"]] = {"row": p["row"], "history": list(p["history"])}

    def row_values(self, schema_ref, row_wid: int) -> dict[str, Optional[str]]:
        """Relational view of a row WID: column identifier -> value (None for null)."""
        sch = self.schema(schema_ref)
        by_kind = {self.state.wtags[r.child].kind_id: r.child for r in self.child_relations(row_wid)}
        out = {}
        for col in sch.columns:
            name = ident(self.state.kinds[col["kind_id"]].name)
            w = by_kind.get(col["kind_id"])
            out[name] = self.value_of(w) if w is not None else None
        return out
