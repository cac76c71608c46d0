"""Semantic-space operators: select, project, union, difference, intersect,
combine and the strong/weak joins.

Operators read the store; ``project``, ``combine`` and the joins also
materialise new shadows through the store's writer, memoised so that
re-running a query returns the same WIDs.
"""

from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Union

from . import errors, inference, ptags
from .records import STRONG

TRUE, FALSE, UNKNOWN = True, False, None


# -- predicates ------------------------------------------------------------------

@dataclass(frozen=True)
class KindRef:
    perspective: str
    kind: str  # identifier form, or "*" for every kind of the perspective

    def __str__(self) -> str:
        return f"{self.perspective}:{self.kind}"


@dataclass(frozen=True)
class WidRef:
    wid: int

    def __str__(self) -> str:
        return f"#{self.wid}"


@dataclass(frozen=True)
class ValueTerm:
    kind: KindRef
    op: str  # = != < <= > >=
    literal: str


@dataclass(frozen=True)
class RelationTerm:
    op: str  # INCLUDED_IN | INCLUDES | SAME_AS
    target: Union[KindRef, WidRef]


@dataclass(frozen=True)
class And:
    left: object
    right: object


@dataclass(frozen=True)
class Or:
    left: object
    right: object


@dataclass(frozen=True)
class Not:
    operand: object


COMPARISONS = ("=", "!=", "<", "<=", ">", ">=")
RELATION_OPS = ("INCLUDED_IN", "INCLUDES", "SAME_AS")


def k_and(a, b):
    if a is FALSE or b is FALSE:
        return FALSE
    if a is UNKNOWN or b is UNKNOWN:
        return UNKNOWN
    return TRUE


def k_or(a, b):
    if a is TRUE or b is TRUE:
        return TRUE
    if a is UNKNOWN or b is UNKNOWN:
        return UNKNOWN
    return FALSE


def k_not(a):
    return UNKNOWN if a is UNKNOWN else (not a)


# -- results -----------------------------------------------------------------------

@dataclass
class ResultItem:
    wid: int
    shadow_id: Optional[int]
    kind: str
    rendering: dict
    provenance: list = field(default_factory=list)
    also: list = field(default_factory=list)
    components: list = field(default_factory=list)

    def all_wids(self) -> list[int]:
        return [self.wid] + [w for it in self.also for w in it.all_wids()]

    def to_dict(self) -> dict:
        doc = {"wid": self.wid, "shadow_id": self.shadow_id, "kind": self.kind,
               "rendering": self.rendering, "provenance": self.provenance}
        if self.also:
            doc["also"] = [a.to_dict() for a in self.also]
        if self.components:
            doc["components"] = list(self.components)
        return doc


def _sort_key(item: ResultItem):
    return (item.shadow_id is None, item.shadow_id or 0, item.wid)


@dataclass
class ResultSet:
    items: list = field(default_factory=list)
    advisories: list = field(default_factory=list)

    def __post_init__(self):
        self.items.sort(key=_sort_key)

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def wids(self) -> list[int]:
        return [it.wid for it in self.items]

    def pairs(self) -> list[tuple]:
        return [tuple(it.components) for it in self.items]

    def to_dict(self) -> dict:
        return {"count": len(self.items), "items": [it.to_dict() for it in self.items],
                "advisories": self.advisories}


# -- mapping rules (projection) ----------------------------------------------------

@dataclass(frozen=True)
class StrPart:
    text: str


@dataclass(frozen=True)
class FuncPart:
    name: str
    kind: KindRef


@dataclass(frozen=True)
class MappingRule:
    """``parts >> target``: one kind = copy, one string = constant,
    one function = enrich, anything longer = concatenation."""
    parts: tuple
    target: KindRef

    @property
    def style(self) -> str:
        if len(self.parts) == 1:
            p = self.parts[0]
            return {KindRef: "copy", StrPart: "constant", FuncPart: "enrich"}[type(p)]
        return "concat"


# Pure payload -> payload functions used by enrich rules.
ENRICHERS: dict[str, Callable[[str], Optional[str]]] = {}

# Small static table standing in for a postal lookup service.
ZIP_TABLE = {
    "Springfield, IL": "62701",
    "Chicago, IL": "60601",
    "Naperville, IL": "60540",
    "Dallas, TX": "75201",
    "Austin, TX": "73301",
    "Denver, CO": "80202",
    "Portland, OR": "97201",
    "Columbus, OH": "43004",
}


def register_enricher(name: str, func: Callable[[str], Optional[str]]) -> None:
    ENRICHERS[name] = func


register_enricher("ZIP", lambda v: ZIP_TABLE.get(v.strip()))
register_enricher("UPPER", lambda v: v.upper())


# -- engine -----------------------------------------------------------------------

class Engine:
    """Operator evaluation against one store.

    Parameters
    ----------
    store : Store
        Source of meanings; materialising operators write through it and
        therefore need a default process (:meth:`Store.use_process`) or an
        open transaction.
    """

    def __init__(self, store):
        self.store = store

    # -- structure walks ---------------------------------------------------

    def deep_nodes(self, wid: int) -> list[int]:
        """Descendant-or-self over decompositions and same-shadow synchronisation."""
        tick = self.store._steps()
        seen, order, stack = {wid}, [wid], [wid]
        while stack:
            node = stack.pop()
            for nxt in self._children(node):
                tick()
                if nxt not in seen:
                    seen.add(nxt)
                    order.append(nxt)
                    stack.append(nxt)
        return order

    def _children(self, wid: int) -> list[int]:
        st = self.store.state
        out = [r.child for r in self.store.child_relations(wid)
               if st.wtags[r.child].status == "active"]
        out += self._aliases(wid)
        return out

    def _aliases(self, wid: int) -> list[int]:
        """Same-shadow, same-perspective WIDs bridged by a strong E-tag."""
        st = self.store.state
        wt = st.wtags[wid]
        if wt.shadow_id is None:
            return []
        pid = st.kinds[wt.kind_id].perspective_id
        out = []
        for tag in self.store.etags_of(wid):
            if tag.kind != STRONG:
                continue
            other = tag.wid_b if tag.wid_a == wid else tag.wid_a
            ow = st.wtags[other]
            if (ow.shadow_id == wt.shadow_id and ow.status == "active"
                    and st.kinds[ow.kind_id].perspective_id == pid):
                out.append(other)
        return out

    def render(self, wid: int, _path: Optional[set] = None) -> dict:
        st = self.store.state
        wt = st.wtags[wid]
        path = (_path or set()) | {wid}
        sh = st.shadows.get(wt.shadow_id) if wt.shadow_id is not None else None
        node = {"kind": self.store.qualified_name(wt.kind_id), "wid": wid,
                "value": sh.value if sh is not None else None,
                "archived": bool(sh.archived) if sh is not None else False,
                "derived": wt.derived, "children": []}
        for child in self._children(wid):
            if child not in path:
                node["children"].append(self.render(child, path))
        return node

    def item(self, wid: int, provenance: Optional[list] = None) -> ResultItem:
        wt = self.store.state.wtags[wid]
        prov = list(provenance or [])
        if wt.derived:
            prov.append({"derivation": wt.derivation_path})
        return ResultItem(wid, wt.shadow_id, self.store.qualified_name(wt.kind_id),
                          self.render(wid), prov)

    # -- name resolution ---------------------------------------------------

    def kinds(self, ref: KindRef) -> list[int]:
        if ref.kind == "*":
            pid = self.store.perspective_id(ref.perspective)
            return sorted(k for (p, _), k in self.store.state.kind_by_name.items() if p == pid)
        return [self.store.kind_id(ref.kind, ref.perspective)]

    # -- OP1 select --------------------------------------------------------

    def candidates(self, scope: Iterable[KindRef], include_derived: bool) -> list[int]:
        st = self.store.state
        scope = list(scope)
        if scope:
            out = []
            for ref in scope:
                for kid in self.kinds(ref):
                    out += self.store.wids_of_kind(kid, include_derived=include_derived)
            return sorted(set(out))
        return sorted(w for w, wt in st.wtags.items()
                      if wt.status == "active" and (include_derived or not wt.derived))

    def _ordered_spec(self, kind_id: int, shadow_id: Optional[int]) -> Optional[dict]:
        if shadow_id is not None:
            for pt in self.store.state.shadows[shadow_id].ptags:
                spec = self.store.state.ptags[pt].format_spec
                if ptags.is_ordered(spec):
                    return spec
        dom = self.store.domain_ptag(kind_id)
        return dom.format_spec if dom is not None and ptags.is_ordered(dom.format_spec) else None

    def _compare(self, op: str, value: str, literal: str, spec: Optional[dict]) -> bool:
        if op == "=":
            return value == literal
        if op == "!=":
            return value != literal
        if spec is None:
            raise errors.QueryTypeError(f"operator {op} needs an ordered P-tag")
        if not ptags.conforms(spec, literal):
            raise errors.QueryTypeError(f"literal {literal!r} does not fit the ordered format")
        a, b = ptags.order_key(spec, value), ptags.order_key(spec, literal)
        return {"<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b}[op]

    def evaluate(self, pred, wid: int, nodes: Optional[list] = None):
        """Three-valued truth of a predicate for one candidate WID."""
        if pred is None:
            return TRUE
        if isinstance(pred, And):
            return k_and(self.evaluate(pred.left, wid, nodes), self.evaluate(pred.right, wid, nodes))
        if isinstance(pred, Or):
            return k_or(self.evaluate(pred.left, wid, nodes), self.evaluate(pred.right, wid, nodes))
        if isinstance(pred, Not):
            return k_not(self.evaluate(pred.operand, wid, nodes))
        if isinstance(pred, ValueTerm):
            return self._value_term(pred, wid, nodes if nodes is not None else self.deep_nodes(wid))
        if isinstance(pred, RelationTerm):
            return self._relation_term(pred, wid)
        raise errors.QueryTypeError(f"unknown predicate node {type(pred).__name__}")

    def _value_term(self, term: ValueTerm, wid: int, nodes: list) -> Optional[bool]:
        st = self.store.state
        kinds = set(self.kinds(term.kind))
        if term.op not in COMPARISONS:
            raise errors.QueryTypeError(f"unknown comparison {term.op!r}")
        if term.op not in ("=", "!="):
            for kid in kinds:
                if self._ordered_spec(kid, None) is None and not any(
                        st.wtags[n].kind_id == kid and st.wtags[n].shadow_id is not None
                        and self._ordered_spec(kid, st.wtags[n].shadow_id) for n in nodes):
                    raise errors.QueryTypeError(
                        f"{self.store.qualified_name(kid)} has no ordered P-tag for {term.op}")
        seen_value = False
        for n in nodes:
            wt = st.wtags[n]
            if wt.kind_id not in kinds or wt.shadow_id is None:
                continue
            sh = st.shadows.get(wt.shadow_id)
            if sh is None or sh.archived or sh.value is None:
                continue
            seen_value = True
            spec = None if term.op in ("=", "!=") else self._ordered_spec(wt.kind_id, wt.shadow_id)
            if self._compare(term.op, sh.value, term.literal, spec):
                return TRUE
        return FALSE if seen_value else UNKNOWN

    def _targets(self, target) -> list[int]:
        if isinstance(target, WidRef):
            self.store.wtag(target.wid)
            return [target.wid]
        out = []
        for kid in self.kinds(target):
            out += self.store.wids_of_kind(kid, include_derived=True)
        return out

    def _relation_term(self, term: RelationTerm, wid: int) -> bool:
        holds = inference.inclusion_holds
        for t in self._targets(term.target):
            if term.op == "INCLUDED_IN" and holds(self.store, wid, t)[0]:
                return TRUE
            if term.op == "INCLUDES" and holds(self.store, t, wid)[0]:
                return TRUE
            if term.op == "SAME_AS" and (t == wid or self.store.strong_link(wid, t) or (
                    holds(self.store, wid, t)[0] and holds(self.store, t, wid)[0])):
                return TRUE
        if term.op not in RELATION_OPS:
            raise errors.QueryTypeError(f"unknown relation operator {term.op!r}")
        return FALSE

    def select(self, predicate=None, scope: Iterable[KindRef] = (), *,
               include_derived: bool = False) -> ResultSet:
        items = []
        for wid in self.candidates(scope, include_derived):
            nodes = self.deep_nodes(wid)
            if self.evaluate(predicate, wid, nodes) is TRUE:
                items.append(self.item(wid))
        return ResultSet(items)

    # -- OP3-5 set operators -------------------------------------------------

    def _proof(self, a: ResultItem, b: ResultItem, *, same_shadow: bool) -> Optional[dict]:
        if a.wid == b.wid:
            return {"via": "same-wid", "wid": a.wid}
        if same_shadow and a.shadow_id is not None and a.shadow_id == b.shadow_id:
            return {"via": "same-shadow", "shadow_id": a.shadow_id}
        for wa in a.all_wids():
            for wb in b.all_wids():
                eid = self.store.strong_link(wa, wb)
                if eid is not None:
                    return {"via": "etag", "etag": eid}
        return None

    def _merge(self, a: ResultItem, b: ResultItem, proof: dict) -> ResultItem:
        if a.wid == b.wid:
            return a
        return ResultItem(a.wid, a.shadow_id, a.kind, a.rendering,
                          a.provenance + [proof], a.also + [b], a.components)

    def _match(self, a: ResultItem, others: list, used: set, same_shadow: bool):
        # an identical WID wins over any other kind of proof
        for i, b in enumerate(others):
            if i not in used and b.wid == a.wid:
                return i, {"via": "same-wid", "wid": a.wid}
        for i, b in enumerate(others):
            if i in used:
                continue
            proof = self._proof(a, b, same_shadow=same_shadow)
            if proof is not None:
                return i, proof
        return None, None

    def union(self, left: ResultSet, right: ResultSet) -> ResultSet:
        out = [it for it in left.items]
        used: set = set()
        for b in right.items:
            j, proof = self._match(b, out, used, True)
            if j is None:
                out.append(b)
                used.add(len(out) - 1)
            else:
                out[j] = self._merge(out[j], b, proof)
                used.add(j)
        return ResultSet(out, left.advisories + right.advisories)

    def difference(self, left: ResultSet, right: ResultSet) -> ResultSet:
        out = []
        for a in left.items:
            j, _ = self._match(a, right.items, set(), False)
            if j is None:
                out.append(a)
        return ResultSet(out, list(left.advisories))

    def intersect(self, left: ResultSet, right: ResultSet) -> ResultSet:
        out, advisories = [], list(left.advisories) + list(right.advisories)
        for a in left.items:
            j, proof = self._match(a, right.items, set(), False)
            if j is not None:
                out.append(self._merge(a, right.items[j], proof))
                continue
            for b in right.items:
                for wa in a.all_wids():
                    for wb in b.all_wids():
                        for eid in (self.store.weak_link(wa, wb), self.store.weak_link(wb, wa)):
                            if eid is not None:
                                advisories.append({"weak_link": eid, "a": wa, "b": wb,
                                                   "note": "weak links justify joins, not identity"})
        return ResultSet(out, advisories)

    # -- materialisation -----------------------------------------------------

    def _materialise(self, key: str, target_kind: int, parts: list, info: dict) -> int:
        """Create (once per ``key``) a composite of ``target_kind``.

        ``parts`` holds ``(component_kind, value)`` for new leaf shadows or
        ``(component_kind, ("wid", n))`` for existing instances.
        """
        st = self.store.state
        wid = st.memo.get(key)
        if wid is not None and st.wtags[wid].status == "active":
            return wid
        with self.store._auto():
            wid = self.store.insert_tagged(target_kind, None, parts)
            self.store._emit("materialize", {"key": key, "wid": wid, **info},
                             affected={"wid": [wid] + info.get("sources", [])},
                             summary=f"{info['op']} into {self.store.qualified_name(target_kind)} "
                                     f"WID={wid}")
        return wid

    def _template(self, kind_ref) -> tuple[int, list[int]]:
        kid = kind_ref if isinstance(kind_ref, int) else self.kinds(kind_ref)[0]
        tmpl = self.store.kind(kid).template
        if tmpl is None:
            raise errors.TemplateRequired(
                f"{self.store.qualified_name(kid)} needs a decomposition template first")
        return kid, tmpl

    # -- OP2 project -------------------------------------------------------

    def project(self, source: ResultSet, target: KindRef, rules: Iterable[MappingRule]) -> ResultSet:
        st = self.store.state
        target_kind, tmpl = self._template(target)
        rules = list(rules)
        available = set()
        for it in source.items:
            for n in self.deep_nodes(it.wid):
                available.add(st.wtags[n].kind_id)
        for it in source.items:
            stack = [st.wtags[it.wid].kind_id]
            while stack:
                k = stack.pop()
                for c in st.kinds[k].template or []:
                    if c not in available:
                        available.add(c)
                        stack.append(c)
        compiled = []
        for rule in rules:
            tk = self.kinds(rule.target)[0]
            if tk not in tmpl:
                raise errors.MappingGap(f"{rule.target} is not a component of "
                                        f"{self.store.qualified_name(target_kind)}")
            parts = []
            for p in rule.parts:
                if isinstance(p, FuncPart) and p.name not in ENRICHERS:
                    raise errors.NoConverter(f"no enrichment function {p.name!r}")
                ref = p if isinstance(p, KindRef) else getattr(p, "kind", None)
                if ref is not None:
                    kid = self.kinds(ref)[0]
                    if source.items and kid not in available:
                        raise errors.MappingGap(f"source kind {ref} is absent from the source")
                    parts.append((p, kid))
                else:
                    parts.append((p, None))
            compiled.append((rule, tk, parts))
        digest = hashlib.sha1(json.dumps([repr(r) for r in rules]).encode()).hexdigest()[:12]
        items = []
        for it in source.items:
            nodes = self.deep_nodes(it.wid)
            values, applied = [], []
            for rule, tk, parts in compiled:
                v = self._apply_rule(parts, nodes)
                if v is not None:
                    values.append((tk, v))
                    applied.append({"target": str(rule.target), "rule": rule.style})
            key = f"project:{target_kind}:{digest}:{it.wid}"
            wid = self._materialise(key, target_kind, values,
                                    {"op": "project", "sources": [it.wid], "rules": applied})
            items.append(self.item(wid, [{"source": it.wid, "rules": applied}]))
        return ResultSet(items, list(source.advisories))

    def _first_value(self, kind_id: int, nodes: list) -> Optional[str]:
        st = self.store.state
        for n in nodes:
            wt = st.wtags[n]
            if wt.kind_id == kind_id and wt.shadow_id is not None:
                sh = st.shadows.get(wt.shadow_id)
                if sh is not None and not sh.archived and sh.value is not None:
                    return sh.value
        return None

    def _apply_rule(self, parts: list, nodes: list) -> Optional[str]:
        """Evaluate one mapping rule; a separator before a missing value is dropped."""
        tokens = []
        for p, kid in parts:
            if isinstance(p, StrPart):
                tokens.append((True, p.text))
                continue
            v = self._first_value(kid, nodes)
            if v is not None and isinstance(p, FuncPart):
                v = ENRICHERS[p.name](v)
            tokens.append((False, v))
        if all(is_str for is_str, _ in tokens):
            return "".join(t for _, t in tokens)
        if all(v is None for is_str, v in tokens if not is_str):
            return None
        out = []
        for i, (is_str, text) in enumerate(tokens):
            if not is_str:
                if text is not None:
                    out.append(text)
                continue
            nxt = next((t for s_, t in tokens[i + 1:] if not s_), "end")
            if nxt is not None:
                out.append(text)
        return "".join(out)

    # -- OP6 combine -------------------------------------------------------

    def combine(self, target: KindRef, selections: dict) -> ResultSet:
        """Cross product of component selections, filtered by template correlations."""
        target_kind, tmpl = self._template(target)
        chosen = {}
        for ref, rs in selections.items():
            kid = ref if isinstance(ref, int) else self.kinds(ref)[0]
            if kid not in tmpl:
                raise errors.MappingGap(f"{self.store.qualified_name(kid)} is not a component")
            chosen[kid] = rs
        missing = [k for k in tmpl if k not in chosen]
        if missing:
            raise errors.MappingGap("no selection for components "
                                    + ", ".join(self.store.qualified_name(k) for k in missing))
        correl = sorted({(r.child, r.parent) for k in tmpl for r in self.store.kind_relations(k)
                         if r.child in tmpl and r.parent in tmpl})
        order = list(tmpl)
        items = []
        for combo in itertools.product(*[chosen[k].items for k in order]):
            wids = {k: it.wid for k, it in zip(order, combo)}
            proofs = []
            ok = True
            for c, p in correl:
                holds, proof = inference.inclusion_holds(self.store, wids[c], wids[p])
                if not holds:
                    ok = False
                    break
                proofs.append(proof.to_dict())
            if not ok:
                continue
            key = f"combine:{target_kind}:" + ",".join(str(wids[k]) for k in order)
            wid = self._materialise(key, target_kind, [(k, ("wid", wids[k])) for k in order],
                                    {"op": "combine", "sources": [wids[k] for k in order]})
            item = self.item(wid, [{"components": [wids[k] for k in order]}] +
                             [{"correlation": p} for p in proofs])
            item.components = [wids[k] for k in order]
            items.append(item)
        return ResultSet(items)

    # -- OP7/OP8 joins -----------------------------------------------------

    def observables(self, item: ResultItem, kind: KindRef) -> list[int]:
        kinds = set(self.kinds(kind))
        st = self.store.state
        return [n for n in self.deep_nodes(item.wid) if st.wtags[n].kind_id in kinds]

    def _strong_admit(self, wa: int, wb: int) -> Optional[dict]:
        st = self.store.state
        if wa == wb:
            return {"via": "same-wid", "wid": wa}
        sa, sb = st.wtags[wa].shadow_id, st.wtags[wb].shadow_id
        eid = self.store.strong_link(wa, wb)
        if sa is not None and sa == sb:
            return {"via": "synchronization", "shadow_id": sa, "etag": eid}
        if eid is not None:
            return {"via": "etag", "etag": eid}
        return None

    def _join(self, left, on_left, right, on_right, target, admit, label, symmetric):
        target_kind, tmpl = self._template(target)
        st = self.store.state
        items, seen = [], set()
        for a in left.items:
            obs_a = self.observables(a, on_left)
            for b in right.items:
                if a.wid == b.wid:
                    continue
                proof = None
                for wa in obs_a:
                    for wb in self.observables(b, on_right):
                        proof = admit(wa, wb)
                        if proof is not None:
                            proof = dict(proof, left=wa, right=wb)
                            break
                    if proof is not None:
                        break
                if proof is None:
                    continue
                pair = (a.wid, b.wid)
                ends = tuple(sorted(pair)) if symmetric else pair
                if ends in seen:
                    continue
                seen.add(ends)
                ka, kb = st.wtags[a.wid].kind_id, st.wtags[b.wid].kind_id
                by_kind = {ka: a.wid}
                by_kind.setdefault(kb, b.wid)
                if ka == kb or ka not in tmpl or kb not in tmpl:
                    raise errors.TemplateRequired(
                        f"template of {self.store.qualified_name(target_kind)} must hold "
                        f"{self.store.qualified_name(ka)} and {self.store.qualified_name(kb)}")
                ordered = [k for k in tmpl if k in by_kind]
                key = f"join:{label}:{target_kind}:{ends[0]}:{ends[1]}"
                wid = self._materialise(key, target_kind,
                                        [(k, ("wid", by_kind[k])) for k in ordered],
                                        {"op": f"join-{label}", "sources": list(ends),
                                         "admitted": proof})
                item = self.item(wid, [proof])
                item.components = [by_kind[k] for k in ordered]
                items.append(item)
        return ResultSet(items, left.advisories + right.advisories)

    def join_strong(self, left: ResultSet, on_left: KindRef, right: ResultSet,
                    on_right: KindRef, target: KindRef) -> ResultSet:
        return self._join(left, on_left, right, on_right, target, self._strong_admit,
                          "strong", True)

    def join_weak(self, left: ResultSet, on_left: KindRef, right: ResultSet,
                  on_right: KindRef, target: KindRef, direction: str = "forward") -> ResultSet:
        """Admit ``(a, b)`` only via an active weak E-tag in the requested direction.

        ``forward`` needs ``obs_a ⊆ obs_b``; ``reverse`` needs ``obs_b ⊆ obs_a``.
        """
        if direction not in ("forward", "reverse"):
            raise errors.QueryTypeError(f"direction must be forward or reverse, not {direction!r}")

        def admit(wa, wb):
            eid = (self.store.weak_link(wa, wb) if direction == "forward"
                   else self.store.weak_link(wb, wa))
            return None if eid is None else {"via": "etag", "etag": eid, "direction": direction}

        return self._join(left, on_left, right, on_right, target, admit,
                          f"weak-{direction}", False)
