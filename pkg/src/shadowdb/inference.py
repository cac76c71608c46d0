"""Region logic over WIDs: inclusion closure, composition verdicts, level
shifting along IS-A/HAS-A hierarchies, and the property checker.

All functions take a store (or a snapshot of one). Only
:func:`infer_level_shift` and the witness checks write, and the witnesses
write to a fork.
"""

from __future__ import annotations

import itertools
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from . import errors
from .records import HAS_A, IS_A, STRONG, WEAK
from .semantic import INSTANCE, OBSERVABLE

Step = tuple  # ("relation", id) | ("etag", id)


@dataclass
class InclusionProof:
    steps: list = field(default_factory=list)
    perspectives_crossed: list = field(default_factory=list)
    wids: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"steps": [list(s) for s in self.steps],
                "perspectives_crossed": [list(p) for p in self.perspectives_crossed],
                "wids": list(self.wids)}


@dataclass
class Entailed:
    proof: InclusionProof
    verdict: str = "Entailed"


@dataclass
class DecisionRequired:
    boundaries: list  # etag ids whose supporting power needs review
    proof: InclusionProof
    verdict: str = "DecisionRequired"


@dataclass
class NotRelated:
    verdict: str = "NotRelated"


@dataclass
class DerivedInstance:
    wid: int
    base_wid: int
    # [(original_wid, target_wid, "upward"|"downward"), ...]
    shifts: list
    path: list

    @property
    def shifted_component(self) -> tuple:
        return self.shifts[0][0], self.shifts[0][1]

    @property
    def direction(self) -> str:
        dirs = {s[2] for s in self.shifts}
        return dirs.pop() if len(dirs) == 1 else "combined"


# -- inclusion ---------------------------------------------------------------

def _live(store, wid: int) -> bool:
    wt = store.state.wtags.get(wid)
    return wt is not None and wt.status == "active"


def included_edges(store, wid: int) -> Iterator[tuple[int, Step]]:
    """Edges ``wid ⊆ other``: same-perspective relations and active E-tags."""
    st = store.state
    pw = st.kinds[st.wtags[wid].kind_id].perspective_id
    for rid in st.parent_rels.get(wid, []):
        rel = st.relations[rid]
        if rel.status != "active" or rel.level != INSTANCE or not _live(store, rel.parent):
            continue
        # an edge smuggled across perspectives is not evidence of inclusion
        if st.kinds[st.wtags[rel.parent].kind_id].perspective_id != pw:
            continue
        yield rel.parent, ("relation", rid)
    for eid in st.etags_by_wid.get(wid, []):
        tag = st.etags[eid]
        if tag.status != "active":
            continue
        if tag.kind == STRONG:
            other = tag.wid_b if tag.wid_a == wid else tag.wid_a
        elif tag.wid_a == wid:
            other = tag.wid_b
        else:
            continue
        if _live(store, other):
            yield other, ("etag", eid)


def _crossing(store, step: Step) -> Optional[tuple[int, int]]:
    if step[0] != "etag":
        return None
    st = store.state
    tag = st.etags[step[1]]
    pa = st.kinds[st.wtags[tag.wid_a].kind_id].perspective_id
    pb = st.kinds[st.wtags[tag.wid_b].kind_id].perspective_id
    return (pa, pb) if pa != pb else None


def _proof(store, parents: dict, target: int) -> InclusionProof:
    steps, wids = [], [target]
    node = target
    while parents[node] is not None:
        prev, step = parents[node]
        steps.append(step)
        wids.append(prev)
        node = prev
    steps.reverse()
    wids.reverse()
    # reported in walk order, which for a strong tag may be b -> a
    crossed = [(store.perspective_of(u), store.perspective_of(v))
               for s, u, v in zip(steps, wids, wids[1:]) if _crossing(store, s)]
    return InclusionProof(steps, crossed, wids)


def inclusion_holds(store, wid_a: int, wid_b: int) -> tuple[bool, Optional[InclusionProof]]:
    """Whether ``a ⊆ b``; breadth-first so proofs are shortest."""
    store.wtag(wid_a)
    store.wtag(wid_b)
    if wid_a == wid_b:
        return True, InclusionProof([], [], [wid_a])
    tick = store._steps()
    parents = {wid_a: None}
    queue = deque([wid_a])
    while queue:
        node = queue.popleft()
        for nxt, step in included_edges(store, node):
            tick()
            if nxt in parents:
                continue
            parents[nxt] = (node, step)
            if nxt == wid_b:
                return True, _proof(store, parents, nxt)
            queue.append(nxt)
    return False, None


def upset(store, wid: int) -> set[int]:
    """All WIDs including ``wid`` (reflexive)."""
    tick = store._steps()
    seen, stack = {wid}, [wid]
    while stack:
        node = stack.pop()
        for nxt, _ in included_edges(store, node):
            tick()
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return seen


def _perspective_wids(store, perspective_id: Optional[int]) -> list[int]:
    st = store.state
    return sorted(w for w, wt in st.wtags.items() if wt.status == "active" and (
        perspective_id is None or st.kinds[wt.kind_id].perspective_id == perspective_id))


def reachability(store, wids: list[int]) -> np.ndarray:
    """Boolean matrix ``R[i, j] = wids[i] ⊆ wids[j]`` restricted to ``wids``."""
    pos = {w: i for i, w in enumerate(wids)}
    out = np.zeros((len(wids), len(wids)), dtype=bool)
    for i, w in enumerate(wids):
        for u in upset(store, w):
            j = pos.get(u)
            if j is not None:
                out[i, j] = True
    return out


def _inclusion_graph(store, wids: list[int]) -> csr_matrix:
    pos = {w: i for i, w in enumerate(wids)}
    rows, cols = [], []
    for i, w in enumerate(wids):
        for nxt, _ in included_edges(store, w):
            j = pos.get(nxt)
            if j is not None:
                rows.append(i)
                cols.append(j)
    n = len(wids)
    return csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(n, n))


def equivalence_classes(store, perspective_id: Optional[int] = None) -> list[list[int]]:
    """Mutual-inclusion classes (strongly connected components), singletons included."""
    out = []
    pids = ([perspective_id] if perspective_id is not None
            else sorted(store.state.perspectives))
    for pid in pids:
        wids = _perspective_wids(store, pid)
        if not wids:
            continue
        _, labels = connected_components(_inclusion_graph(store, wids), directed=True,
                                         connection="strong")
        groups: dict = {}
        for w, lab in zip(wids, labels):
            groups.setdefault(int(lab), []).append(w)
        out.extend(sorted(groups.values()))
    return sorted(out)


def check_composition(store, wid_a: int, wid_c: int):
    """Verdict on whether ``a ⊆ c`` follows by composing known links.

    Zero-crossing chains inside one perspective are entailed. Chains that
    cross a perspective boundary are never entailed: the crossing E-tags
    are returned for human review. Uses a 0-1 search on crossings so the
    reported chain crosses as few boundaries as possible.
    """
    store.wtag(wid_a)
    store.wtag(wid_c)
    if wid_a == wid_c:
        return Entailed(InclusionProof([], [], [wid_a]))
    tick = store._steps()
    cost = {wid_a: 0}
    parents = {wid_a: None}
    dq = deque([(0, wid_a)])
    done = set()
    while dq:
        c, node = dq.popleft()
        if node in done:
            continue
        done.add(node)
        if node == wid_c:
            break
        for nxt, step in included_edges(store, node):
            tick()
            w = 1 if _crossing(store, step) else 0
            if nxt not in cost or c + w < cost[nxt]:
                cost[nxt] = c + w
                parents[nxt] = (node, step)
                if w:
                    dq.append((c + w, nxt))
                else:
                    dq.appendleft((c + w, nxt))
    if wid_c not in parents:
        return NotRelated()
    proof = _proof(store, parents, wid_c)
    if cost[wid_c] == 0:
        return Entailed(proof)
    return DecisionRequired([s[1] for s in proof.steps if _crossing(store, s)], proof)


# -- level shifting ------------------------------------------------------------

def _shift_targets(store, wid: int, direction: str, use_etags: bool) -> dict[int, list]:
    """WIDs reachable from ``wid`` by marked edges (and E-tags), with their path."""
    st = store.state
    tick = store._steps()
    found = {wid: []}
    stack = [wid]
    while stack:
        node = stack.pop()
        nexts = []
        if direction == "upward":
            for rid in st.parent_rels.get(node, []):
                rel = st.relations[rid]
                if rel.status == "active" and rel.level == INSTANCE and rel.marker == HAS_A:
                    nexts.append((rel.parent, ("relation", rid)))
        else:
            for rid in st.child_rels.get(node, []):
                rel = st.relations[rid]
                if rel.status == "active" and rel.level == INSTANCE and rel.marker == IS_A:
                    nexts.append((rel.child, ("relation", rid)))
        if use_etags:
            for eid in st.etags_by_wid.get(node, []):
                tag = st.etags[eid]
                if tag.status != "active":
                    continue
                if tag.kind == STRONG:
                    nexts.append((tag.wid_b if tag.wid_a == node else tag.wid_a, ("etag", eid)))
                elif tag.kind == WEAK and direction == "upward" and tag.wid_a == node:
                    nexts.append((tag.wid_b, ("etag", eid)))
        for nxt, step in nexts:
            tick()
            if nxt not in found and _live(store, nxt):
                found[nxt] = found[node] + [step]
                stack.append(nxt)
    del found[wid]
    return found


def shift_options(store, composite_wid: int, *, use_etags: bool = True) -> list[list[tuple]]:
    """Per component: ``[(original, target, direction, path), ...]`` with identity first."""
    st = store.state
    base = store.wtag(composite_wid)
    tmpl = st.kinds[base.kind_id].template
    options = []
    for rel in store.child_relations(composite_wid):
        comp = rel.child
        opts = [(comp, comp, None, [])]
        seen = {comp}
        for direction in ("upward", "downward"):
            for target, path in sorted(_shift_targets(store, comp, direction, use_etags).items()):
                if tmpl is not None and st.wtags[target].kind_id not in tmpl:
                    continue
                # a strong E-tag reaches its partner in both directions; keep the first
                if target in seen:
                    continue
                seen.add(target)
                opts.append((comp, target, direction, path))
        options.append((rel, opts))
    return options


def infer_level_shift(store, composite_wid: int, *, use_etags: bool = True) -> list[DerivedInstance]:
    """Materialise every derived instance of a composite obtained by replacing
    components with HAS-A ancestors or IS-A descendants, alone or combined.

    Derived WIDs are allocated once per derivation key, so reruns return the
    same WIDs.
    """
    st = store.state
    base = store.wtag(composite_wid)
    options = shift_options(store, composite_wid, use_etags=use_etags)
    if not options:
        return []
    out = []
    with store._auto():
        for combo in itertools.product(*[opts for _, opts in options]):
            shifts = [(o, t, d) for o, t, d, _ in combo if d is not None]
            if not shifts:
                continue
            key = f"shift:{composite_wid}:" + ",".join(f"{o}>{t}" for o, t, _ in shifts)
            path = [{"kind": "base", "id": composite_wid}]
            for o, t, d, steps in combo:
                if d is None:
                    continue
                path.append({"kind": "shift", "from": o, "to": t, "direction": d})
                path += [{"kind": s[0], "id": s[1]} for s in steps]
            wid = st.memo.get(key)
            if wid is None or st.wtags[wid].status != "active":
                wid = _materialise(store, base, key, path,
                                   [(rel, t) for (rel, _), (_, t, _, _) in zip(options, combo)])
            out.append(DerivedInstance(wid, composite_wid, shifts, st.wtags[wid].derivation_path))
    return out


def _materialise(store, base, key: str, path: list, components: list) -> int:
    st = store.state
    wid = st.allocate("wid")
    pid = st.kinds[base.kind_id].perspective_id
    rels = []
    rid = st.allocate("relation")
    for rel, target in components:
        tp = st.kinds[st.wtags[target].kind_id].perspective_id
        rels.append({"relation_id": rid, "level": INSTANCE if tp == pid else OBSERVABLE,
                     "child": target, "parent": wid, "marker": rel.marker,
                     "perspective_id": pid, "derived": True, "role": rel.role})
        rid += 1
    store._emit("derive", {"wid": wid, "kind_id": base.kind_id, "key": key, "path": path,
                           "relations": rels},
                affected={"wid": [wid, base.wid] + [t for _, t in components],
                          "relation": [r["relation_id"] for r in rels]},
                summary=f"derive {store.qualified_name(base.kind_id)} WID={wid} from WID {base.wid}")
    return wid


# -- property checks -----------------------------------------------------------

@dataclass
class PropertyEntry:
    property: str
    status: str  # pass | violation | advisory | open-world
    details: list = field(default_factory=list)


@dataclass
class PropertyReport:
    entries: list

    @property
    def ok(self) -> bool:
        return all(e.status != "violation" for e in self.entries)

    def to_dict(self) -> dict:
        return {"ok": self.ok, "entries": [e.__dict__ for e in self.entries]}


def _p2(store) -> PropertyEntry:
    st = store.state
    bad = []
    for rid, rel in sorted(st.relations.items()):
        if rel.level != INSTANCE or rel.status != "active":
            continue
        pc = st.kinds[st.wtags[rel.child].kind_id].perspective_id
        pp = st.kinds[st.wtags[rel.parent].kind_id].perspective_id
        if pc != pp:
            bad.append({"relation_id": rid, "child": rel.child, "parent": rel.parent})
    return PropertyEntry("P2", "violation" if bad else "pass", bad)


def _strong_groups(store) -> dict[int, int]:
    """WID -> representative under active strong E-tags (union-find)."""
    parent: dict = {}

    def find(x):
        parent.setdefault(x, x)
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for tag in store.state.etags.values():
        if tag.status == "active" and tag.kind == STRONG:
            parent[find(tag.wid_a)] = find(tag.wid_b)
    return {w: find(w) for w in parent}


def _p5(store) -> PropertyEntry:
    groups = _strong_groups(store)
    notes = []
    for cls in equivalence_classes(store):
        if len(cls) < 2:
            continue
        reps = {groups.get(w, ("solo", w)) for w in cls}
        if len(reps) > 1:
            notes.append({"class": cls, "advice": "collapse with a strong E-tag"})
    return PropertyEntry("P5", "advisory" if notes else "pass", notes)


def _p6(store) -> PropertyEntry:
    st = store.state
    bad = []
    ends = sorted({w for t in st.etags.values() if t.status == "active"
                   for w in (t.wid_a, t.wid_b) if _live(store, w)})
    for a in ends:
        for c in ends:
            if a == c or store.perspective_of(a) == store.perspective_of(c):
                continue
            if isinstance(check_composition(store, a, c), Entailed):
                bad.append({"a": a, "c": c})
    return PropertyEntry("P6", "violation" if bad else "pass", bad)


def _p9(store, limit: int) -> PropertyEntry:
    bad, skipped = [], []
    for pid in sorted(store.state.perspectives):
        wids = _perspective_wids(store, pid)
        if len(wids) > limit:
            skipped.append({"skipped": f"perspective {pid} larger than {limit}"})
            continue
        if not wids:
            continue
        r = reachability(store, wids)
        # lower sets: column j of r lists everything included in wids[j]
        ri = r.astype(np.int32)
        contained = (ri.T @ (1 - ri)) == 0
        for i, j in zip(*np.nonzero(contained & ~r)):
            bad.append({"q": wids[i], "r": wids[j]})
    if bad:
        return PropertyEntry("P9", "violation", bad + skipped)
    return PropertyEntry("P9", "advisory" if skipped else "pass", skipped)


def check_properties(store, *, witness_samples: int = 5, seed: int = 0,
                     p9_limit: int = 400) -> PropertyReport:
    """One report entry per checkable region property."""
    entries = [PropertyEntry("P1", "pass", [{"note": "reflexivity holds by construction"}]),
               _p2(store)]
    wits = run_witnesses(store, samples=witness_samples, seed=seed)
    for prop in ("P3", "P4"):
        entries.append(PropertyEntry(prop, "open-world" if all(w["ok"] for w in wits[prop])
                                     else "violation", wits[prop]))
    entries.append(_p5(store))
    entries.append(_p6(store))
    for prop in ("P7", "P8"):
        entries.append(PropertyEntry(prop, "open-world" if all(w["ok"] for w in wits[prop])
                                     else "violation", wits[prop]))
    entries.append(_p9(store, p9_limit))
    return PropertyReport(entries)


# -- constructive witnesses ----------------------------------------------------

WITNESS_KIND = "Witness_region"


class Witness:
    """Open-world constructions on a fork of a store."""

    def __init__(self, store):
        self.fork = store.fork()
        self.fork.use_process(0)
        self._kinds: dict = {}

    def _region(self, perspective_id: int) -> int:
        f = self.fork
        kid = self._kinds.get(perspective_id)
        if kid is None:
            name = WITNESS_KIND
            while (perspective_id, name) in f.state.kind_by_name:
                name += "_"
            kid = f.define_kind(perspective_id, name, "synthetic region built by a witness check")
            self._kinds[perspective_id] = kid
        sid = f.insert_shadow(None)
        return f.attach_wtag(sid, kid)

    def _include(self, child: int, parent: int) -> None:
        f = self.fork
        try:
            f.assert_relation(child, parent)
        except (errors.RuleViolation, errors.UseEquivalenceLedger):
            f.assert_etag(child, parent, WEAK, "a<=b",
                          [{"kind": "rule-derived", "body": "witness inclusion"}])

    def _holds(self, a: int, b: int) -> bool:
        return inclusion_holds(self.fork, a, b)[0]

    def parent(self, a: int) -> bool:
        """Property 3: some region includes ``a``."""
        with self.fork.transaction(0):
            r = self._region(self.fork.perspective_of(a))
            self._include(a, r)
        return self._holds(a, r)

    def child(self, a: int) -> bool:
        """Property 4: some region is included in ``a``."""
        with self.fork.transaction(0):
            r = self._region(self.fork.perspective_of(a))
            self._include(r, a)
        return self._holds(r, a)

    def between(self, a: int, c: int) -> bool:
        """Property 7: for ``a ⊆ c`` some ``b`` has ``a ⊆ b ⊆ c``."""
        with self.fork.transaction(0):
            b = self._region(self.fork.perspective_of(a))
            self._include(a, b)
            self._include(b, c)
        return self._holds(a, b) and self._holds(b, c)

    def enclosing(self, a: int, b: int) -> bool:
        """Property 8: some region includes both ``a`` and ``b``."""
        with self.fork.transaction(0):
            r = self._region(self.fork.perspective_of(a))
            self._include(a, r)
            if self.fork.perspective_of(b) == self.fork.perspective_of(a):
                self._include(b, r)
            else:
                self.fork.assert_etag(b, r, WEAK, "a<=b",
                                      [{"kind": "rule-derived", "body": "witness inclusion"}])
        return self._holds(a, r) and self._holds(b, r)


def run_witnesses(store, *, samples: int = 5, seed: int = 0,
                  pairs: Optional[list] = None) -> dict[str, list]:
    """Run the four constructive checks on sampled WIDs (or given pairs)."""
    out = {"P3": [], "P4": [], "P7": [], "P8": []}
    wids = _perspective_wids(store, None)
    if not wids:
        return out
    rng = random.Random(seed)
    if pairs is None:
        pairs = [(rng.choice(wids), rng.choice(wids)) for _ in range(samples)]
    w = Witness(store)
    for a, b in pairs:
        out["P3"].append({"wid": a, "ok": w.parent(a)})
        out["P4"].append({"wid": a, "ok": w.child(a)})
        if store.perspective_of(a) == store.perspective_of(b):
            out["P8"].append({"a": a, "b": b, "ok": w.enclosing(a, b)})
        holds, _ = inclusion_holds(store, a, b)
        if holds:
            out["P7"].append({"a": a, "c": b, "ok": w.between(a, b)})
    return out
