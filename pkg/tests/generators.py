"""Random store builders that record what they built.

Each builder returns the store together with the plain edge lists or rows
it created, so the oracles never have to read the engine back.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from datetime import date, timedelta

from shadowdb import HAS_A, IS_A, STRONG, UNMARKED, WEAK, Store
from shadowdb.algebra import (And, FuncPart, KindRef, MappingRule, Not, Or, RelationTerm,
                              StrPart, ValueTerm, WidRef)
from shadowdb.query import Combine, Join, Project, Select, SetOp

MARKERS = (UNMARKED, IS_A, HAS_A)
EVIDENCE = [{"kind": "human-decision", "body": "generated"}]


def clock():
    return "2024-01-01T00:00:00Z"


def new_store() -> Store:
    return Store(clock=clock)


@dataclass
class RegionStore:
    store: Store
    wids: list
    perspective: dict  # wid -> perspective id
    edges: list = field(default_factory=list)  # (child, parent, crosses)
    cross_etags: list = field(default_factory=list)

    def plain_edges(self):
        return [(u, v) for u, v, _ in self.edges]


def region_store(rng: random.Random, *, perspectives: int = 1, max_wids: int = 12,
                 relation_p: float = 0.15, etags: int = 0, chain: bool = False) -> RegionStore:
    """Regions spread over ``perspectives`` with random inclusion edges and E-tags.

    With ``chain`` the store is guaranteed a cross-perspective E-tag chain
    of length two through three regions.
    """
    s = new_store()
    pid = s.register_process("generator", ["generate"])
    n = rng.randint(max(3 if chain else 1, perspectives), max_wids)
    with s.transaction(pid):
        ps = [s.create_perspective(f"Q{i}") for i in range(perspectives)]
        kinds = {p: s.define_kind(p, "Region", "generated region") for p in ps}
        wids, persp = [], {}
        for i in range(n):
            p = ps[i % len(ps)] if i < len(ps) else rng.choice(ps)
            w = s.attach_wtag(s.insert_shadow(f"r{i}"), kinds[p])
            wids.append(w)
            persp[w] = p
        rs = RegionStore(s, wids, persp)
        for a, b in itertools.permutations(wids, 2):
            if persp[a] == persp[b] and rng.random() < relation_p:
                s.assert_relation(a, b, rng.choice(MARKERS))
                rs.edges.append((a, b, False))

        def etag(a, b, kind):
            crosses = persp[a] != persp[b]
            if kind == STRONG:
                s.assert_etag(a, b, STRONG, None, EVIDENCE)
                rs.edges += [(a, b, crosses), (b, a, crosses)]
            else:
                s.assert_etag(a, b, WEAK, "a<=b", EVIDENCE)
                rs.edges.append((a, b, crosses))
            if crosses:
                rs.cross_etags.append((a, b, kind))

        if chain and perspectives > 1:
            by_p = {p: [w for w in wids if persp[w] == p] for p in ps}
            x, y = rng.choice(by_p[ps[0]]), rng.choice(by_p[ps[1]])
            z = rng.choice(by_p[ps[-1]] if len(ps) > 2 else by_p[ps[0]])
            if z == x:
                z = None
            etag(x, y, rng.choice((STRONG, WEAK)))
            if z is not None:
                etag(y, z, rng.choice((STRONG, WEAK)))
        for _ in range(etags):
            a, b = rng.sample(wids, 2) if len(wids) > 1 else (None, None)
            if a is None:
                break
            etag(a, b, rng.choice((STRONG, WEAK)))
    return rs


# -- level shifting ----------------------------------------------------------

@dataclass
class ShiftStore:
    store: Store
    base: int
    components: tuple  # (ec_wid, acct_wid)
    has_a_parents: dict
    is_a_children: dict


def _random_dag(rng, s, kind, n, prefix, rec_up, rec_down):
    nodes = [s.attach_wtag(s.insert_shadow(f"{prefix}{i}"), kind) for i in range(n)]
    for i, child in enumerate(nodes[1:], 1):
        for parent in rng.sample(nodes[:i], rng.randint(1, min(2, i))):
            marker = rng.choice(MARKERS)
            s.assert_relation(child, parent, marker)
            if marker == HAS_A:
                rec_up.setdefault(child, []).append(parent)
            if marker == IS_A:
                rec_down.setdefault(parent, []).append(child)
    return nodes


def shift_store(rng: random.Random, *, max_nodes: int = 5) -> ShiftStore:
    """Two random hierarchies and one composite over a node of each."""
    s = new_store()
    pid = s.register_process("generator", ["generate"])
    up, down = {}, {}
    with s.transaction(pid):
        p = s.create_perspective("H")
        ec = s.define_kind(p, "EC", "enterprise customer")
        acct = s.define_kind(p, "Acct", "account")
        own = s.define_kind(p, "Ownership", "who owns which account", template=[ec, acct])
        ecs = _random_dag(rng, s, ec, rng.randint(1, max_nodes), "ec", up, down)
        accts = _random_dag(rng, s, acct, rng.randint(1, max_nodes), "acct", up, down)
        comps = (rng.choice(ecs), rng.choice(accts))
        base = s.insert_tagged(own, None, [(ec, ("wid", comps[0])), (acct, ("wid", comps[1]))])
    return ShiftStore(s, base, comps, up, down)


def derived_components(store, derived_wid, base_components):
    """Component tuple of a derived composite, ordered like the base."""
    kinds = [store.state.wtags[w].kind_id for w in base_components]
    by_kind = {store.state.wtags[r.child].kind_id: r.child
               for r in store.child_relations(derived_wid)}
    return tuple(by_kind[k] for k in kinds)


# -- simulated schemas -------------------------------------------------------

COLUMN_TYPES = ("integer", "date", "text", "enum")
PTAGS = {"integer": {"type": "integer"}, "date": {"type": "date", "pattern": "YYYY-MM-DD"},
         "text": {"type": "text"}, "enum": {"type": "enum", "values": ["A", "B", "C"]}}
WORDS = ("ash", "birch", "cedar", "elm", "fir")
DAY0 = date(2020, 1, 1)


def random_value(rng, ctype):
    if ctype == "integer":
        return str(rng.randint(-5, 20))
    if ctype == "date":
        return (DAY0 + timedelta(days=rng.randint(0, 40))).isoformat()
    if ctype == "text":
        return rng.choice(WORDS)
    return rng.choice(("A", "B", "C"))


@dataclass
class Table:
    name: str
    schema_id: int
    columns: list  # column identifiers, c0 is the key
    ctypes: dict  # column -> type
    rows: list  # dicts with _key, _wid and column values (None for null)


@dataclass
class RelationalStore:
    store: Store
    tables: list


def relational_store(rng: random.Random, *, max_tables: int = 3, max_rows: int = 50,
                     null_p: float = 0.2) -> RelationalStore:
    s = new_store()
    pid = s.register_process("generator", ["generate"])
    tables = []
    with s.transaction(pid):
        p = s.create_perspective("R")
        for ctype, spec in PTAGS.items():
            s.define_ptag(f"{ctype}_domain", spec)
        for t in range(rng.randint(1, max_tables)):
            name = f"t{t}"
            ncols = rng.randint(1, 4)
            ctypes = {"c0": "integer"}
            for j in range(1, ncols + 1):
                ctypes[f"c{j}"] = rng.choice(COLUMN_TYPES)
            root = s.define_kind(p, f"{name}_row", f"row of {name}")
            cols = []
            for col, ctype in ctypes.items():
                k = s.define_kind(p, f"{name}_{col}", f"column {col} of {name}")
                cols.append((k, f"{ctype}_domain"))
            proj = [s.define_kind(p, f"{name}_p{j}", f"projected column {j} of {name}")
                    for j in range(len(ctypes))]
            s.define_kind(p, f"{name}_proj", f"projection of {name}", template=proj)
            sid = s.define_simulated_schema(p, name, root, cols, key=cols[0][0])
            rows = []
            for r in range(rng.randint(0, max_rows)):
                row = {"_key": str(r), "c0": str(r)}
                for col, ctype in ctypes.items():
                    if col != "c0":
                        row[col] = None if rng.random() < null_p else random_value(rng, ctype)
                values = {f"{name}_{c}": v for c, v in row.items()
                          if not c.startswith("_") and v is not None}
                row_sid = s.load_row(sid, values)
                row["_wid"] = s.wid_for(row_sid, root)
                rows.append(row)
            tables.append(Table(name, sid, list(ctypes), ctypes, rows))
    return RelationalStore(s, tables)


OPS_BY_TYPE = {"integer": ("=", "!=", "<", "<=", ">", ">="),
               "date": ("=", "!=", "<", "<=", ">", ">="),
               "text": ("=", "!="), "enum": ("=", "!=")}


def random_predicate(rng, table: Table, depth: int = 0):
    """Returns ``(ast, oracle_tuple)`` for a random value-term predicate."""
    roll = rng.random()
    if depth >= 2 or roll < 0.4:
        col = rng.choice(table.columns)
        ctype = table.ctypes[col]
        op = rng.choice(OPS_BY_TYPE[ctype])
        lit = random_value(rng, ctype)
        return (ValueTerm(KindRef("R", f"{table.name}_{col}"), op, lit), ("cmp", col, op, lit))
    if roll < 0.6:
        inner, o = random_predicate(rng, table, depth + 1)
        return Not(inner), ("not", o)
    (la, lo), (ra, ro) = random_predicate(rng, table, depth + 1), random_predicate(rng, table, depth + 1)
    if roll < 0.8:
        return And(la, ra), ("and", lo, ro)
    return Or(la, ra), ("or", lo, ro)


# -- grammar-driven query generation -----------------------------------------

_NAMES = ("Customer", "EC_Num", "Name", "Status", "ZIP", "Line1", "Select", "where", "x1")
_PERSPECTIVES = ("P1", "P2", "P3", "P4", "P5")
_LITERALS = ("", "ABC Corp", "a \"quoted\" word", "back\\slash", "line\nbreak", "763810", "-3")


def _kindref(rng, star=True):
    kind = "*" if star and rng.random() < 0.1 else rng.choice(_NAMES)
    return KindRef(rng.choice(_PERSPECTIVES), kind)


def _pred(rng, depth):
    roll = rng.random()
    if depth >= 3 or roll < 0.35:
        if rng.random() < 0.75:
            return ValueTerm(_kindref(rng, star=False), rng.choice(OPS_BY_TYPE["integer"]),
                             rng.choice(_LITERALS))
        target = WidRef(rng.randint(0, 999)) if rng.random() < 0.5 else _kindref(rng)
        return RelationTerm(rng.choice(("INCLUDED_IN", "INCLUDES", "SAME_AS")), target)
    if roll < 0.5:
        return Not(_pred(rng, depth + 1))
    cls = And if roll < 0.75 else Or
    return cls(_pred(rng, depth + 1), _pred(rng, depth + 1))


def _derived(rng):
    return rng.choice((None, None, True, False))


def _part(rng):
    roll = rng.random()
    if roll < 0.6:
        return _kindref(rng, star=False)
    if roll < 0.85:
        return StrPart(rng.choice((", ", " ", "-", "x\"y")))
    return FuncPart(rng.choice(("zip_lookup", "upper")), _kindref(rng, star=False))


def random_query(rng: random.Random, depth: int = 0):
    """A random query AST drawn from the full grammar."""
    roll = rng.random() if depth < 3 else 0.0
    if roll < 0.4:
        scope = tuple(_kindref(rng) for _ in range(rng.randint(0, 2)))
        where = _pred(rng, 0) if rng.random() < 0.7 else None
        return Select(scope, where, _derived(rng))
    if roll < 0.6:
        return SetOp(rng.choice(("UNION", "DIFF", "INTERSECT")), random_query(rng, depth + 1),
                     random_query(rng, depth + 1))
    if roll < 0.72:
        rules = tuple(MappingRule(tuple(_part(rng) for _ in range(rng.randint(1, 3))),
                                  _kindref(rng, star=False))
                      for _ in range(rng.randint(1, 3)))
        return Project(random_query(rng, depth + 1), _kindref(rng, star=False), rules)
    if roll < 0.84:
        parts = tuple((_kindref(rng, star=False), random_query(rng, depth + 1))
                      for _ in range(rng.randint(1, 2)))
        return Combine(_kindref(rng, star=False), parts)
    strength = rng.choice(("STRONG", "WEAK"))
    direction = rng.choice((None, "FORWARD", "REVERSE")) if strength == "WEAK" else None
    return Join(strength, random_query(rng, depth + 1), _kindref(rng, star=False),
                random_query(rng, depth + 1), _kindref(rng, star=False),
                _kindref(rng, star=False), direction, _derived(rng))


def hierarchy_store() -> ShiftStore:
    """Three-level EC hierarchy over HAS-A, three-level Acct hierarchy over IS-A,
    one Ownership base, plus unmarked and off-path distractors."""
    s = new_store()
    pid = s.register_process("generator", ["generate"])
    with s.transaction(pid):
        p = s.create_perspective("H")
        ec = s.define_kind(p, "EC", "enterprise customer")
        acct = s.define_kind(p, "Acct", "account")
        own = s.define_kind(p, "Ownership", "who owns which account", template=[ec, acct])
        n = {name: s.attach_wtag(s.insert_shadow(name), ec)
             for name in ("ECroot", "EC1", "EC1.1", "EC1.2")}
        n.update({name: s.attach_wtag(s.insert_shadow(name), acct)
                  for name in ("Acct1", "Acct1.1", "Acct1.1.1", "Acct1.1.1.2", "Acct1.1.2")})
        s.assert_relation(n["EC1"], n["ECroot"], HAS_A)
        s.assert_relation(n["EC1.2"], n["EC1"], HAS_A)
        s.assert_relation(n["EC1.1"], n["EC1"], UNMARKED)
        s.assert_relation(n["Acct1.1"], n["Acct1"], IS_A)
        s.assert_relation(n["Acct1.1.1"], n["Acct1.1"], IS_A)
        s.assert_relation(n["Acct1.1.1.2"], n["Acct1.1.1"], IS_A)
        s.assert_relation(n["Acct1.1.2"], n["Acct1.1"], UNMARKED)
        base = s.insert_tagged(own, None, [(ec, ("wid", n["EC1.2"])),
                                           (acct, ("wid", n["Acct1.1"]))])
    up = {n["EC1"]: [n["ECroot"]], n["EC1.2"]: [n["EC1"]]}
    down = {n["Acct1"]: [n["Acct1.1"]], n["Acct1.1"]: [n["Acct1.1.1"]],
            n["Acct1.1.1"]: [n["Acct1.1.1.2"]]}
    fx = ShiftStore(s, base, (n["EC1.2"], n["Acct1.1"]), up, down)
    fx.names = n
    return fx
