"""Textual query language: lexer, recursive-descent parser, canonical printer,
evaluator and result renderers (table, json, xml-tags).

Grammar::

    query    := primary ((UNION | DIFF | INTERSECT) primary)*
    primary  := select | project | combine | join | "(" query ")"
    select   := SELECT [kindref ("," kindref)*] [WHERE pred] [derived]
    project  := PROJECT "(" query ")" INTO kindref "{" rule (";" rule)* [";"] "}"
    rule     := part ("||" part)* ">>" kindref
    part     := kindref | STRING | NAME "(" kindref ")"
    combine  := COMBINE INTO kindref FROM kindref "=" "(" query ")" ("," ...)*
    join     := JOIN (STRONG | WEAK) "(" query ")" ON kindref ","
                "(" query ")" ON kindref USING kindref
                [DIRECTION (FORWARD | REVERSE)] [derived]
    derived  := WITH DERIVED | WITHOUT DERIVED
    pred     := conj (OR conj)*
    conj     := neg (AND neg)*
    neg      := NOT neg | "(" pred ")" | kindref CMP literal | RELOP target
    target   := kindref | "#" NUMBER

``kindref`` is ``Perspective:Kind`` (or ``Perspective:*``); any word
followed by ``:`` is a kindref, so kinds may share spelling with keywords.
"""

from __future__ import annotations

import html
import json
import re
from dataclasses import dataclass
from typing import Optional, Union

from . import errors
from .algebra import (COMPARISONS, RELATION_OPS, And, Engine, FuncPart, KindRef, MappingRule,
                      Not, Or, ResultSet, RelationTerm, StrPart, ValueTerm, WidRef)

KEYWORDS = frozenset({
    "SELECT", "WHERE", "AND", "OR", "NOT", "UNION", "DIFF", "INTERSECT", "PROJECT", "INTO",
    "COMBINE", "FROM", "JOIN", "STRONG", "WEAK", "ON", "USING", "DIRECTION", "FORWARD",
    "REVERSE", "WITH", "WITHOUT", "DERIVED",
} | set(RELATION_OPS))

SET_OPS = ("UNION", "DIFF", "INTERSECT")


# -- AST ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Select:
    scope: tuple = ()
    where: object = None
    derived: Optional[bool] = None


@dataclass(frozen=True)
class SetOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Project:
    source: object
    target: KindRef
    rules: tuple


@dataclass(frozen=True)
class Combine:
    target: KindRef
    parts: tuple  # ((KindRef, query), ...)


@dataclass(frozen=True)
class Join:
    strength: str  # STRONG | WEAK
    left: object
    on_left: KindRef
    right: object
    on_right: KindRef
    target: KindRef
    direction: Optional[str] = None  # FORWARD | REVERSE
    derived: Optional[bool] = None


Query = Union[Select, SetOp, Project, Combine, Join]


# -- lexer -------------------------------------------------------------------------

@dataclass(frozen=True)
class Token:
    type: str  # KW KINDREF WID STRING NUMBER NAME OP EOF
    text: str
    line: int
    column: int
    index: int
    value: object = None


_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<kindref>[A-Za-z0-9_]+:(?:[A-Za-z0-9_]+|\*))
  | (?P<wid>\#[0-9]+)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<number>[+-]?[0-9]+(?:\.[0-9]+)?)
  | (?P<word>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>\|\||>>|<=|>=|!=|[=<>(),{};])
""", re.VERBOSE)


def tokenize(text: str) -> list[Token]:
    out, pos, line, line_start = [], 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise errors.Diagnostic(f"unexpected character {text[pos]!r}", line, col, len(out),
                                    [])
        kind, chunk = m.lastgroup, m.group()
        if kind == "ws":
            nl = chunk.count("\n")
            if nl:
                line += nl
                line_start = pos + chunk.rindex("\n") + 1
        elif kind == "kindref":
            p, k = chunk.split(":", 1)
            out.append(Token("KINDREF", chunk, line, col, len(out), KindRef(p, k)))
        elif kind == "wid":
            out.append(Token("WID", chunk, line, col, len(out), int(chunk[1:])))
        elif kind == "string":
            body = re.sub(r"\\(.)", lambda e: "\n" if e.group(1) == "n" else e.group(1),
                          chunk[1:-1])
            out.append(Token("STRING", chunk, line, col, len(out), body))
        elif kind == "number":
            out.append(Token("NUMBER", chunk, line, col, len(out), chunk))
        elif kind == "word":
            up = chunk.upper()
            if up in KEYWORDS:
                out.append(Token("KW", up, line, col, len(out)))
            else:
                out.append(Token("NAME", chunk, line, col, len(out)))
        else:
            out.append(Token("OP", chunk, line, col, len(out)))
        pos = m.end()
    col = pos - line_start + 1
    out.append(Token("EOF", "", line, col, len(out)))
    return out


# -- parser ------------------------------------------------------------------------

class Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def fail(self, expected) -> None:
        t = self.tok
        what = "end of input" if t.type == "EOF" else repr(t.text)
        raise errors.Diagnostic(f"unexpected {what}", t.line, t.column, t.index,
                                sorted(set(expected)))

    def at(self, *words: str) -> bool:
        t = self.tok
        return (t.type in ("KW", "OP") and t.text in words)

    def take(self, *words: str) -> Token:
        if not self.at(*words):
            self.fail(words)
        t = self.tok
        self.pos += 1
        return t

    def kindref(self) -> KindRef:
        if self.tok.type != "KINDREF":
            self.fail(["Perspective:Kind"])
        t = self.tok
        self.pos += 1
        return t.value

    def parse(self) -> Query:
        q = self.query()
        if self.tok.type != "EOF":
            self.fail(list(SET_OPS) + ["end of input"])
        return q

    def query(self) -> Query:
        node = self.primary()
        while self.at(*SET_OPS):
            op = self.take(*SET_OPS).text
            node = SetOp(op, node, self.primary())
        return node

    def primary(self) -> Query:
        if self.at("SELECT"):
            return self.select()
        if self.at("PROJECT"):
            return self.project()
        if self.at("COMBINE"):
            return self.combine()
        if self.at("JOIN"):
            return self.join()
        if self.at("("):
            return self.paren_query()
        self.fail(["SELECT", "PROJECT", "COMBINE", "JOIN", "("])

    def paren_query(self) -> Query:
        self.take("(")
        q = self.query()
        self.take(")")
        return q

    def derived(self) -> Optional[bool]:
        if self.at("WITH", "WITHOUT"):
            flag = self.take("WITH", "WITHOUT").text == "WITH"
            self.take("DERIVED")
            return flag
        return None

    def select(self) -> Select:
        self.take("SELECT")
        scope = []
        if self.tok.type == "KINDREF":
            scope.append(self.kindref())
            while self.at(","):
                self.take(",")
                scope.append(self.kindref())
        where = None
        if self.at("WHERE"):
            self.take("WHERE")
            where = self.pred()
        return Select(tuple(scope), where, self.derived())

    def pred(self):
        node = self.conj()
        while self.at("OR"):
            self.take("OR")
            node = Or(node, self.conj())
        return node

    def conj(self):
        node = self.neg()
        while self.at("AND"):
            self.take("AND")
            node = And(node, self.neg())
        return node

    def neg(self):
        if self.at("NOT"):
            self.take("NOT")
            return Not(self.neg())
        if self.at("("):
            self.take("(")
            node = self.pred()
            self.take(")")
            return node
        if self.tok.type == "KINDREF":
            kind = self.kindref()
            if not self.at(*COMPARISONS):
                self.fail(COMPARISONS)
            op = self.take(*COMPARISONS).text
            if self.tok.type not in ("STRING", "NUMBER"):
                self.fail(["string", "number"])
            lit = self.tok.value
            self.pos += 1
            return ValueTerm(kind, op, lit)
        if self.at(*RELATION_OPS):
            op = self.take(*RELATION_OPS).text
            if self.tok.type == "WID":
                target = WidRef(self.tok.value)
                self.pos += 1
            else:
                target = self.kindref()
            return RelationTerm(op, target)
        self.fail(["NOT", "(", "Perspective:Kind"] + list(RELATION_OPS))

    def project(self) -> Project:
        self.take("PROJECT")
        source = self.paren_query()
        self.take("INTO")
        target = self.kindref()
        self.take("{")
        rules = [self.rule()]
        while self.at(";"):
            self.take(";")
            if self.at("}"):
                break
            rules.append(self.rule())
        self.take("}")
        return Project(source, target, tuple(rules))

    def rule(self) -> MappingRule:
        parts = [self.part()]
        while self.at("||"):
            self.take("||")
            parts.append(self.part())
        self.take(">>")
        return MappingRule(tuple(parts), self.kindref())

    def part(self):
        t = self.tok
        if t.type == "KINDREF":
            return self.kindref()
        if t.type in ("STRING", "NUMBER"):
            self.pos += 1
            return StrPart(t.value)
        if t.type == "NAME":
            self.pos += 1
            self.take("(")
            ref = self.kindref()
            self.take(")")
            return FuncPart(t.text, ref)
        self.fail(["Perspective:Kind", "string", "function"])

    def combine(self) -> Combine:
        self.take("COMBINE")
        self.take("INTO")
        target = self.kindref()
        self.take("FROM")
        parts = [self.combine_part()]
        while self.at(","):
            self.take(",")
            parts.append(self.combine_part())
        return Combine(target, tuple(parts))

    def combine_part(self):
        ref = self.kindref()
        self.take("=")
        return (ref, self.paren_query())

    def join(self) -> Join:
        self.take("JOIN")
        strength = self.take("STRONG", "WEAK").text
        left = self.paren_query()
        self.take("ON")
        on_left = self.kindref()
        self.take(",")
        right = self.paren_query()
        self.take("ON")
        on_right = self.kindref()
        self.take("USING")
        target = self.kindref()
        direction = None
        if self.at("DIRECTION"):
            self.take("DIRECTION")
            direction = self.take("FORWARD", "REVERSE").text
        return Join(strength, left, on_left, right, on_right, target, direction, self.derived())


def parse(text: str, store=None) -> Query:
    """Parse query text; with ``store`` also resolve every kind name."""
    ast = Parser(text).parse()
    if store is not None:
        validate(ast, store)
    return ast


def kindrefs(node) -> list[KindRef]:
    """Every kind reference in an AST, in print order."""
    out = []
    if isinstance(node, KindRef):
        return [node]
    if isinstance(node, tuple):
        for x in node:
            out += kindrefs(x)
        return out
    if hasattr(node, "__dataclass_fields__"):
        for name in node.__dataclass_fields__:
            out += kindrefs(getattr(node, name))
    return out


def validate(ast, store) -> None:
    for ref in kindrefs(ast):
        if ref.kind == "*":
            store.perspective_id(ref.perspective)
        else:
            store.kind_id(ref.kind, ref.perspective)


# -- printer -----------------------------------------------------------------------

def quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def _pred(node, ctx: int = 0) -> str:
    # ctx: 0 any, 1 inside OR-right / AND, 2 inside AND-right / NOT
    if isinstance(node, Or):
        text = f"{_pred(node.left, 0)} OR {_pred(node.right, 1)}"
        return f"({text})" if ctx >= 1 else text
    if isinstance(node, And):
        text = f"{_pred(node.left, 1)} AND {_pred(node.right, 2)}"
        return f"({text})" if ctx >= 2 else text
    if isinstance(node, Not):
        return f"NOT {_pred(node.operand, 2)}"
    if isinstance(node, ValueTerm):
        return f"{node.kind} {node.op} {quote(node.literal)}"
    if isinstance(node, RelationTerm):
        return f"{node.op} {node.target}"
    raise TypeError(f"not a predicate: {node!r}")


def _derived(flag: Optional[bool]) -> str:
    return "" if flag is None else (" WITH DERIVED" if flag else " WITHOUT DERIVED")


def _part(p) -> str:
    if isinstance(p, KindRef):
        return str(p)
    if isinstance(p, StrPart):
        return quote(p.text)
    return f"{p.name}({p.kind})"


def to_text(node, _nested: bool = False) -> str:
    """Canonical text of an AST; ``parse(to_text(q)) == q``."""
    if isinstance(node, Select):
        text = "SELECT"
        if node.scope:
            text += " " + ", ".join(map(str, node.scope))
        if node.where is not None:
            text += " WHERE " + _pred(node.where)
        return text + _derived(node.derived)
    if isinstance(node, SetOp):
        left = to_text(node.left)
        # a trailing WHERE would otherwise swallow nothing, but a select's
        # derived flag or predicate is unambiguous; only nested set ops need parens
        right = to_text(node.right)
        if isinstance(node.right, SetOp):
            right = f"({right})"
        return f"{left} {node.op} {right}"
    if isinstance(node, Project):
        rules = "; ".join(" || ".join(_part(p) for p in r.parts) + f" >> {r.target}"
                          for r in node.rules)
        return f"PROJECT ({to_text(node.source)}) INTO {node.target} {{{rules}}}"
    if isinstance(node, Combine):
        parts = ", ".join(f"{k} = ({to_text(q)})" for k, q in node.parts)
        return f"COMBINE INTO {node.target} FROM {parts}"
    if isinstance(node, Join):
        text = (f"JOIN {node.strength} ({to_text(node.left)}) ON {node.on_left}, "
                f"({to_text(node.right)}) ON {node.on_right} USING {node.target}")
        if node.direction is not None:
            text += f" DIRECTION {node.direction}"
        return text + _derived(node.derived)
    raise TypeError(f"not a query: {node!r}")


# -- evaluation --------------------------------------------------------------------

def evaluate(ast, store, *, include_derived: Optional[bool] = None) -> ResultSet:
    """Run a query against a store.

    Derived instances are excluded from plain selects and included in join
    operands unless the query says otherwise; ``include_derived`` overrides
    the default for the whole query.
    """
    return _eval(ast, Engine(store), include_derived, include_derived)


def _eval(node, eng: Engine, default: Optional[bool], override: Optional[bool]) -> ResultSet:
    if isinstance(node, Select):
        flag = node.derived if node.derived is not None else (
            override if override is not None else bool(default))
        return eng.select(node.where, node.scope, include_derived=flag)
    if isinstance(node, SetOp):
        a = _eval(node.left, eng, default, override)
        b = _eval(node.right, eng, default, override)
        return {"UNION": eng.union, "DIFF": eng.difference,
                "INTERSECT": eng.intersect}[node.op](a, b)
    if isinstance(node, Project):
        return eng.project(_eval(node.source, eng, default, override), node.target, node.rules)
    if isinstance(node, Combine):
        return eng.combine(node.target, {k: _eval(q, eng, default, override)
                                         for k, q in node.parts})
    if isinstance(node, Join):
        flag = node.derived if node.derived is not None else (
            override if override is not None else True)
        a = _eval(node.left, eng, flag, override)
        b = _eval(node.right, eng, flag, override)
        if node.strength == "STRONG":
            return eng.join_strong(a, node.on_left, b, node.on_right, node.target)
        direction = (node.direction or "FORWARD").lower()
        return eng.join_weak(a, node.on_left, b, node.on_right, node.target, direction)
    raise TypeError(f"not a query: {node!r}")


def run(text: str, store, **kw) -> ResultSet:
    return evaluate(parse(text, store), store, **kw)


# -- rendering ---------------------------------------------------------------------

FORMATS = ("table", "json", "xml-tags")


def _xml_node(node: dict, out: list, depth: int, pretty: bool) -> None:
    pad = "  " * depth if pretty else ""
    attrs = f" WID={node['wid']:03d}"
    if node.get("archived"):
        attrs += " ARCHIVED=1"
    if node.get("derived"):
        attrs += " DERIVED=1"
    tag = node["kind"]
    text = html.escape(node["value"], quote=False) if node.get("value") is not None else ""
    if not node["children"]:
        out.append(f"{pad}<{tag}{attrs}>{text}</{tag}>")
        return
    out.append(f"{pad}<{tag}{attrs}>{text}")
    for child in node["children"]:
        _xml_node(child, out, depth + 1, pretty)
    out.append(f"{pad}</{tag}>")


def render_xml_tags(rs: ResultSet, pretty: bool = True) -> str:
    out = [f"<!-- results: {len(rs)} -->"]
    for item in rs.items:
        _xml_node(item.rendering, out, 0, pretty)
        for extra in item.also:
            _xml_node(extra.rendering, out, 0, pretty)
    return "\n".join(out) + "\n"


def _flat(node: dict) -> str:
    parts = []
    for c in node["children"]:
        inner = _flat(c)
        val = c["value"] if c["value"] is not None else ("<archived>" if c["archived"] else "")
        parts.append(f"{c['kind']}={val}" + (f"[{inner}]" if inner else ""))
    return "; ".join(parts)


def render_table(rs: ResultSet) -> str:
    rows = [("shadow", "wid", "kind", "value", "structure")]
    for item in rs.items:
        for it in [item] + item.also:
            r = it.rendering
            val = r["value"] if r["value"] is not None else ("<archived>" if r["archived"] else "")
            rows.append((str(it.shadow_id) if it.shadow_id is not None else "-", str(it.wid),
                         it.kind, val, _flat(r)))
    widths = [max(len(r[i]) for r in rows) for i in range(5)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    lines.append(f"({len(rs)} result{'s' if len(rs) != 1 else ''})")
    return "\n".join(lines) + "\n"


def render(rs: ResultSet, fmt: str = "table") -> str:
    if fmt == "json":
        return json.dumps(rs.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    if fmt == "xml-tags":
        return render_xml_tags(rs)
    if fmt == "table":
        return render_table(rs)
    raise ValueError(f"unknown format {fmt!r}; choose from {', '.join(FORMATS)}")


# -- xml-tags import ---------------------------------------------------------------

_XML_TOKEN = re.compile(r"<!--.*?-->|</([^>\s]+)>|<([^>\s/]+)((?:\s+[A-Za-z_]+=[^\s>]+)*)>|([^<]+)",
                        re.S)


def parse_xml_tags(text: str) -> list[dict]:
    """Read an xml-tags rendering back into rendering trees."""
    roots, stack = [], []
    for m in _XML_TOKEN.finditer(text):
        close, open_, attrs, chars = m.group(1), m.group(2), m.group(3), m.group(4)
        if close:
            if not stack or stack[-1]["kind"] != close:
                raise errors.Diagnostic(f"mismatched </{close}>", 1, m.start() + 1, 0, [])
            stack.pop()
        elif open_:
            fields = dict(a.split("=", 1) for a in (attrs or "").split())
            node = {"kind": open_, "wid": int(fields.get("WID", "0")), "value": None,
                    "archived": fields.get("ARCHIVED") == "1",
                    "derived": fields.get("DERIVED") == "1", "children": []}
            (stack[-1]["children"] if stack else roots).append(node)
            stack.append(node)
        elif chars and stack and chars.strip():
            stack[-1]["value"] = html.unescape(chars.strip())
    if stack:
        raise errors.Diagnostic(f"unclosed <{stack[-1]['kind']}>", 1, len(text), 0, [])
    for root in roots:
        _fill_values(root)
    return roots


def _fill_values(node: dict) -> None:
    # leaf text may be empty; keep None for archived nodes only
    if node["value"] is None and not node["children"] and not node["archived"]:
        node["value"] = ""
    for c in node["children"]:
        _fill_values(c)


def import_xml_tags(store, text: str) -> dict[int, int]:
    """Load rendered trees into ``store``; returns {rendered WID: store WID}.

    Nodes whose WID already exists with the same kind and value are reused,
    so importing a store's own rendering changes nothing.
    """
    st = store.state
    mapping: dict = {}

    def known(node) -> Optional[int]:
        wt = st.wtags.get(node["wid"])
        if wt is None or store.qualified_name(wt.kind_id) != node["kind"]:
            return None
        if store.value_of(node["wid"]) != node["value"] and not node["archived"]:
            if not (node["value"] == "" and store.value_of(node["wid"]) is None):
                return None
        return node["wid"]

    def load(node) -> int:
        wid = known(node)
        kids = [load(c) for c in node["children"]]
        if wid is None:
            kind = store.kind_id(node["kind"])
            parts = [(st.wtags[k].kind_id, ("wid", k)) for k in kids]
            value = node["value"] if node["value"] != "" or not kids else None
            wid = store.insert_tagged(kind, value, parts)
        mapping[node["wid"]] = wid
        return wid

    with store._auto():
        for root in parse_xml_tags(text):
            load(root)
    return mapping
