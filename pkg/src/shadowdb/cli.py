"""``shadow`` command line.

stdout carries data only. Diagnostics go to stderr as one JSON object with
a stable ``code``. Exit status: 0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from filelock import FileLock, Timeout

from . import errors, inference
from .algebra import Engine, ResultSet
from .core import DEFAULT_SAFETY_CAP
from .ecid import build_ecid
from .feeds import load_feed
from .manifest import apply_manifest
from .provenance import QUESTIONS
from .query import FORMATS, parse, evaluate, render
from .store import Store

CLI_PROCESS = "shadow_cli"
CLI_RULES = [{"id": "operator", "description": "operator command issued from the shadow CLI"}]
DEFAULT_STORE = "shadow.jsonl"


@dataclass
class StoreConfig:
    store_path: Path
    manifest_path: Optional[Path] = None
    strict: bool = False
    include_derived: Optional[bool] = None
    safety_cap: int = DEFAULT_SAFETY_CAP

    def __post_init__(self):
        self.store_path = Path(self.store_path)
        if self.safety_cap < 1:
            raise errors.Conflict("safety cap must be >= 1")
        parent = self.store_path.parent
        if str(parent) and not parent.exists():
            raise errors.NotFound(f"directory {parent} does not exist")


class UsageError(Exception):
    pass


def _emit(data, fmt: str = "json") -> None:
    if isinstance(data, ResultSet):
        sys.stdout.write(render(data, fmt))
        return
    if fmt == "table":
        sys.stdout.write(_text(data) + "\n")
    else:
        sys.stdout.write(json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n")


def _text(data, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(data, dict):
        lines = []
        for k, v in data.items():
            if isinstance(v, (dict, list)) and v:
                lines.append(f"{pad}{k}:")
                lines.append(_text(v, indent + 1))
            else:
                lines.append(f"{pad}{k}: {json.dumps(v, ensure_ascii=False)}")
        return "\n".join(lines)
    if isinstance(data, list):
        return "\n".join(_text(v, indent) if isinstance(v, dict)
                         else f"{pad}- {v if isinstance(v, str) else json.dumps(v)}"
                         for v in data)
    return f"{pad}{data}"


def _wid(text: str) -> int:
    t = text.strip()
    if t.startswith("#"):
        t = t[1:]
    elif t.startswith("wid:"):
        t = t[4:]
    try:
        return int(t)
    except ValueError:
        raise UsageError(f"not a WID: {text!r}") from None


def _actor(store: Store, name: Optional[str], rule: Optional[str]) -> int:
    """Resolve the acting process; the CLI's own process is registered on demand."""
    if name is None:
        name = CLI_PROCESS
        if CLI_PROCESS not in store.state.process_by_name:
            store.register_process(CLI_PROCESS, CLI_RULES)
    pid = store.process_id(int(name) if str(name).isdigit() else name)
    store.use_process(pid, rule)
    return pid


def _evidence(arg: str) -> list:
    path = Path(arg)
    if len(arg) < 4096 and path.is_file():
        text = path.read_text("utf-8")
        try:
            doc = json.loads(text)
        except json.JSONDecodeError:
            return [{"kind": "external-document", "body": text.strip(), "external_ref": str(path)}]
        return doc if isinstance(doc, list) else [doc]
    return [arg]


# -- commands ----------------------------------------------------------------------

def cmd_init(store, args, cfg):
    created = not cfg.store_path.exists()
    cfg.store_path.touch()
    return {"store": str(cfg.store_path), "created": created}


def cmd_schema_apply(store, args, cfg):
    pid = store.process_id(args.process) if args.process else None
    if args.process:
        store.use_process(pid, args.rule)
    return apply_manifest(store, Path(args.file), process_id=pid)


def cmd_register(store, args, cfg):
    rules = []
    for r in args.rule:
        rid, sep, desc = r.partition("=")
        rules.append((rid, desc if sep else rid))
    return {"process_id": store.register_process(args.name, rules)}


def cmd_load(store, args, cfg):
    pid = _actor(store, args.process, args.rule)
    mfile = args.mapping
    mapping = json.loads(Path(mfile).read_text("utf-8")) if mfile else None
    report = load_feed(store, Path(args.feed), pid, rule_id=args.rule, mapping=mapping,
                       strict=args.strict or cfg.strict, hold_until=args.hold)
    out = report.to_dict()
    out["outcomes"] = report.outcomes
    return out, (1 if report.errors else 0)


def cmd_tag(store, args, cfg):
    _actor(store, args.process, args.rule)
    return {"wid": store.attach_wtag(args.shadow, args.kind)}


def cmd_link(store, args, cfg):
    _actor(store, args.process, args.rule)
    kind = "strong" if args.strong else "weak"
    direction = args.direction if kind == "weak" else None
    eid = store.assert_etag(_wid(args.src), _wid(args.dst), kind, direction or (
        "a<=b" if kind == "weak" else None), _evidence(args.evidence))
    return {"etag_id": eid, "kind": kind}


def cmd_unlink(store, args, cfg):
    _actor(store, args.process, args.rule)
    return store.revoke_etag(int(str(args.etag).removeprefix("etag:")), args.reason)


def _query(store, text: str, cfg):
    ast = parse(text, store)
    return evaluate(ast, store, include_derived=cfg.include_derived)


def cmd_query(store, args, cfg):
    if args.expr is None and args.file is None:
        raise UsageError("give -e TEXT or a query file")
    text = args.expr if args.expr is not None else Path(args.file).read_text("utf-8")
    _actor(store, args.process, None)
    return _query(store, text, cfg)


def cmd_repl(store, args, cfg):
    _actor(store, args.process, None)
    interactive = sys.stdin.isatty()
    status = 0
    while True:
        if interactive:
            sys.stderr.write("shadow> ")
            sys.stderr.flush()
        line = sys.stdin.readline()
        if not line:
            break
        line = line.strip()
        if not line or line.startswith("--"):
            continue
        if line.lower() in ("quit", "exit", "\\q"):
            break
        try:
            _emit(_query(store, line, cfg), args.format)
        except errors.ShadowError as exc:
            _diagnose(exc)
            status = 1
    return None, status


def cmd_infer(store, args, cfg):
    _actor(store, args.process, None)
    found = inference.infer_level_shift(store, _wid(args.wid), use_etags=not args.no_etags)
    if args.format == "json":
        return [{"wid": d.wid, "base_wid": d.base_wid, "direction": d.direction,
                 "shifts": [list(s) for s in d.shifts], "derivation_path": d.path} for d in found]
    eng = Engine(store)
    return ResultSet([eng.item(d.wid) for d in found])


def cmd_compose_check(store, args, cfg):
    verdict = inference.check_composition(store, _wid(args.a), _wid(args.c))
    out = {"verdict": verdict.verdict, "a": _wid(args.a), "c": _wid(args.c)}
    if hasattr(verdict, "proof"):
        out["proof"] = verdict.proof.to_dict()
    if hasattr(verdict, "boundaries"):
        out["boundaries"] = verdict.boundaries
    return out


def cmd_explain(store, args, cfg):
    asked = [q for q in QUESTIONS if getattr(args, q)]
    expl = store.explain(args.target, asked or None)
    if args.prose:
        return {"target": expl.target, "prose": expl.prose()}
    return expl.to_dict()


def cmd_check(store, args, cfg):
    report = inference.check_properties(store, witness_samples=args.samples, seed=args.seed)
    return report.to_dict(), (0 if report.ok else 1)


def cmd_fixtures_ecid(store, args, cfg):
    if store.log:
        raise errors.Conflict(f"store {cfg.store_path} is not empty")
    fx = build_ecid(store)
    return {"processes": fx.processes, "etags": fx.etags, "wids": fx.wids,
            "events": len(store.log)}


READ_ONLY = {"compose-check", "explain", "check"}


# -- parser ------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="shadow", description="perspective-scoped semantic data integration")
    p.add_argument("--store", default=os.environ.get("SHADOW_STORE", DEFAULT_STORE),
                   help="event log file (default: $SHADOW_STORE or ./shadow.jsonl)")
    p.add_argument("--strict", action="store_true", help="stop at the first rejected feed line")
    p.add_argument("--safety-cap", type=int, default=DEFAULT_SAFETY_CAP)
    der = p.add_mutually_exclusive_group()
    der.add_argument("--with-derived", dest="derived", action="store_const", const=True)
    der.add_argument("--without-derived", dest="derived", action="store_const", const=False)
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def cmd(name, func, help_, fmt=None):
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(func=func, name=name)
        if fmt is not None:
            sp.add_argument("--format", choices=fmt, default=fmt[0])
        return sp

    def actor(sp, rule=True):
        sp.add_argument("--process", help="registered process name or id (default: shadow_cli)")
        if rule:
            sp.add_argument("--rule", help="business rule id cited by the mutation")

    cmd("init", cmd_init, "create an empty store")

    schema = sub.add_parser("schema", help="semantic manifests")
    ssub = schema.add_subparsers(dest="schema_command", parser_class=_Parser)
    sp = ssub.add_parser("apply", help="apply a semantic manifest")
    sp.set_defaults(func=cmd_schema_apply, name="schema apply")
    sp.add_argument("file")
    actor(sp)

    sp = cmd("register", cmd_register, "register a process and its business rules")
    sp.add_argument("name")
    sp.add_argument("--rule", action="append", required=True, metavar="ID=DESCRIPTION")

    sp = cmd("load", cmd_load, "apply a JSON-lines feed")
    sp.add_argument("feed")
    sp.add_argument("--mapping", help="JSON file: feed field -> schema column")
    sp.add_argument("--hold", action="store_true", help="buffer events until their awaits value exists")
    sp.add_argument("--strict", action="store_true")
    actor(sp)

    sp = cmd("tag", cmd_tag, "attach a W-tag to a shadow")
    sp.add_argument("shadow", type=int)
    sp.add_argument("kind")
    actor(sp)

    sp = cmd("link", cmd_link, "assert an E-tag")
    strength = sp.add_mutually_exclusive_group(required=True)
    strength.add_argument("--strong", action="store_true")
    strength.add_argument("--weak", action="store_true")
    sp.add_argument("--from", dest="src", required=True)
    sp.add_argument("--to", dest="dst", required=True)
    sp.add_argument("--direction", choices=["a<=b", "b<=a"],
                    help="weak only: a<=b reads FROM is included in TO (default)")
    sp.add_argument("--evidence", required=True, help="evidence text or a file")
    actor(sp)

    sp = cmd("unlink", cmd_unlink, "revoke an E-tag")
    sp.add_argument("etag")
    sp.add_argument("--reason", required=True)
    actor(sp)

    sp = cmd("query", cmd_query, "run a query", FORMATS)
    sp.add_argument("file", nargs="?")
    sp.add_argument("-e", "--expr")
    actor(sp, rule=False)

    sp = cmd("repl", cmd_repl, "read queries from stdin, one per line", FORMATS)
    actor(sp, rule=False)

    sp = cmd("infer", cmd_infer, "derive level-shifted instances of a composite", FORMATS)
    sp.add_argument("wid")
    sp.add_argument("--no-etags", action="store_true")
    actor(sp, rule=False)

    sp = cmd("compose-check", cmd_compose_check, "verdict on a ⊆ c", ("json", "table"))
    sp.add_argument("a")
    sp.add_argument("c")

    sp = cmd("explain", cmd_explain, "who/what/when/where/why/how of an id", ("json", "table"))
    sp.add_argument("target", help="#WID, wid:N, shadow:N, etag:N, ...")
    for q in QUESTIONS:
        sp.add_argument(f"--{q}", action="store_true")
    sp.add_argument("--prose", action="store_true")

    sp = cmd("check", cmd_check, "property report", ("json", "table"))
    sp.add_argument("--samples", type=int, default=5)
    sp.add_argument("--seed", type=int, default=0)

    fixtures = sub.add_parser("fixtures", help="bundled corpora")
    fsub = fixtures.add_subparsers(dest="fixture", parser_class=_Parser)
    sp = fsub.add_parser("ecid", help="load the ECID corpus into an empty store")
    sp.set_defaults(func=cmd_fixtures_ecid, name="fixtures ecid")
    return p


def _diagnose(exc: BaseException, code: Optional[str] = None) -> None:
    if isinstance(exc, errors.ShadowError):
        doc = exc.to_dict()
    else:
        doc = {"code": code or "E_INTERNAL", "message": str(exc)}
    sys.stderr.write(json.dumps(doc, sort_keys=True, ensure_ascii=False) + "\n")


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "func", None) is None:
            raise UsageError("missing command; see shadow --help")
        cfg = StoreConfig(args.store, strict=args.strict, include_derived=args.derived,
                          safety_cap=args.safety_cap)
    except UsageError as exc:
        _diagnose(exc, "E_USAGE")
        return 2
    except errors.ShadowError as exc:
        _diagnose(exc)
        return 1
    lock = FileLock(str(cfg.store_path) + ".lock", timeout=0)
    try:
        with lock:
            if args.name in READ_ONLY and not cfg.store_path.exists():
                raise errors.NotFound(f"store {cfg.store_path} does not exist")
            store = Store(cfg.store_path, safety_cap=cfg.safety_cap)
            result = args.func(store, args, cfg)
    except Timeout:
        _diagnose(errors.Conflict(f"store {cfg.store_path} is locked by another writer"))
        return 1
    except UsageError as exc:
        _diagnose(exc, "E_USAGE")
        return 2
    except errors.ShadowError as exc:
        _diagnose(exc)
        return 1
    except OSError as exc:
        _diagnose(exc, "E_IO")
        return 1
    status = 0
    if isinstance(result, tuple):
        result, status = result
    if result is not None:
        _emit(result, getattr(args, "format", "json"))
    return status


if __name__ == "__main__":
    sys.exit(main())
