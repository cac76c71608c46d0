import io
import json

import pytest

from shadowdb import errors
from shadowdb.feeds import FeedEvent, apply_event, load_feed

from .lifecycle import join_pairs, row_wids


@pytest.fixture
def legal(store):
    """A one-schema store keyed by Customer_ID; returns (store, process id)."""
    store.create_perspective("P1")
    store.define_ptag("text", {"type": "text"})
    store.define_ptag("status_code", {"type": "enum", "values": ["A", "P", "D", "I"]})
    for name in ("Customer_ID", "Name", "Status"):
        store.define_kind("P1", name, f"legal entity {name}")
    store.define_kind("P1", "Legal", "legal entity row")
    store.define_simulated_schema("P1", "legal", "P1:Legal",
                                  [("P1:Customer_ID", "text"), ("P1:Name", "text"),
                                   ("P1:Status", "status_code")], key="P1:Customer_ID")
    pid = store.register_process("loader", [{"id": "load", "description": "nightly load"}])
    return store, pid


def line(op, key, **fields):
    return json.dumps({"op": op, "source": "P1", "schema": "legal", "key": key,
                       "fields": fields})


def test_upsert_creates_then_updates_in_place(legal):
    s, pid = legal
    first = apply_event(s, json.loads(line("upsert", "1", Name="ABC", Status="A")), pid)
    assert first["created"]
    wids = row_wids(s, first["row"])
    second = apply_event(s, json.loads(line("upsert", "1", Name="ABC Corp", Status="P")), pid)
    assert not second["created"] and second["wid"] == first["wid"]
    assert row_wids(s, second["row"]) == wids
    assert s.row_values("legal", first["wid"])["Name"] == "ABC Corp"


def test_delete_then_rollback_restores_bytes(legal):
    s, pid = legal
    apply_event(s, json.loads(line("upsert", "1", Name="ABC", Status="A")), pid)
    before = s.dump_state()
    out = apply_event(s, json.loads(line("delete", "1")), pid)
    assert s.shadow(out["row"]).archived
    assert s.wtag(out["wid"]).status == "active"  # ghost: meaning survives
    with pytest.raises(errors.AlreadyArchived):
        apply_event(s, json.loads(line("upsert", "1", Name="again")), pid)
    apply_event(s, json.loads(line("rollback", "1")), pid)
    assert s.dump_state() == before
    with pytest.raises(errors.NothingToRestore):
        apply_event(s, json.loads(line("rollback", "1")), pid)


def test_reuse_mints_a_fresh_row(legal):
    s, pid = legal
    old = apply_event(s, json.loads(line("upsert", "1", Name="ABC", Status="A")), pid)
    new = apply_event(s, json.loads(line("reuse", "1", Name="Other Co", Status="P")), pid)
    assert new["previous"] == old["row"]
    assert s.shadow(old["row"]).archived
    assert row_wids(s, old["row"]).isdisjoint(row_wids(s, new["row"]))
    key = f"{s.schema('legal').schema_id}:1"
    assert s.state.feed_keys[key]["history"] == [old["row"]]


def test_unknown_key(legal):
    s, pid = legal
    for op in ("delete", "rollback", "reuse"):
        with pytest.raises(errors.UnknownKey):
            apply_event(s, json.loads(line(op, "404")), pid)


def test_empty_feed(legal):
    s, pid = legal
    before = s.dump_state()
    report = load_feed(s, "", pid)
    assert report.to_dict()["total"] == 0 and not report.errors
    assert s.dump_state() == before


def test_one_malformed_line_in_a_hundred(legal):
    s, pid = legal
    lines = [line("upsert", str(i), Name=f"n{i}", Status="A") for i in range(100)]
    lines[41] = lines[41][:-3]
    report = load_feed(s, io.StringIO("\n".join(lines)), pid)
    assert report.applied["upsert"] == 99
    assert [(e["line"], e["code"]) for e in report.errors] == [(42, "E_MALFORMED")]


def test_rejected_event_is_reported_and_skipped(legal):
    s, pid = legal
    text = "\n".join([line("upsert", "1", Status="ZZ"), line("upsert", "2", Status="A")])
    report = load_feed(s, text, pid)
    assert report.applied["upsert"] == 1
    assert report.error_counts == {"E_FORMAT_REJECTED": 1}


def test_strict_mode_raises_and_keeps_earlier_lines(legal):
    s, pid = legal
    text = "\n".join([line("upsert", "1", Status="A"), "{not json", line("upsert", "2")])
    with pytest.raises(errors.FormatRejected) as exc:
        load_feed(s, text, pid, strict=True)
    assert exc.value.details["line"] == 2
    assert list(s.state.feed_keys) == [f"{s.schema('legal').schema_id}:1"]


def test_hold_until_waits_for_its_target(legal):
    s, pid = legal
    held = json.loads(line("upsert", "2", Name="child"))
    held["awaits"] = {"kind": "P1:Customer_ID", "value": "1"}
    text = "\n".join([json.dumps(held), line("upsert", "1", Name="parent")])
    report = load_feed(s, text, pid, hold_until=True)
    assert [o["key"] for o in report.outcomes] == ["1", "2"]
    assert report.held == []
    held["awaits"]["value"] = "never"
    report = load_feed(s, json.dumps(held), pid, hold_until=True)
    assert report.held == [{"line": 1, "key": "2", "awaits": held["awaits"]}]


def test_feed_line_validation():
    with pytest.raises(errors.FormatRejected):
        FeedEvent.from_json({"op": "upsert", "source": "P1", "schema": "x"})
    with pytest.raises(errors.FormatRejected):
        FeedEvent.from_json({"op": "merge", "source": "P1", "schema": "x", "key": "1"})
    with pytest.raises(errors.FormatRejected):
        FeedEvent.from_json({"op": "upsert", "source": "P1", "schema": "x", "key": ""})
    ev = FeedEvent.from_json({"op": "upsert", "source": "P1", "schema": "x", "key": 7,
                              "fields": {"n": 3, "z": None}})
    assert ev.key == "7" and ev.fields == {"n": "3", "z": None}
    assert FeedEvent.from_json(ev.to_json()) == ev


def test_field_mapping(legal):
    s, pid = legal
    text = json.dumps({"op": "upsert", "source": "P1", "schema": "legal", "key": "9",
                       "fields": {"legal_name": "Mapped Co"}})
    report = load_feed(s, text, pid, mapping={"legal_name": "Name"})
    assert s.row_values("legal", report.outcomes[0]["wid"])["Name"] == "Mapped Co"


def test_deleted_location_keeps_joins(ecid):
    s, fx = ecid
    s.use_process(fx.processes["ecid_steward"])
    before = join_pairs(s)
    assert before["strong"]
    apply_event(s, {"op": "delete", "source": "P2", "schema": "location_ecid",
                    "key": "005487"}, fx.processes["p2_loader"])
    assert join_pairs(s) == before
