import pytest

from shadowdb import HAS_A, IS_A, errors


@pytest.fixture
def p1(store):
    store.create_perspective("P1", "legal entity view")
    store.define_ptag("status_code", {"type": "enum", "values": ["A", "P", "D", "I"]})
    store.define_ptag("text", {"type": "text"})
    store.define_ptag("customer_id6", {"type": "pattern", "pattern": "999999"})
    for name in ("Customer_ID", "Name", "Status", "Country"):
        store.define_kind("P1", name, f"legal entity {name}")
    store.define_kind("P1", "Legal entity-based ECID", "legal entity customer")
    store.define_simulated_schema("P1", "legal_ecid", "P1:Legal_entity_based_ECID",
                                  [("P1:Customer_ID", "customer_id6"), ("P1:Name", "text"),
                                   ("P1:Status", "status_code"), ("P1:Country", "text")])
    return store


def test_perspectives(store):
    pid = store.create_perspective("P1")
    assert [p.name for p in store.list_perspectives()] == ["P1"]
    assert store.perspective_id("P1") == pid
    with pytest.raises(errors.Conflict):
        store.create_perspective("P1")
    with pytest.raises(errors.UnknownName) as exc:
        store.perspective_id("P2")
    assert "P1" in exc.value.near


def test_kind_needs_description(store):
    store.create_perspective("P1")
    with pytest.raises(errors.RuleViolation):
        store.define_kind("P1", "Name", "  ")


def test_kind_names_resolve_by_identifier(store):
    store.create_perspective("P1")
    kid = store.define_kind("P1", "Legal entity-based ECID", "legal entity customer")
    assert store.kind_id("P1:Legal_entity_based_ECID") == kid
    assert store.kind_id("Legal entity-based ECID", "P1") == kid
    assert store.qualified_name(kid) == "P1:Legal_entity_based_ECID"


def test_single_template_rule(store):
    store.create_perspective("P1")
    ec = store.define_kind("P1", "Enterprise Customer", "customer")
    acct = store.define_kind("P1", "Service Account", "account")
    own = store.define_kind("P1", "Ownership", "owner of an account", template=[ec, acct])
    assert store.template_of(own) == [ec, acct]
    with pytest.raises(errors.RuleViolation) as exc:
        store.set_template(own, [ec])
    assert exc.value.details["rule"] == "Rule8"
    other = store.define_kind("P1", "Other", "not a component")
    with pytest.raises(errors.RuleViolation):
        store.assert_kind_relation(other, own)


def test_two_kinds_on_one_shadow(store):
    store.create_perspective("P3")
    store.define_kind("P3", "EC_Num", "contract number")
    store.define_kind("P3", "Parent_Num", "parent contract number")
    with store.transaction():
        sid = store.insert_shadow("87936-965042")
        a = store.attach_wtag(sid, "P3:EC_Num")
        b = store.attach_wtag(sid, "P3:Parent_Num")
    assert a != b
    assert store.wids_on_shadow(sid) == [a, b]
    with pytest.raises(errors.Conflict):
        store.attach_wtag(sid, "P3:EC_Num")
    assert store.tag(sid, "P3:EC_Num") == a


def test_required_ptag_rejects_malformed_value(store):
    store.create_perspective("P3")
    store.define_kind("P3", "Expiration_Date", "contract expiry")
    store.define_ptag("iso_date", {"type": "date", "pattern": "YYYY-MM-DD"},
                      required_with_kind="P3:Expiration_Date")
    with pytest.raises(errors.FormatRejected):
        with store.transaction():
            store.attach_wtag(store.insert_shadow("2012-13-45"), "P3:Expiration_Date")
    with store.transaction():
        store.attach_wtag(store.insert_shadow("2012-09-12"), "P3:Expiration_Date")


def test_relations_and_markers(store):
    pid = store.create_perspective("H")
    store.create_perspective("Other")
    ec = store.define_kind(pid, "EC", "customer")
    far = store.define_kind("Other", "EC", "customer elsewhere")
    with store.transaction():
        ec1, ec12 = (store.attach_wtag(store.insert_shadow(v), ec) for v in ("EC1", "EC1.2"))
        acct, sub = (store.attach_wtag(store.insert_shadow(v), ec) for v in ("A1.1", "A1.1.1"))
        x = store.attach_wtag(store.insert_shadow("x"), far)
    rid = store.assert_relation(ec12, ec1, HAS_A)
    assert store.state.relations[rid].marker == HAS_A
    assert store.assert_relation(ec12, ec1, HAS_A) == rid  # idempotent
    store.assert_relation(sub, acct, IS_A)
    with pytest.raises(errors.Conflict):
        store.assert_relation(ec12, ec1, IS_A)
    with pytest.raises(errors.UseEquivalenceLedger):
        store.assert_relation(ec1, x)
    with pytest.raises(errors.Conflict):
        store.assert_relation(ec1, ec1)


def test_observable_across_perspectives_is_not_inclusion(store):
    store.create_perspective("P3")
    store.create_perspective("P5")
    num = store.define_kind("P3", "EC_Num", "contract number")
    link = store.define_kind("P5", "Contract_Link", "integration record", template=[num])
    with store.transaction():
        w = store.attach_wtag(store.insert_shadow("87936-965042"), num)
        row = store.insert_tagged(link, None, [(num, ("wid", w))])
    rel = store.child_relations(row)[0]
    assert rel.level == "observable"


def test_load_row_tags_every_column(p1):
    row = p1.load_row("legal_ecid", {"Customer_ID": "763810", "Name": "ABC Corp",
                                     "Status": "A", "Country": "US"})
    rwid = p1.wid_for(row, p1.kind_id("P1:Legal_entity_based_ECID"))
    kids = [p1.kind(p1.wtag(r.child).kind_id).name for r in p1.child_relations(rwid)]
    assert kids == ["Customer_ID", "Name", "Status", "Country"]
    assert len(p1.sub_shadows(row)) == 4
    assert p1.row_values("legal_ecid", rwid)["Name"] == "ABC Corp"


def test_missing_column_is_null(p1):
    row = p1.load_row("legal_ecid", {"Customer_ID": "763813", "Name": "Nulls Inc",
                                     "Status": "P"})
    rwid = p1.wid_for(row, p1.kind_id("P1:Legal_entity_based_ECID"))
    assert p1.row_values("legal_ecid", rwid)["Country"] is None
    assert len(p1.child_relations(rwid)) == 3


def test_column_ptag_rejects(p1):
    p1.define_kind("P1", "Elsewhere", "not a column")
    before = p1.dump_state()
    with pytest.raises(errors.FormatRejected):
        p1.load_row("legal_ecid", {"Customer_ID": "763810", "Status": "ZZ"})
    with pytest.raises(errors.UnknownName):
        p1.load_row("legal_ecid", {"Customer_ID": "763810", "Nope": "x"})
    with pytest.raises(errors.MappingGap):
        p1.load_row("legal_ecid", {"Customer_ID": "763810", "Elsewhere": "x"})
    assert p1.dump_state() == before


def test_update_row_keeps_wids_and_segments(store):
    store.create_perspective("P4")
    for name in ("Acct", "Service_ID", "NPA", "NXX", "XXXX", "Billing_Account"):
        store.define_kind("P4", name, f"billing {name}")
    store.define_kind("P4", "Telephone_Number", "phone number", template=["P4:NPA", "P4:NXX",
                                                                           "P4:XXXX"])
    store.define_ptag("text", {"type": "text"})
    store.define_ptag("nanp", {"type": "segments", "separator": "-",
                               "segments": [{"name": "NPA", "pattern": "999"},
                                            {"name": "NXX", "pattern": "999"},
                                            {"name": "XXXX", "pattern": "9999"}]},
                      required_with_kind="P4:Telephone_Number")
    store.define_simulated_schema("P4", "billing", "P4:Billing_Account",
                                  [("P4:Acct", "text"),
                                   {"kind": "P4:Service_ID", "ptag": "text",
                                    "decompose_as": "P4:Telephone_Number"}])
    row = store.load_row("billing", {"Acct": "BA-1", "Service_ID": "735-555-0142"})
    rwid = store.wid_for(row, store.kind_id("P4:Billing_Account"))
    before = sorted(store.state.wtags)
    store.update_row("billing", row, {"Service_ID": "512-555-0199"})
    assert sorted(store.state.wtags) == before
    sid = store.wtag(store.child_relations(rwid)[1].child).shadow_id
    assert [store.shadow(s).value for _, s in store.sub_shadows(sid)] == ["512", "555", "0199"]
    with pytest.raises(errors.FormatRejected):
        store.update_row("billing", row, {"Service_ID": "WR/CKT/000917"})


def test_ptag_conversion(store):
    store.create_perspective("P3")
    store.define_kind("P3", "Expiration_Date", "contract expiry")
    iso = store.define_ptag("iso_date", {"type": "date", "pattern": "YYYY-MM-DD"},
                            converter_refs=["date-pattern"])
    us = store.define_ptag("us_date", {"type": "date", "pattern": "MM/DD/YYYY"})
    store.define_ptag("label", {"type": "text"})
    with store.transaction():
        sid = store.insert_shadow("2012-09-12")
        store.attach_wtag(sid, "P3:Expiration_Date")
        store.attach_ptag(sid, iso)
    assert store.convert(sid, us) == "09/12/2012"
    assert store.convert(sid, iso) == "2012-09-12"
    assert store.shadow(sid).value == "2012-09-12"
    with pytest.raises(errors.NoConverter):
        store.convert(sid, "label")
    with pytest.raises(errors.FormatRejected):
        store.define_ptag("bad", {"type": "date", "pattern": "no tokens"})
