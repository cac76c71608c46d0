"""Walk through the bundled ECID corpus: load, query, join, guard, explain.

Run with ``python demos/ecid_walkthrough.py``. Nothing is written to disk.
"""

import os

os.environ.setdefault("SHADOW_FIXED_CLOCK", "2012-09-12T00:00:00Z")

from shadowdb import Store, query  # noqa: E402
from shadowdb.ecid import build_ecid  # noqa: E402
from shadowdb.feeds import apply_event  # noqa: E402
from shadowdb.inference import check_composition, check_properties  # noqa: E402


def show(title, text, store, fmt="table"):
    print(f"== {title}\n{text}")
    print(query.render(query.run(text, store), fmt))


store = Store()
fx = build_ecid(store)
store.use_process(fx.processes["ecid_steward"])
print(f"loaded {len(store.log)} events from four sources\n")

show("the legal entity row, as xml-tags",
     'SELECT P1:Legal_entity_based_ECID WHERE P1:Customer_ID = "763810"', store, "xml-tags")

# the area code is a segment of Service_ID, reachable without any join
show("billing accounts in area code 735",
     'SELECT P4:Billing_Account WHERE P4:NPA = "735"', store)

show("contract to location over the strong E-tag",
     "JOIN STRONG (SELECT P3:Contract_based_ECID) ON P3:EC_Num, "
     "(SELECT P2:Location_based_ECID) ON P2:Customer USING P5:Contract_Location", store)

show("integrated customers projected from P2",
     'PROJECT (SELECT P2:Location_based_ECID) INTO P5:Customer { '
     'P2:Customer >> P5:CustomerID; P2:Line1 >> P5:CustomerName; '
     'P2:Line2 || ", " || P2:Line3 || " " || ZIP(P2:Line3) >> P5:Address; '
     '"USA" >> P5:CountryCode }', store)

verdict = check_composition(store, fx["legal_customer_id"], fx["ec_num"])
print(f"== legal entity within contract? {verdict.verdict}")
print(f"   boundaries needing a decision: {verdict.boundaries}\n")

# a delete archives values but keeps every meaning; rollback brings the bytes back
snapshot = store.dump_state()
event = {"op": "delete", "source": "P3", "schema": "contract_map", "key": "87936-965043"}
out = apply_event(store, event, fx.processes["p3_loader"])
print(f"== deleted map row WID={out['wid']}, archived shadows {out['archived']}")
print(f"   still selectable: {out['wid'] in query.run('SELECT P3:Contract_map', store).wids()}")
apply_event(store, dict(event, op="rollback"), fx.processes["p3_loader"])
print(f"   rollback restores identical state: {store.dump_state() == snapshot}")

print("\n== why does the contract/location E-tag exist?")
print(store.explain(f"etag:{fx.etags['contract_location']}", ["who", "why"]).prose())

report = check_properties(store, witness_samples=3)
print("\n== properties: " + ", ".join(f"{e.property} {e.status}" for e in report.entries))
