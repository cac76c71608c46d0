"""Level shifting over a customer hierarchy (HAS-A) and an account hierarchy (IS-A).

One Ownership fact is recorded between a mid-level customer and a mid-level
account. Inference lists every ownership it implies and materialises each one
as a derived instance that remembers how it was reached.

Run with ``python demos/hierarchy_shift.py``.
"""

import os

os.environ.setdefault("SHADOW_FIXED_CLOCK", "2012-09-12T00:00:00Z")

from shadowdb import HAS_A, IS_A, Store, query  # noqa: E402
from shadowdb.inference import inclusion_holds, infer_level_shift  # noqa: E402

store = Store()
pid = store.register_process("modeler", [{"id": "model", "description": "hierarchy demo"}])
store.use_process(pid)

store.create_perspective("H", "enterprise hierarchy")
ec = store.define_kind("H", "EC", "enterprise customer")
acct = store.define_kind("H", "Acct", "service account")
own = store.define_kind("H", "Ownership", "customer owns account", template=[ec, acct])

with store.transaction():
    w = {}
    for name in ("ECroot", "EC1", "EC1.2"):
        w[name] = store.attach_wtag(store.insert_shadow(name), ec)
    for name in ("Acct1.1", "Acct1.1.1", "Acct1.1.1.2"):
        w[name] = store.attach_wtag(store.insert_shadow(name), acct)
    # customers roll up the organisation; accounts specialise into sub-accounts
    store.assert_relation(w["EC1.2"], w["EC1"], HAS_A)
    store.assert_relation(w["EC1"], w["ECroot"], HAS_A)
    store.assert_relation(w["Acct1.1.1"], w["Acct1.1"], IS_A)
    store.assert_relation(w["Acct1.1.1.2"], w["Acct1.1.1"], IS_A)
    base = store.insert_tagged(own, None, [(ec, ("wid", w["EC1.2"])),
                                           (acct, ("wid", w["Acct1.1"]))])

holds, proof = inclusion_holds(store, w["EC1.2"], w["ECroot"])
print(f"EC1.2 within ECroot: {holds} via WIDs {proof.wids}\n")

names = {v: k for k, v in w.items()}
print("implied ownerships:")
for d in infer_level_shift(store, base):
    parts = [names[c.child] for c in store.child_relations(d.wid)]
    print(f"  WID={d.wid:03d} {d.direction:9s} {parts[0]:7s} owns {parts[1]}")

plain = query.run("SELECT H:Ownership", store)
derived = query.run("SELECT H:Ownership WITH DERIVED", store)
print(f"\nrecorded ownerships: {len(plain)}, with derived: {len(derived)}")

first = infer_level_shift(store, base)[0]
print("\nhow the first one was reached:")
for step in store.explain(first.wid).derivation_path:
    print(f"  {step}")
