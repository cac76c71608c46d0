"""Equivalence ledger: evidence-backed E-tags between WIDs, synchronization
points, revocation and promotion of mutual weak links."""

from __future__ import annotations

from typing import Iterable, Optional, Union

from . import errors
from .records import EVIDENCE_KINDS, STRONG, WEAK, ETag, Evidence

_FORWARD = {"a<=b", "a⊆b", "a<b", "forward"}
_REVERSE = {"b<=a", "b⊆a", "b<a", "reverse"}

EvidenceLike = Union[str, dict, Evidence]


class EquivalenceLedger:
    # -- reads -------------------------------------------------------------

    def etag(self, etag_id: int) -> ETag:
        try:
            return self.state.etags[etag_id]
        except KeyError:
            raise errors.NotFound(f"E-tag {etag_id} not found", etag_id=etag_id) from None

    def etags_of(self, wid: int, *, active_only: bool = True) -> list[ETag]:
        out = [self.state.etags[e] for e in self.state.etags_by_wid.get(wid, [])]
        return [e for e in out if e.status == "active"] if active_only else out

    def strong_link(self, wid_a: int, wid_b: int) -> Optional[int]:
        """Id of an active strong E-tag directly joining two WIDs, if any."""
        for e in self.etags_of(wid_a):
            if e.kind == STRONG and {e.wid_a, e.wid_b} == {wid_a, wid_b}:
                return e.etag_id
        return None

    def weak_link(self, sub_wid: int, sup_wid: int) -> Optional[int]:
        """Id of an active weak E-tag declaring ``sub ⊆ sup``, if any."""
        for e in self.etags_of(sub_wid):
            if e.kind == WEAK and e.wid_a == sub_wid and e.wid_b == sup_wid:
                return e.etag_id
        return None

    # -- commands ----------------------------------------------------------

    def _evidence(self, items: Iterable[EvidenceLike]) -> list[dict]:
        process_id = self._actor[0]
        now = self.clock()
        out = []
        for item in items or []:
            if isinstance(item, Evidence):
                item = {"kind": item.kind, "body": item.body, "external_ref": item.external_ref}
            elif isinstance(item, str):
                item = {"kind": "human-decision", "body": item}
            kind = item.get("kind", "human-decision")
            if kind not in EVIDENCE_KINDS:
                raise errors.Conflict(f"unknown evidence kind {kind!r}")
            body = (item.get("body") or "").strip()
            if not body:
                raise errors.EvidenceRequired("evidence body must be non-empty")
            out.append({"author_process_id": process_id, "timestamp": now, "kind": kind,
                        "body": body, "external_ref": item.get("external_ref")})
        if not out:
            raise errors.EvidenceRequired("an E-tag needs at least one evidence record")
        return out

    def _live_wid(self, wid: int):
        wt = self.wtag(wid)
        if wt.status != "active":
            raise errors.NotFound(f"WID {wid} is {wt.status}", wid=wid)
        return wt

    def assert_etag(self, wid_a: int, wid_b: int, kind: str = STRONG,
                    direction: Optional[str] = None,
                    evidence: Iterable[EvidenceLike] = ()) -> int:
        """Declare that two WIDs' meanings are treated as the same.

        A weak tag needs ``direction``; ``"a<=b"`` reads "the meaning of
        ``wid_a`` is included in that of ``wid_b``" and ``"b<=a"`` the reverse.
        """
        with self._auto():
            if kind not in (STRONG, WEAK):
                raise errors.Conflict(f"E-tag kind must be strong or weak, not {kind!r}")
            self._live_wid(wid_a)
            self._live_wid(wid_b)
            if wid_a == wid_b:
                raise errors.SelfEquivalence("an E-tag needs two distinct WIDs", wid=wid_a)
            if kind == WEAK:
                if direction in _REVERSE:
                    wid_a, wid_b = wid_b, wid_a
                elif direction not in _FORWARD:
                    raise errors.Conflict("a weak E-tag needs direction 'a<=b' or 'b<=a'")
                direction = "a<=b"
            else:
                direction = None
            records = self._evidence(evidence)
            eid = self.state.allocate("etag")
            arrow = "≅" if kind == STRONG else "⊆"
            self._emit("assert_etag",
                       {"etag_id": eid, "wid_a": wid_a, "wid_b": wid_b, "kind": kind,
                        "direction": direction, "evidence": records},
                       affected={"etag": [eid], "wid": [wid_a, wid_b]},
                       summary=f"E-tag {eid}: WID {wid_a} {arrow} WID {wid_b}")
            return eid

    def _apply_assert_etag(self, p: dict) -> None:
        st = self.state
        eid = p["etag_id"]
        st.etags[eid] = ETag(eid, p["wid_a"], p["wid_b"], p["kind"], p["direction"],
                             [dict(e) for e in p["evidence"]])
        st.etags_by_wid[p["wid_a"]].append(eid)
        st.etags_by_wid[p["wid_b"]].append(eid)
        st.bump("etag", eid)

    def synchronize(self, wid_a: int, wid_b: int) -> int:
        """Strong E-tag between two W-tags riding on the same shadow."""
        with self._auto():
            a, b = self._live_wid(wid_a), self._live_wid(wid_b)
            if a.shadow_id is None or a.shadow_id != b.shadow_id:
                raise errors.NotSameShadow(
                    f"WIDs {wid_a} and {wid_b} do not share a shadow", wid_a=wid_a, wid_b=wid_b)
            body = (f"{self.qualified_name(a.kind_id)} and {self.qualified_name(b.kind_id)} "
                    f"share shadow {a.shadow_id}")
            return self.assert_etag(wid_a, wid_b, STRONG,
                                    evidence=[{"kind": "synchronization-point", "body": body}])

    def revoke_etag(self, etag_id: int, reason: str) -> dict:
        """Revoke an E-tag; derived instances resting on it are retracted."""
        with self._auto():
            tag = self.etag(etag_id)
            if tag.status != "active":
                raise errors.AlreadyRevoked(f"E-tag {etag_id} is already revoked")
            if not reason or not str(reason).strip():
                raise errors.EvidenceRequired("revocation needs a reason")
            retract = self._dependents_of_etag(etag_id)
            self._emit("revoke_etag", {"etag_id": etag_id, "reason": str(reason)},
                       affected={"etag": [etag_id], "wid": [tag.wid_a, tag.wid_b]},
                       summary=f"revoke E-tag {etag_id}")
            if retract:
                self._retract(retract, f"E-tag {etag_id} revoked")
            return {"op": "revoke", "etag_id": etag_id, "retracted": retract,
                    "seq": self._pending[-1].seq}

    def _apply_revoke_etag(self, p: dict) -> None:
        tag = self.state.etags[p["etag_id"]]
        tag.status = "revoked"
        tag.revocation_reason = p["reason"]

    def _dependents_of_etag(self, etag_id: int) -> list[int]:
        out = []
        for wid, wt in self.state.wtags.items():
            if not wt.derived or wt.status != "active":
                continue
            if any(step.get("kind") == "etag" and step.get("id") == etag_id
                   for step in wt.derivation_path or []):
                out.append(wid)
        return sorted(out)

    def _retract(self, wids: list[int], reason: str) -> None:
        rels = sorted({r for w in wids for r in self.state.child_rels.get(w, []) +
                       self.state.parent_rels.get(w, [])})
        self._emit("retract", {"wids": wids, "relations": rels, "reason": reason},
                   affected={"wid": wids, "relation": rels},
                   summary=f"retract {len(wids)} derived instance(s): {reason}")

    def _apply_retract(self, p: dict) -> None:
        st = self.state
        for wid in p["wids"]:
            st.wtags[wid].status = "retracted"
        for rid in p["relations"]:
            st.relations[rid].status = "retracted"
        gone = set(p["wids"])
        for key in [k for k, v in st.memo.items() if v in gone]:
            del st.memo[key]

    def promote(self, etag_ab: int, etag_ba: int,
                evidence: Iterable[EvidenceLike] = ()) -> int:
        """Assert a strong E-tag from two opposite active weak E-tags.

        The weak tags stay active and are cited as evidence; promotion is
        always an explicit call.
        """
        with self._auto():
            x, y = self.etag(etag_ab), self.etag(etag_ba)
            if x.kind != WEAK or y.kind != WEAK or x.status != "active" or y.status != "active":
                raise errors.Conflict("promotion needs two active weak E-tags")
            if (x.wid_a, x.wid_b) != (y.wid_b, y.wid_a):
                raise errors.Conflict("weak E-tags must link the same WIDs in opposite directions")
            cited = [{"kind": "rule-derived",
                      "body": f"mutual weak inclusion via E-tags {x.etag_id} and {y.etag_id}"}]
            return self.assert_etag(x.wid_a, x.wid_b, STRONG,
                                    evidence=cited + list(evidence or []))
