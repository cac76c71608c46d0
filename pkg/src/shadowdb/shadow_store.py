"""Data space: shadow values, sub-shadow decompositions and the value archive."""

from __future__ import annotations

from typing import Any, Optional

from . import errors
from .records import Shadow


class ShadowRef:
    """Marks a sub-part that reuses an existing shadow instead of a new value."""

    __slots__ = ("shadow_id",)

    def __init__(self, shadow_id: int):
        self.shadow_id = shadow_id

    def __repr__(self) -> str:
        return f"ShadowRef({self.shadow_id})"


def _as_payload(value: Any) -> Optional[str]:
    if value is None or isinstance(value, str):
        return value
    if isinstance(value, bytes):
        return value.decode("utf-8")
    if isinstance(value, (int, float)):
        return str(value)
    raise TypeError(f"shadow payloads are text; got {type(value).__name__}")


class ShadowSpace:
    # -- reads -------------------------------------------------------------

    def shadow(self, shadow_id: int) -> Shadow:
        try:
            return self.state.shadows[shadow_id]
        except KeyError:
            raise errors.NotFound(f"shadow {shadow_id} not found", shadow_id=shadow_id) from None

    def sub_shadows(self, shadow_id: int) -> list[tuple[str, int]]:
        return [tuple(pair) for pair in self.shadow(shadow_id).sub_shadows]

    def descendants_in_data_space(self, shadow_id: int) -> list[int]:
        """Sub-shadows at any depth in depth-first pre-order, each visited once."""
        out, seen, stack = [], {shadow_id}, [shadow_id]
        tick = self._steps()
        while stack:
            sid = stack.pop()
            if sid != shadow_id:
                out.append(sid)
            for _, child in reversed(self.state.shadows[sid].sub_shadows):
                tick()
                if child not in seen and child in self.state.shadows:
                    seen.add(child)
                    stack.append(child)
        return out

    # -- mutations ---------------------------------------------------------

    def insert_shadow(self, value: Any, sub_parts: Optional[list] = None) -> int:
        """Insert a shadow; each sub-part becomes (or references) a sub-shadow.

        ``sub_parts`` is a list of ``(role, part)`` where ``part`` is a text
        value, a :class:`ShadowRef`, or ``(value, sub_parts)`` for nesting.
        The shadow must receive a W-tag before its transaction commits.
        """
        with self._auto():
            subs = []
            for role, part in sub_parts or []:
                if isinstance(part, ShadowRef):
                    self.shadow(part.shadow_id)
                    subs.append([role, part.shadow_id])
                elif isinstance(part, tuple):
                    subs.append([role, self.insert_shadow(part[0], part[1])])
                else:
                    subs.append([role, self.insert_shadow(part)])
            sid = self.state.allocate("shadow")
            self._emit("insert_shadow",
                       {"shadow_id": sid, "value": _as_payload(value), "sub_shadows": subs},
                       affected={"shadow": [sid]},
                       summary=f"insert shadow {sid}")
            self._txn_shadows.add(sid)
            return sid

    def _apply_insert_shadow(self, p: dict) -> None:
        st = self.state
        sid = p["shadow_id"]
        st.shadows[sid] = Shadow(sid, p["value"], [list(x) for x in p["sub_shadows"]])
        for _, child in p["sub_shadows"]:
            st.shadow_parents[child].append(sid)
        st.bump("shadow", sid)

    def add_sub_shadow(self, shadow_id: int, role: str, sub_shadow_id: int) -> None:
        with self._auto():
            self.shadow(shadow_id)
            self.shadow(sub_shadow_id)
            self._emit("add_sub_shadow",
                       {"shadow_id": shadow_id, "role": role, "sub_shadow_id": sub_shadow_id},
                       affected={"shadow": [shadow_id, sub_shadow_id]},
                       summary=f"shadow {sub_shadow_id} becomes {role} of {shadow_id}")

    def _apply_add_sub_shadow(self, p: dict) -> None:
        self.state.shadows[p["shadow_id"]].sub_shadows.append([p["role"], p["sub_shadow_id"]])
        self.state.shadow_parents[p["sub_shadow_id"]].append(p["shadow_id"])

    def update_value(self, shadow_id: int, value: Any) -> None:
        with self._auto():
            sh = self.shadow(shadow_id)
            if sh.archived:
                raise errors.AlreadyArchived(f"shadow {shadow_id} is archived; restore first")
            new = _as_payload(value)
            if new == sh.value:
                return
            self._check_ptags_for_value(shadow_id, new)
            self._emit("update_value",
                       {"shadow_id": shadow_id, "before": sh.value, "after": new},
                       affected={"shadow": [shadow_id],
                                 "wid": list(self.state.wids_by_shadow.get(shadow_id, []))},
                       summary=f"update shadow {shadow_id}")

    def _apply_update_value(self, p: dict) -> None:
        self.state.shadows[p["shadow_id"]].value = p["after"]

    def archive_values(self, shadow_id: int, *, cascade: bool = False) -> dict:
        """Move the value payload into the archive; ids and links stay live.

        With ``cascade`` the not-yet-archived sub-shadows at any depth that
        are not shared with shadows outside the subtree are archived in the
        same group, so :meth:`restore_values` with ``cascade``
        undoes exactly this call.
        """
        with self._auto():
            sh = self.shadow(shadow_id)
            if sh.archived:
                raise errors.AlreadyArchived(f"shadow {shadow_id} is already archived")
            group = [shadow_id]
            if cascade:
                group += self._owned_descendants(shadow_id)
            wids = [w for s in group for w in self.state.wids_by_shadow.get(s, [])]
            self._emit("archive", {"group": shadow_id, "shadow_ids": group},
                       affected={"shadow": group, "wid": wids},
                       summary=f"archive values of {len(group)} shadow(s)")
            return {"op": "archive", "shadow_ids": group, "seq": self._pending[-1].seq}

    def _owned_descendants(self, shadow_id: int) -> list[int]:
        """Live sub-shadows at any depth that no shadow outside the subtree uses."""
        st = self.state
        candidates = [s for s in self.descendants_in_data_space(shadow_id)
                      if not st.shadows[s].archived]
        owned = {shadow_id}
        changed = True
        while changed:
            changed = False
            for sid in candidates:
                if sid not in owned and all(p in owned for p in st.shadow_parents.get(sid, [])):
                    owned.add(sid)
                    changed = True
        return [s for s in candidates if s in owned]

    def _apply_archive(self, p: dict) -> None:
        for sid in p["shadow_ids"]:
            sh = self.state.shadows[sid]
            sh.archive_payload = {"value": sh.value, "group": p["group"]}
            sh.value = None
            sh.archived = True

    def restore_values(self, shadow_id: int, *, cascade: bool = False) -> dict:
        with self._auto():
            sh = self.shadow(shadow_id)
            if not sh.archived:
                raise errors.NothingToRestore(f"shadow {shadow_id} is not archived")
            group = [shadow_id]
            if cascade:
                group += [s for s in self.descendants_in_data_space(shadow_id)
                          if self.state.shadows[s].archived
                          and self.state.shadows[s].archive_payload["group"] == shadow_id]
            wids = [w for s in group for w in self.state.wids_by_shadow.get(s, [])]
            self._emit("restore", {"shadow_ids": group},
                       affected={"shadow": group, "wid": wids},
                       summary=f"restore values of {len(group)} shadow(s)")
            return {"op": "restore", "shadow_ids": group, "seq": self._pending[-1].seq}

    def _apply_restore(self, p: dict) -> None:
        for sid in p["shadow_ids"]:
            sh = self.state.shadows[sid]
            sh.value = sh.archive_payload["value"]
            sh.archive_payload = None
            sh.archived = False

    def purge_shadow(self, shadow_id: int, *, confirm: bool = False) -> dict:
        """Administrative physical delete of a shadow record.

        W-tag instances survive with ``shadow_id=None``; WIDs are never freed.
        """
        if not confirm:
            raise errors.PurgeNotConfirmed("purge requires confirm=True")
        with self._auto():
            self.shadow(shadow_id)
            wids = list(self.state.wids_by_shadow.get(shadow_id, []))
            self._emit("purge", {"shadow_id": shadow_id},
                       affected={"shadow": [shadow_id], "wid": wids},
                       summary=f"purge shadow {shadow_id}")
            return {"op": "purge", "shadow_ids": [shadow_id]}

    def _apply_purge(self, p: dict) -> None:
        st = self.state
        sid = p["shadow_id"]
        for wid in st.wids_by_shadow.pop(sid, []):
            st.wtags[wid].shadow_id = None
        for parent in st.shadow_parents.pop(sid, []):
            if parent in st.shadows:
                st.shadows[parent].sub_shadows = [
                    pair for pair in st.shadows[parent].sub_shadows if pair[1] != sid]
        for _, child in st.shadows[sid].sub_shadows:
            if sid in st.shadow_parents.get(child, []):
                st.shadow_parents[child].remove(sid)
        del st.shadows[sid]
