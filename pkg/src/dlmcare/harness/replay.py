"""Rebuild a state from its audit log by re-applying each recorded effect."""

from __future__ import annotations

from dataclasses import replace
from typing import Iterable

from dlmcare.audit import AuditRecord, Message, append, decode_items, take_messages
from dlmcare.labels import LabelledItem, Meta
from dlmcare.state import DB, DeviceSession, HospitalNode, SystemState


class ReplayError(ValueError):
    pass


def _table(state: SystemState, node: str):
    if node == DB:
        return state.db.table
    try:
        return state.hospitals[node].table
    except KeyError:
        raise ReplayError(f"record names unknown node {node!r}") from None


def apply_record(state: SystemState, rec: AuditRecord) -> None:
    if rec.at != state.clock:
        raise ReplayError(f"record {rec.seq} stamped {rec.at} but clock is {state.clock}")
    effect = rec.effect
    if effect == "registered":
        if rec.op == "register_patient":
            state.auth.patients.add(rec.actor)
        elif rec.op == "register_user":
            state.auth.reg_usrs.add(rec.actor)
        elif rec.op == "add_hospital":
            staff = rec.get("staff", "")
            state.hospitals[rec.node] = HospitalNode(rec.node, frozenset(staff.split(",")) if staff else frozenset())
        elif rec.op == "bind_device":
            dev = rec.get("device")
            state.devices[dev] = DeviceSession(dev, rec.get("kind"), rec.actor, rec.get("credential"))
        else:
            raise ReplayError(f"unknown registration op {rec.op!r}")
    elif effect == "added":
        meta = Meta(rec.get("purpose"), int(rec.get("expiry")), rec.get("restricted") == "1")
        _table(state, rec.node)[rec.item] = LabelledItem(rec.item.label, meta, rec.item.payload)
    elif effect == "removed":
        table = _table(state, rec.node)
        if rec.item not in table:
            raise ReplayError(f"record {rec.seq} removes an absent item")
        del table[rec.item]
    elif effect == "flagged":
        item = state.db.table[rec.item]
        state.db.table[rec.item] = replace(item, meta=replace(item.meta, restricted=rec.get("flag") == "1"))
    elif effect == "ticked":
        state.clock += int(rec.get("n"))
    elif effect == "sent":
        state.outbox.append(
            Message(rec.get("kind"), rec.get("recipient"), decode_items(rec.get("items", "")), int(rec.get("origin")))
        )
    elif effect == "delivered":
        taken = take_messages(state, rec.get("recipient"))
        if len(taken) != int(rec.get("count")):
            raise ReplayError(f"record {rec.seq} delivered {rec.get('count')} but replay found {len(taken)}")
    elif effect not in ("read", "swept"):
        raise ReplayError(f"unknown effect {effect!r}")
    append(state.audit, rec)


def replay(records: Iterable[AuditRecord], state: SystemState | None = None) -> SystemState:
    state = state if state is not None else SystemState()
    for rec in records:
        apply_record(state, rec)
    return state
