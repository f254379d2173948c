"""Upload, delete, download, restrict and subject access.

Each operation checks every precondition before touching the state, so a
raised :class:`~dlmcare.errors.DlmError` always leaves the state exactly as
it was. On success the state is updated in place and an :class:`OpResult`
describes what was emitted.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from dlmcare.audit import AuditRecord, Message, log, send
from dlmcare.errors import (
    AuthMismatch,
    HospitalNotRegistered,
    NoAccessibleData,
    NotAPatient,
    NotFound,
    NotStaff,
    StrictPreconditionFailed,
    UnknownHospital,
    UnregisteredReader,
    WrongDeviceKind,
)
from dlmcare.labels import ActorId, DlmLabel, ItemKey, LabelledItem, Meta, flow_permitted
from dlmcare.state import DB, DeviceSession, SystemState, authenticate

UPLOAD_KINDS = frozenset({"sphone", "home"})
CONTROL_KINDS = frozenset({"sphone"})


@dataclass(frozen=True)
class OpResult:
    outcome: str = "ok"
    emitted: tuple[Message, ...] = ()
    touched: frozenset[ItemKey] = frozenset()


def meta_detail(meta: Meta) -> dict[str, str]:
    return {"purpose": meta.purpose, "expiry": str(meta.expiry), "restricted": str(int(meta.restricted))}


def _owner_session(state: SystemState, device_id: str, claimed_id: ActorId,
                   label: DlmLabel, kinds: frozenset[str]) -> DeviceSession:
    session = authenticate(state, device_id, claimed_id)
    if claimed_id != label.owner:
        raise AuthMismatch(f"{claimed_id} may not act for owner {label.owner}")
    if session.kind not in kinds:
        raise WrongDeviceKind(f"{session.kind} device {device_id} cannot perform this operation")
    return session


def upload(state: SystemState, device_id: str, payload: str, label: DlmLabel,
           meta: Meta, claimed_id: ActorId) -> OpResult:
    """Store ``((label), payload)`` in the cloud DB.

    Re-uploading an existing item leaves the table's key set unchanged but
    replaces its meta. The restriction flag always starts cleared.
    """
    _owner_session(state, device_id, claimed_id, label, UPLOAD_KINDS)
    if label.owner not in state.auth.patients:
        raise NotAPatient(f"{label.owner} is not a registered patient")
    unregistered = label.readers - state.auth.reg_usrs
    if unregistered:
        raise UnregisteredReader(f"readers not registered: {sorted(unregistered)}")

    item = LabelledItem(label, Meta(meta.purpose, meta.expiry), payload)
    first = log(state, "upload", claimed_id, DB, "added", item=item.key, **meta_detail(item.meta))
    state.db.table[item.key] = item
    msg = send(state, "upload", claimed_id, "upload_ok", device_id, [item.key], first.seq)
    return OpResult(emitted=(msg,), touched=frozenset({item.key}))


def delete(state: SystemState, device_id: str, payload: str, label: DlmLabel,
           claimed_id: ActorId, mode: str = "lenient") -> OpResult:
    """Erase an item from the DB and from every hospital holding a copy.

    ``mode="strict"`` additionally demands that every reader hospital holds
    the item before anything is removed.
    """
    if mode not in ("strict", "lenient"):
        raise ValueError(f"mode must be 'strict' or 'lenient', got {mode!r}")
    _owner_session(state, device_id, claimed_id, label, CONTROL_KINDS)
    key = ItemKey(label, payload)
    if key not in state.db.table:
        raise NotFound(f"{key} is not in the cloud DB")
    if mode == "strict":
        missing = [h for h in sorted(label.readers) if h in state.hospitals and key not in state.hospitals[h].table]
        if missing:
            raise StrictPreconditionFailed(f"{key} absent from hospital table(s) {missing}")

    first: AuditRecord | None = None
    for location, table in list(state.tables()):
        if key in table:
            del table[key]
            rec = log(state, "delete", claimed_id, location, "removed", item=key)
            first = first or rec
    msg = send(state, "delete", claimed_id, "delete_ok", device_id, [key], first.seq)
    return OpResult(emitted=(msg,), touched=frozenset({key}))


def accessible(state: SystemState, hospital_id: ActorId, owner: ActorId) -> list[LabelledItem]:
    """Items of ``owner`` in the DB that ``hospital_id`` may download now."""
    found = [
        item
        for item in state.db.table.values()
        if item.label.owner == owner and hospital_id in item.label.readers and not item.meta.restricted
    ]
    return sorted(found, key=lambda it: it.key.sort_key())


def download(state: SystemState, hospital_id: ActorId, claimed_id: ActorId, owner: ActorId) -> OpResult:
    """Copy every accessible item of ``owner`` into the hospital's table.

    The owner is told about each copied item with one ``access`` message;
    the doctor gets a single ``download_ok`` listing all of them.
    """
    node = state.hospitals.get(hospital_id)
    if node is None:
        raise UnknownHospital(f"no hospital {hospital_id}")
    if claimed_id not in node.staff:
        raise NotStaff(f"{claimed_id} is not on the staff of {hospital_id}")
    if owner not in state.auth.patients:
        raise NotAPatient(f"{owner} is not a registered patient")
    if hospital_id not in state.auth.reg_usrs:
        raise HospitalNotRegistered(f"{hospital_id} is not a registered user")
    matches = accessible(state, hospital_id, owner)
    if not matches:
        raise NoAccessibleData(f"no unrestricted data of {owner} readable by {hospital_id}")

    first: AuditRecord | None = None
    for item in matches:
        assert flow_permitted(item, hospital_id)
        rec = log(state, "download", claimed_id, hospital_id, "added", item=item.key, **meta_detail(item.meta))
        first = first or rec
        node.table[item.key] = item
    keys = [item.key for item in matches]
    emitted = [send(state, "download", claimed_id, "access", owner, [k], first.seq) for k in keys]
    emitted.append(send(state, "download", claimed_id, "download_ok", claimed_id, keys, first.seq))
    return OpResult(emitted=tuple(emitted), touched=frozenset(keys))


def restrict(state: SystemState, device_id: str, payload: str, label: DlmLabel,
             claimed_id: ActorId, flag: bool) -> OpResult:
    _owner_session(state, device_id, claimed_id, label, CONTROL_KINDS)
    key = ItemKey(label, payload)
    item = state.db.table.get(key)
    if item is None:
        raise NotFound(f"{key} is not in the cloud DB")
    log(state, "restrict", claimed_id, DB, "flagged", item=key, flag=int(bool(flag)))
    state.db.table[key] = replace(item, meta=replace(item.meta, restricted=bool(flag)))
    return OpResult(touched=frozenset({key}))


@dataclass(frozen=True)
class SarEntry:
    label: DlmLabel
    payload: str
    purpose: str
    expiry: int
    restricted: bool
    locations: frozenset[str]
    copies: tuple[tuple[str, Meta], ...]
    history: tuple[AuditRecord, ...]

    @property
    def key(self) -> ItemKey:
        return ItemKey(self.label, self.payload)


@dataclass(frozen=True)
class SarReport:
    subject: ActorId
    entries: tuple[SarEntry, ...] = field(default_factory=tuple)

    def locations(self) -> dict[ItemKey, frozenset[str]]:
        return {e.key: e.locations for e in self.entries}


def subject_access_request(state: SystemState, device_id: str, claimed_id: ActorId) -> SarReport:
    """Everything the system holds about ``claimed_id``'s data.

    Purpose, expiry and the restriction flag come from the DB copy when one
    exists, else from the first hospital copy; ``copies`` lists each
    location's meta separately.
    """
    authenticate(state, device_id, claimed_id)
    if claimed_id not in state.auth.patients:
        raise NotAPatient(f"{claimed_id} is not a registered patient")

    copies: dict[ItemKey, list[tuple[str, Meta]]] = {}
    for location, table in state.tables():
        for key, item in table.items():
            if key.label.owner == claimed_id:
                copies.setdefault(key, []).append((location, item.meta))
    history: dict[ItemKey, list[AuditRecord]] = {k: [] for k in copies}
    for rec in state.audit:
        if rec.item in history:
            history[rec.item].append(rec)

    entries = []
    for key in sorted(copies, key=ItemKey.sort_key):
        where = copies[key]
        primary = where[0][1]
        entries.append(
            SarEntry(
                label=key.label,
                payload=key.payload,
                purpose=primary.purpose,
                expiry=primary.expiry,
                restricted=primary.restricted,
                locations=frozenset(loc for loc, _ in where),
                copies=tuple(where),
                history=tuple(history[key]),
            )
        )
    log(state, "subject_access_request", claimed_id, "auth", "read", device=device_id, entries=len(entries))
    return SarReport(claimed_id, tuple(entries))
