"""Naive executable semantics used as a differential oracle.

Tables are plain sets of row tuples ``(owner, readers, payload, purpose,
expiry, restricted)`` and every operation is a comprehension over the whole
state. Nothing here touches the engine's dict-backed tables.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Any

Row = tuple  # (owner, readers, payload, purpose, expiry, restricted)


def ident(row: Row) -> tuple:
    return row[:3]


@dataclass(frozen=True)
class Observation:
    """What one command did, in a form both implementations can produce."""

    outcome: str
    messages: dict = field(default_factory=dict)  # recipient -> Counter[(kind, items)]
    value: Any = None


def bag(msgs) -> dict:
    """Per-recipient multiset of ``(kind, recipient, frozenset(items))``."""
    out: dict = {}
    for kind, recipient, items in msgs:
        out.setdefault(recipient, Counter())[(kind, frozenset(items))] += 1
    return out


class Refusal(Exception):
    def __init__(self, code: str) -> None:
        self.code = code


class ReferenceModel:
    def __init__(self, strict_delete: bool = False) -> None:
        self.strict_delete = strict_delete
        self.patients: set = set()
        self.users: set = set()
        self.staff: dict = {}
        self.devices: dict = {}  # token -> (kind, actor)
        self.db: set = set()
        self.htables: dict = {}
        self.outbox: list = []  # (kind, recipient, items)
        self.clock = 0

    # -- observation helpers -------------------------------------------------
    def tables(self) -> dict:
        out = {"db": frozenset(self.db)}
        out.update({h: frozenset(rows) for h, rows in self.htables.items()})
        return out

    def _all_tables(self):
        return [("db", self.db)] + sorted(self.htables.items())

    def _auth(self, dev, claimed):
        if dev not in self.devices:
            raise Refusal("UnknownDevice")
        if self.devices[dev][1] != claimed:
            raise Refusal("AuthMismatch")

    def _owner_control(self, dev, claimed, owner, kinds):
        self._auth(dev, claimed)
        if claimed != owner:
            raise Refusal("AuthMismatch")
        if self.devices[dev][0] not in kinds:
            raise Refusal("WrongDeviceKind")

    # -- commands -------------------------------------------------------------
    def apply(self, verb: str, args: tuple) -> Observation:
        handler = getattr(self, "do_" + verb.replace("-", "_").lower())
        before = len(self.outbox)
        try:
            value = handler(*args)
        except Refusal as r:
            return Observation(r.code)
        return Observation("ok", bag(self.outbox[before:]), value)

    def do_register_patient(self, a):
        if a in self.patients:
            raise Refusal("DuplicateRegistration")
        self.patients = self.patients | {a}

    def do_register_user(self, a):
        if a in self.users:
            raise Refusal("DuplicateRegistration")
        self.users = self.users | {a}

    def do_add_hospital(self, h, staff):
        if h in self.staff:
            raise Refusal("DuplicateRegistration")
        self.staff[h] = frozenset(staff)
        self.htables[h] = set()

    def do_bind_device(self, dev, kind, actor, cred):
        if dev in self.devices:
            raise Refusal("DuplicateRegistration")
        self.devices[dev] = (kind, actor)

    def do_upload(self, dev, claimed, owner, readers, purpose, expiry, payload):
        self._owner_control(dev, claimed, owner, {"sphone", "home"})
        if owner not in self.patients:
            raise Refusal("NotAPatient")
        if not readers <= self.users:
            raise Refusal("UnregisteredReader")
        key = (owner, readers, payload)
        self.db = {row for row in self.db if ident(row) != key} | {(*key, purpose, expiry, False)}
        self.outbox.append(("upload_ok", dev, (key,)))

    def do_delete(self, dev, claimed, owner, readers, payload):
        self._owner_control(dev, claimed, owner, {"sphone"})
        key = (owner, readers, payload)
        if not any(ident(row) == key for row in self.db):
            raise Refusal("NotFound")
        if self.strict_delete:
            for h in readers:
                if h in self.htables and not any(ident(row) == key for row in self.htables[h]):
                    raise Refusal("StrictPreconditionFailed")
        self.db = {row for row in self.db if ident(row) != key}
        self.htables = {h: {row for row in rows if ident(row) != key} for h, rows in self.htables.items()}
        self.outbox.append(("delete_ok", dev, (key,)))

    def do_download(self, h, doctor, owner):
        if h not in self.staff:
            raise Refusal("UnknownHospital")
        if doctor not in self.staff[h]:
            raise Refusal("NotStaff")
        if owner not in self.patients:
            raise Refusal("NotAPatient")
        if h not in self.users:
            raise Refusal("HospitalNotRegistered")
        picked = {row for row in self.db if row[0] == owner and h in row[1] and not row[5]}
        if not picked:
            raise Refusal("NoAccessibleData")
        keys = {ident(row) for row in picked}
        self.htables[h] = {row for row in self.htables[h] if ident(row) not in keys} | picked
        # notices go out in (owner, sorted readers, payload) order
        for row in sorted(picked, key=lambda row: (row[0], sorted(row[1]), row[2])):
            self.outbox.append(("access", owner, (ident(row),)))
        self.outbox.append(("download_ok", doctor, tuple(keys)))

    def do_restrict(self, dev, claimed, owner, readers, payload, flag):
        self._owner_control(dev, claimed, owner, {"sphone"})
        key = (owner, readers, payload)
        if not any(ident(row) == key for row in self.db):
            raise Refusal("NotFound")
        self.db = {(*row[:5], flag) if ident(row) == key else row for row in self.db}

    def do_tick(self, n):
        self.clock += n

    def do_sweep(self):
        erased = {ident(row) for _, rows in self._all_tables() for row in rows if row[4] < self.clock}
        self.db = {row for row in self.db if row[4] >= self.clock}
        self.htables = {h: {row for row in rows if row[4] >= self.clock} for h, rows in self.htables.items()}
        return frozenset(erased)

    def do_sar(self, dev, claimed):
        self._auth(dev, claimed)
        if claimed not in self.patients:
            raise Refusal("NotAPatient")
        report = {}
        for loc, rows in self._all_tables():
            for row in rows:
                if row[0] != claimed:
                    continue
                locs, meta = report.get(ident(row), (frozenset(), row[3:]))
                report[ident(row)] = (locs | {loc}, meta)
        return report

    def do_drain(self, recipient):
        dev = self.devices.get(recipient)

        def mine(msg):
            kind, to, _ = msg
            if to == recipient:
                return True
            return dev is not None and dev[0] == "sphone" and kind == "access" and to == dev[1]

        taken = [m for m in self.outbox if mine(m)]
        self.outbox = [m for m in self.outbox if not mine(m)]
        return [(kind, to, frozenset(items)) for kind, to, items in taken]
