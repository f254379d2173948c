"""Global invariant suite.

Structural invariants are evaluated on the state itself; the historical
ones (label preservation, deletion completeness, notification, retention,
restriction, flow gate) are evaluated against the audit log. The checker is
incremental: feeding it successive states of one run only processes the
audit records appended since the previous call.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, fields
from typing import Any

from dlmcare.audit import AuditRecord
from dlmcare.harness.replay import ReplayError, apply_record
from dlmcare.labels import ItemKey, flow_permitted
from dlmcare.state import DB, DeviceSession, SystemState

NAMES = {
    "I1": "registration",
    "I2": "reader confinement",
    "I3": "label preservation",
    "I4": "deletion completeness",
    "I5": "notification",
    "I6": "retention",
    "I7": "perimeter",
    "I8": "audit completeness",
    "I9": "oracle equivalence",
    "I10": "restriction",
    "FLOW": "flow gate",
    "CLOCK": "clock monotone",
}


@dataclass(frozen=True)
class InvariantResult:
    id: str
    status: str  # pass | fail | skip
    witness: Any = None

    @property
    def name(self) -> str:
        return NAMES[self.id]

    def __str__(self) -> str:
        line = f"{self.id:<5} {self.name:<22} {self.status.upper()}"
        return line if self.witness is None else f"{line}  witness: {self.witness}"


@dataclass(frozen=True)
class InvariantReport:
    results: tuple[InvariantResult, ...]

    @property
    def ok(self) -> bool:
        return all(r.status != "fail" for r in self.results)

    @property
    def failures(self) -> list[InvariantResult]:
        return [r for r in self.results if r.status == "fail"]

    def __getitem__(self, inv_id: str) -> InvariantResult:
        for r in self.results:
            if r.id == inv_id:
                return r
        raise KeyError(inv_id)

    def __str__(self) -> str:
        return "\n".join(str(r) for r in self.results)


class InvariantChecker:
    def __init__(self) -> None:
        self.shadow = SystemState()
        self.replay_error: str | None = None
        self.seen = 0
        self.prev_clock = 0
        self.clock_witness = None
        # facts accumulated from the log
        self.db_meta: dict[ItemKey, tuple[str, str]] = {}
        self.db_restricted: dict[ItemKey, bool] = {}
        self.ever_uploaded: set[ItemKey] = set()
        self.deleted: set[ItemKey] = set()
        self.copies: Counter = Counter()
        self.access: Counter = Counter()
        self.last_add: dict[tuple[str, ItemKey], int] = {}
        self.last_sweep: AuditRecord | None = None
        self.i3_witness = None
        self.i10_witness = None
        self.flow_witness = None

    def _absorb(self, rec: AuditRecord) -> None:
        key = rec.item
        if rec.effect == "added":
            self.last_add[(rec.node, key)] = rec.seq
            meta = (rec.get("purpose"), rec.get("expiry"))
            if rec.node == DB:
                self.ever_uploaded.add(key)
                self.deleted.discard(key)
                self.db_meta[key] = meta
                self.db_restricted[key] = rec.get("restricted") == "1"
            else:
                if self.flow_witness is None and not flow_permitted(key, rec.node):
                    self.flow_witness = rec
                if self.i3_witness is None and self.db_meta.get(key) != meta:
                    self.i3_witness = rec
                if self.i10_witness is None and self.db_restricted.get(key, False):
                    self.i10_witness = rec
                self.copies[key.label.owner] += 1
        elif rec.effect == "removed":
            if rec.node == DB:
                self.db_meta.pop(key, None)
                self.db_restricted.pop(key, None)
            if rec.op == "delete":
                self.deleted.add(key)
        elif rec.effect == "flagged":
            self.db_restricted[key] = rec.get("flag") == "1"
        elif rec.effect == "sent" and rec.get("kind") == "access":
            self.access[rec.get("recipient")] += 1
        elif rec.effect == "swept":
            self.last_sweep = rec

    def check(self, state: SystemState, oracle_ok: bool | None = None, oracle_witness=None) -> InvariantReport:
        for rec in state.audit[self.seen:]:
            if self.replay_error is None:
                try:
                    apply_record(self.shadow, rec)
                except (ReplayError, KeyError, ValueError) as exc:
                    self.replay_error = f"record {rec.seq}: {exc}"
            self._absorb(rec)
        self.seen = len(state.audit)
        if self.clock_witness is None and state.clock < self.prev_clock:
            self.clock_witness = (self.prev_clock, state.clock)
        self.prev_clock = state.clock

        results = [
            _result("I1", _registration(state)),
            _result("I2", _confinement(state)),
            _result("I3", self.i3_witness or _unsourced(state, self.ever_uploaded)),
            _result("I4", _resurrected(state, self.deleted)),
            _result("I5", self._notification()),
            _result("I6", self._retention(state)),
            _result("I7", _perimeter(state)),
            _result("I8", self._replayed(state)),
            InvariantResult("I9", "skip" if oracle_ok is None else ("pass" if oracle_ok else "fail"),
                            None if oracle_ok is not False else oracle_witness),
            _result("I10", self.i10_witness),
            _result("FLOW", self.flow_witness),
            _result("CLOCK", self.clock_witness),
        ]
        return InvariantReport(tuple(results))

    def _notification(self):
        if self.access == self.copies:
            return None
        for owner in sorted(set(self.access) | set(self.copies)):
            if self.access[owner] != self.copies[owner]:
                return (owner, self.access[owner], self.copies[owner])
        return None

    def _retention(self, state: SystemState):
        if self.last_sweep is None:
            return None
        swept_at, swept_seq = self.last_sweep.at, self.last_sweep.seq
        for location, table in state.tables():
            for key, item in table.items():
                # copies added after the last sweep are judged by the next one
                if self.last_add.get((location, key), -1) < swept_seq and item.meta.expiry < swept_at:
                    return (location, key, item.meta.expiry, swept_at)
        return None

    def _replayed(self, state: SystemState):
        if self.replay_error is not None:
            return self.replay_error
        for f in fields(SystemState):
            if f.name == "audit":
                # the shadow log holds the very records it replayed
                if len(self.shadow.audit) != len(state.audit):
                    return "replayed audit length differs"
            elif getattr(self.shadow, f.name) != getattr(state, f.name):
                return f"replayed state differs in {f.name}"
        return None


def _result(inv_id: str, witness) -> InvariantResult:
    return InvariantResult(inv_id, "pass" if witness is None else "fail", witness)


def _registration(state: SystemState):
    for key, item in state.db.table.items():
        if item.label.owner not in state.auth.patients or not item.label.readers <= state.auth.reg_usrs:
            return key
    return None


def _confinement(state: SystemState):
    for hid, node in sorted(state.hospitals.items()):
        if node.hospital_id != hid:
            return (hid, node.hospital_id)
        for key in node.table:
            if hid not in key.label.readers:
                return (hid, key)
    return None


def _unsourced(state: SystemState, uploaded: set[ItemKey]):
    for location, table in state.tables():
        for key, item in table.items():
            if item.key != key or (location != DB and key not in uploaded):
                return (location, key)
    return None


def _resurrected(state: SystemState, deleted: set[ItemKey]):
    if not deleted:
        return None
    held = set().union(*(table.keys() for _, table in state.tables()))
    back = deleted & held
    if not back:
        return None
    key = min(back, key=ItemKey.sort_key)
    return (key, sorted(state.locations_of(key)))


def _perimeter(state: SystemState):
    for token, session in state.devices.items():
        if type(session) is not DeviceSession or len(vars(session)) != _SESSION_FIELDS:
            return token
        if not all(type(v) is str for v in vars(session).values()):
            return token
    return None


_SESSION_FIELDS = len(fields(DeviceSession))


def check_invariants(state: SystemState) -> InvariantReport:
    """One-shot check of a state: replays its whole audit log."""
    return InvariantChecker().check(state)
