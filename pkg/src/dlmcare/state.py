"""System class model: Auth registry, cloud DB, hospitals and device sessions.

Only the DB and the hospital nodes hold labelled items. Phones and home hubs
are outside the security perimeter and are represented by sessions that
carry nothing but their binding.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator

from dlmcare.audit import AuditRecord, Message, log
from dlmcare.errors import AuthMismatch, DuplicateRegistration, UnknownDevice
from dlmcare.labels import ActorId, ItemKey, LabelledItem, check_actor

DEVICE_KINDS = ("sphone", "home")
DB = "db"


@dataclass
class AuthRegistry:
    patients: set[ActorId] = field(default_factory=set)
    reg_usrs: set[ActorId] = field(default_factory=set)


@dataclass
class CloudDb:
    table: dict[ItemKey, LabelledItem] = field(default_factory=dict)


@dataclass
class HospitalNode:
    hospital_id: ActorId
    staff: frozenset[ActorId] = frozenset()
    table: dict[ItemKey, LabelledItem] = field(default_factory=dict)


@dataclass(frozen=True)
class DeviceSession:
    device_id: str
    kind: str
    bound_actor: ActorId
    credential: str

    def __post_init__(self) -> None:
        if self.kind not in DEVICE_KINDS:
            raise ValueError(f"device kind must be one of {DEVICE_KINDS}, got {self.kind!r}")


@dataclass
class SystemState:
    auth: AuthRegistry = field(default_factory=AuthRegistry)
    db: CloudDb = field(default_factory=CloudDb)
    hospitals: dict[ActorId, HospitalNode] = field(default_factory=dict)
    devices: dict[str, DeviceSession] = field(default_factory=dict)
    clock: int = 0
    audit: list[AuditRecord] = field(default_factory=list)
    outbox: list[Message] = field(default_factory=list)

    def tables(self) -> Iterator[tuple[str, dict[ItemKey, LabelledItem]]]:
        """Yield ``(location, table)`` for the DB first, then hospitals by id."""
        yield DB, self.db.table
        for hid in sorted(self.hospitals):
            yield hid, self.hospitals[hid].table

    def locations_of(self, key: ItemKey) -> frozenset[str]:
        return frozenset(loc for loc, table in self.tables() if key in table)


def register_patient(state: SystemState, actor: ActorId) -> SystemState:
    check_actor(actor)
    if actor in state.auth.patients:
        raise DuplicateRegistration(f"patient {actor} already registered")
    state.auth.patients.add(actor)
    log(state, "register_patient", actor, "auth", "registered", role="patient")
    return state


def register_user(state: SystemState, actor: ActorId) -> SystemState:
    check_actor(actor)
    if actor in state.auth.reg_usrs:
        raise DuplicateRegistration(f"user {actor} already registered")
    state.auth.reg_usrs.add(actor)
    log(state, "register_user", actor, "auth", "registered", role="user")
    return state


def add_hospital(state: SystemState, hospital_id: ActorId, staff: Iterable[ActorId] = ()) -> SystemState:
    check_actor(hospital_id)
    staff = frozenset(check_actor(s) for s in staff)
    if hospital_id in state.hospitals:
        raise DuplicateRegistration(f"hospital {hospital_id} already present")
    state.hospitals[hospital_id] = HospitalNode(hospital_id, staff)
    log(state, "add_hospital", hospital_id, hospital_id, "registered", staff=",".join(sorted(staff)))
    return state


def bind_device(state: SystemState, device_id: str, kind: str, actor: ActorId, credential: str) -> SystemState:
    if not device_id:
        raise ValueError("device id must be non-empty")
    check_actor(actor)
    session = DeviceSession(device_id, kind, actor, credential)
    if device_id in state.devices:
        raise DuplicateRegistration(f"device {device_id} already bound")
    state.devices[device_id] = session
    log(state, "bind_device", actor, "devices", "registered",
        device=device_id, kind=kind, credential=credential)
    return state


def authenticate(state: SystemState, device_id: str, claimed_id: ActorId) -> DeviceSession:
    """Stand-in for a real authentication protocol: the device must be bound
    to the actor it claims to act for."""
    session = state.devices.get(device_id)
    if session is None:
        raise UnknownDevice(f"device {device_id} is not bound")
    if session.bound_actor != claimed_id:
        raise AuthMismatch(f"device {device_id} is bound to {session.bound_actor}, not {claimed_id}")
    return session


def phones_of(state: SystemState, actor: ActorId) -> list[str]:
    return sorted(d for d, s in state.devices.items() if s.kind == "sphone" and s.bound_actor == actor)
