"""Append-only audit log and the notification outbox."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Sequence

from dlmcare.errors import SequenceGap
from dlmcare.labels import ActorId, ItemKey
from dlmcare.textfmt import dec, dec_detail, dec_key, enc, enc_detail, enc_key

if TYPE_CHECKING:
    from dlmcare.state import SystemState

MESSAGE_KINDS = ("upload_ok", "delete_ok", "download_ok", "access")

EFFECTS = (
    "added",
    "removed",
    "read",
    "flagged",
    "registered",
    "ticked",
    # outbox bookkeeping, needed so that replay rebuilds the outbox too
    "sent",
    "delivered",
    "swept",
)

FIELDS = ("seq", "at", "op", "actor", "node", "item", "effect", "outcome", "detail")


@dataclass(frozen=True)
class Message:
    kind: str
    recipient: str
    items: tuple[ItemKey, ...]
    origin: int  # seq of the first audit record of the emitting operation

    def __post_init__(self) -> None:
        if self.kind not in MESSAGE_KINDS:
            raise ValueError(f"unknown message kind {self.kind!r}")


@dataclass(frozen=True)
class AuditRecord:
    seq: int
    at: int
    op: str
    actor: ActorId | None
    node: str
    item: ItemKey | None
    effect: str
    outcome: str = "ok"
    detail: tuple[tuple[str, str], ...] = ()

    def get(self, name: str, default: str | None = None) -> str | None:
        for k, v in self.detail:
            if k == name:
                return v
        return default

    def dump(self) -> str:
        return "\t".join(
            (
                str(self.seq),
                str(self.at),
                enc(self.op),
                enc(self.actor),
                enc(self.node),
                enc_key(self.item),
                self.effect,
                enc(self.outcome),
                enc_detail(self.detail),
            )
        )

    @classmethod
    def parse(cls, line: str) -> AuditRecord:
        fields = line.rstrip("\n").split("\t")
        if len(fields) != len(FIELDS):
            raise ValueError(f"expected {len(FIELDS)} fields, got {len(fields)}")
        seq, at, op, actor, node, item, effect, outcome, detail = fields
        if effect not in EFFECTS:
            raise ValueError(f"unknown effect {effect!r}")
        return cls(
            seq=int(seq),
            at=int(at),
            op=dec(op),
            actor=dec(actor),
            node=dec(node),
            item=dec_key(item),
            effect=effect,
            outcome=dec(outcome),
            detail=dec_detail(detail),
        )


def append(audit: list[AuditRecord], record: AuditRecord) -> list[AuditRecord]:
    if record.seq != len(audit):
        raise SequenceGap(f"record seq {record.seq} but log length is {len(audit)}")
    if record.effect not in EFFECTS:
        raise ValueError(f"unknown effect {record.effect!r}")
    audit.append(record)
    return audit


def log(state: SystemState, op: str, actor, node: str, effect: str, item=None, **detail) -> AuditRecord:
    """Build the next record at the current clock and append it."""
    record = AuditRecord(
        seq=len(state.audit),
        at=state.clock,
        op=op,
        actor=actor,
        node=node,
        item=item,
        effect=effect,
        detail=tuple((k, str(v)) for k, v in detail.items()),
    )
    append(state.audit, record)
    return record


def encode_items(items: Iterable[ItemKey]) -> str:
    return " ".join(enc_key(k) for k in items)


def decode_items(text: str) -> tuple[ItemKey, ...]:
    return tuple(dec_key(t) for t in text.split(" ")) if text else ()


def send(state: SystemState, op: str, actor, kind: str, recipient: str,
         items: Sequence[ItemKey], origin: int) -> Message:
    items = tuple(sorted(items, key=ItemKey.sort_key))
    msg = Message(kind, recipient, items, origin)
    log(
        state, op, actor, "outbox", "sent",
        item=items[0] if len(items) == 1 else None,
        kind=kind, recipient=recipient, origin=origin, items=encode_items(items),
    )
    state.outbox.append(msg)
    return msg


def _addressed_to(state: SystemState, msg: Message, recipient: str) -> bool:
    if msg.recipient == recipient:
        return True
    # a phone also collects the access notices of the person it is bound to
    session = state.devices.get(recipient)
    return (
        session is not None
        and session.kind == "sphone"
        and msg.kind == "access"
        and msg.recipient == session.bound_actor
    )


def take_messages(state: SystemState, recipient: str) -> list[Message]:
    taken, kept = [], []
    for msg in state.outbox:
        (taken if _addressed_to(state, msg, recipient) else kept).append(msg)
    state.outbox[:] = kept
    return taken


def drain(state: SystemState, recipient: str) -> list[Message]:
    """Remove and return every outbox message for ``recipient``, oldest first.

    ``recipient`` is an actor id or a device token. Draining a smart phone
    also delivers the ``access`` notices addressed to its bound actor.
    """
    taken = take_messages(state, recipient)
    log(state, "drain", None, "outbox", "delivered", recipient=recipient, count=len(taken))
    return taken


def query_audit(state: SystemState, owner: ActorId) -> list[AuditRecord]:
    return [r for r in state.audit if r.item is not None and r.item.label.owner == owner]


def dump_audit(records: Iterable[AuditRecord]) -> str:
    return "".join(r.dump() + "\n" for r in records)


def parse_audit(text: str) -> list[AuditRecord]:
    out: list[AuditRecord] = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            rec = AuditRecord.parse(line)
        except ValueError as exc:
            raise ValueError(f"audit line {lineno}: {exc}") from exc
        append(out, rec)
    return out
