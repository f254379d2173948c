"""Versioned, line-oriented snapshot format.

::

    DLMCARE-SNAPSHOT<TAB>1
    clock<TAB>n
    patient<TAB>actor                    (sorted)
    user<TAB>actor                       (sorted)
    hospital<TAB>id<TAB>staff,...        (sorted by id)
    device<TAB>token<TAB>kind<TAB>actor<TAB>credential   (sorted by token)
    item<TAB>location<TAB>key<TAB>purpose<TAB>expiry<TAB>restricted
    message<TAB>kind<TAB>recipient<TAB>origin<TAB>key key ...   (outbox order)
    audit<TAB><audit dump fields>        (seq order)
    end

Items are listed for ``db`` first, then hospitals by id, each table in key
order. Expiry is inclusive: an item with expiry ``e`` survives every sweep
at clock ``<= e`` and is erased by the first sweep at ``e + 1`` or later.
Equal states therefore serialize to identical bytes.
"""

from __future__ import annotations

from pathlib import Path

from dlmcare.audit import AuditRecord, Message, append, decode_items, encode_items
from dlmcare.errors import CorruptSnapshot, FormatVersionMismatch
from dlmcare.labels import ItemKey, LabelledItem, Meta
from dlmcare.state import DB, DeviceSession, HospitalNode, SystemState
from dlmcare.textfmt import dec, dec_key, enc, enc_key

MAGIC = "DLMCARE-SNAPSHOT"
VERSION = 1


def dumps(state: SystemState) -> str:
    lines = [f"{MAGIC}\t{VERSION}", f"clock\t{state.clock}"]
    lines += [f"patient\t{enc(a)}" for a in sorted(state.auth.patients)]
    lines += [f"user\t{enc(a)}" for a in sorted(state.auth.reg_usrs)]
    for hid in sorted(state.hospitals):
        staff = ",".join(enc(s) for s in sorted(state.hospitals[hid].staff))
        lines.append(f"hospital\t{enc(hid)}\t{staff}")
    for token in sorted(state.devices):
        s = state.devices[token]
        lines.append(f"device\t{enc(token)}\t{s.kind}\t{enc(s.bound_actor)}\t{enc(s.credential)}")
    for location, table in state.tables():
        for key in sorted(table, key=ItemKey.sort_key):
            m = table[key].meta
            lines.append(f"item\t{enc(location)}\t{enc_key(key)}\t{enc(m.purpose)}\t{m.expiry}\t{int(m.restricted)}")
    for msg in state.outbox:
        lines.append(f"message\t{msg.kind}\t{enc(msg.recipient)}\t{msg.origin}\t{encode_items(msg.items)}")
    lines += [f"audit\t{rec.dump()}" for rec in state.audit]
    lines.append("end")
    return "\n".join(lines) + "\n"


def _expect(fields: list[str], n: int, lineno: int) -> None:
    if len(fields) != n:
        raise CorruptSnapshot(f"{fields[0]} line needs {n - 1} field(s), got {len(fields) - 1}", lineno)


def loads(text: str) -> SystemState:
    lines = text.split("\n")
    if not lines or not lines[0].startswith(MAGIC + "\t"):
        raise CorruptSnapshot("missing snapshot header", 1)
    version = lines[0].split("\t", 1)[1]
    if version != str(VERSION):
        raise FormatVersionMismatch(f"snapshot version {version}, expected {VERSION}")

    state = SystemState()
    ended = False
    for lineno, line in enumerate(lines[1:], 2):
        if ended:
            if line:
                raise CorruptSnapshot("data after end marker", lineno)
            continue
        if not line:
            raise CorruptSnapshot("blank line", lineno)
        fields = line.split("\t")
        tag = fields[0]
        try:
            if tag == "end":
                ended = True
            elif tag == "clock":
                _expect(fields, 2, lineno)
                state.clock = int(fields[1])
            elif tag == "patient":
                _expect(fields, 2, lineno)
                state.auth.patients.add(dec(fields[1]))
            elif tag == "user":
                _expect(fields, 2, lineno)
                state.auth.reg_usrs.add(dec(fields[1]))
            elif tag == "hospital":
                _expect(fields, 3, lineno)
                hid = dec(fields[1])
                staff = frozenset(dec(s) for s in fields[2].split(",")) if fields[2] else frozenset()
                state.hospitals[hid] = HospitalNode(hid, staff)
            elif tag == "device":
                _expect(fields, 5, lineno)
                token = dec(fields[1])
                state.devices[token] = DeviceSession(token, fields[2], dec(fields[3]), dec(fields[4]))
            elif tag == "item":
                _expect(fields, 6, lineno)
                location, key = dec(fields[1]), dec_key(fields[2])
                table = state.db.table if location == DB else state.hospitals[location].table
                meta = Meta(dec(fields[3]), int(fields[4]), fields[5] == "1")
                table[key] = LabelledItem(key.label, meta, key.payload)
            elif tag == "message":
                _expect(fields, 5, lineno)
                state.outbox.append(Message(fields[1], dec(fields[2]), decode_items(fields[4]), int(fields[3])))
            elif tag == "audit":
                append(state.audit, AuditRecord.parse(line.split("\t", 1)[1]))
            else:
                raise CorruptSnapshot(f"unknown record tag {tag!r}", lineno)
        except CorruptSnapshot:
            raise
        except Exception as exc:  # ValueError, KeyError, SequenceGap, ...
            raise CorruptSnapshot(str(exc), lineno) from exc
    if not ended:
        raise CorruptSnapshot("truncated snapshot (no end marker)", len(lines))
    return state


def snapshot_save(state: SystemState, path) -> None:
    Path(path).write_text(dumps(state), encoding="utf-8")


def snapshot_load(path) -> SystemState:
    return loads(Path(path).read_text(encoding="utf-8"))
