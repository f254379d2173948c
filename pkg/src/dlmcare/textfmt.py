"""Token encoding shared by the snapshot, audit dump and scenario formats.

Every free-form token is percent-encoded so that tabs, spaces, ``|``, ``,``
and ``;`` can be used as separators. ``-`` stands for "no value".
"""

from __future__ import annotations

from urllib.parse import quote, unquote

from dlmcare.labels import DlmLabel, ItemKey

NONE = "-"


def enc(value: str | None) -> str:
    if value is None:
        return NONE
    out = quote(value, safe="")
    return "%2D" if out == NONE else out


def dec(token: str) -> str | None:
    if token == NONE:
        return None
    return unquote(token)


def enc_key(key: ItemKey | None) -> str:
    if key is None:
        return NONE
    readers = ",".join(enc(r) for r in sorted(key.label.readers))
    return f"{enc(key.label.owner)}|{readers}|{enc(key.payload)}"


def dec_key(token: str) -> ItemKey | None:
    if token == NONE:
        return None
    parts = token.split("|")
    if len(parts) != 3:
        raise ValueError(f"malformed item key {token!r}")
    owner, readers, payload = parts
    reader_set = frozenset(unquote(r) for r in readers.split(",")) if readers else frozenset()
    return ItemKey(DlmLabel(unquote(owner), reader_set), unquote(payload))


def enc_detail(detail: tuple[tuple[str, str], ...]) -> str:
    if not detail:
        return NONE
    return ";".join(f"{k}={enc(v)}" for k, v in detail)


def dec_detail(token: str) -> tuple[tuple[str, str], ...]:
    if token == NONE:
        return ()
    pairs = []
    for part in token.split(";"):
        k, sep, v = part.partition("=")
        if not sep:
            raise ValueError(f"malformed detail entry {part!r}")
        pairs.append((k, unquote(v)))
    return tuple(pairs)
