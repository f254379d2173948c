"""Line-oriented scenario language.

One command per line, tokens split shell-style (so payloads may be quoted),
``#`` starts a comment. Reader sets are comma-separated, ``-`` is the empty
set. Example::

    REGISTER-PATIENT alice
    BIND-DEVICE phone1 sphone alice 1234
    UPLOAD phone1 alice alice hosp1 monitoring 50 "hr=72"
"""

from __future__ import annotations

import shlex
from dataclasses import dataclass
from typing import Any

from dlmcare.errors import ENGINE_ERROR_CODES, ParseError
from dlmcare.state import DEVICE_KINDS

# verb -> (argument kinds); "*" as the last kind takes the rest of the line
SIGNATURES: dict[str, tuple[str, ...]] = {
    "REGISTER-PATIENT": ("id",),
    "REGISTER-USER": ("id",),
    "ADD-HOSPITAL": ("id", "*"),
    "BIND-DEVICE": ("id", "kind", "id", "str"),
    "UPLOAD": ("id", "id", "id", "readers", "str", "nat", "str"),
    "DELETE": ("id", "id", "id", "readers", "str"),
    "DOWNLOAD": ("id", "id", "id"),
    "RESTRICT": ("id", "id", "id", "readers", "str", "flag"),
    "TICK": ("pos",),
    "SWEEP": (),
    "SAR": ("id", "id"),
    "DRAIN": ("id",),
    "EXPECT-ERROR": ("code",),
    "ASSERT-INVARIANTS": (),
}

TRUE_WORDS = {"true", "1", "yes", "on"}
FALSE_WORDS = {"false", "0", "no", "off"}


@dataclass(frozen=True)
class Command:
    verb: str
    args: tuple[Any, ...] = ()
    line: int = 0

    def to_line(self) -> str:
        return " ".join([self.verb, *(_format_arg(a) for a in self.args)])


def _format_arg(arg: Any) -> str:
    if isinstance(arg, bool):
        return "true" if arg else "false"
    if isinstance(arg, frozenset):
        return ",".join(sorted(arg)) if arg else "-"
    if isinstance(arg, tuple):
        return " ".join(shlex.quote(a) for a in arg)
    return shlex.quote(str(arg))


def _convert(kind: str, token: str, lineno: int):
    if kind == "id":
        if not token:
            raise ParseError("empty identifier", lineno)
        return token
    if kind == "str":
        return token
    if kind == "readers":
        if token == "-":
            return frozenset()
        parts = token.split(",")
        if any(not p for p in parts):
            raise ParseError(f"bad reader list {token!r}", lineno)
        return frozenset(parts)
    if kind == "kind":
        if token not in DEVICE_KINDS:
            raise ParseError(f"device kind must be one of {DEVICE_KINDS}, got {token!r}", lineno)
        return token
    if kind in ("nat", "pos"):
        try:
            value = int(token)
        except ValueError:
            raise ParseError(f"expected an integer, got {token!r}", lineno) from None
        if value < (1 if kind == "pos" else 0):
            raise ParseError(f"integer out of range: {value}", lineno)
        return value
    if kind == "flag":
        low = token.lower()
        if low in TRUE_WORDS:
            return True
        if low in FALSE_WORDS:
            return False
        raise ParseError(f"expected a boolean, got {token!r}", lineno)
    if kind == "code":
        if token not in ENGINE_ERROR_CODES:
            raise ParseError(f"unknown error code {token!r}", lineno)
        return token
    raise AssertionError(kind)


def parse_line(text: str, lineno: int = 0) -> Command | None:
    try:
        tokens = shlex.split(text, comments=True)
    except ValueError as exc:
        raise ParseError(str(exc), lineno) from None
    if not tokens:
        return None
    verb, rest = tokens[0].upper(), tokens[1:]
    sig = SIGNATURES.get(verb)
    if sig is None:
        raise ParseError(f"unknown command {tokens[0]!r}", lineno)
    if sig and sig[-1] == "*":
        fixed = sig[:-1]
        if len(rest) < len(fixed):
            raise ParseError(f"{verb} needs at least {len(fixed)} argument(s)", lineno)
        args = [_convert(k, t, lineno) for k, t in zip(fixed, rest)]
        args.append(tuple(_convert("id", t, lineno) for t in rest[len(fixed):]))
    else:
        if len(rest) != len(sig):
            raise ParseError(f"{verb} takes {len(sig)} argument(s), got {len(rest)}", lineno)
        args = [_convert(k, t, lineno) for k, t in zip(sig, rest)]
    return Command(verb, tuple(args), lineno)


def parse_script(text: str) -> list[Command]:
    commands = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        cmd = parse_line(raw, lineno)
        if cmd is not None:
            commands.append(cmd)
    return commands
