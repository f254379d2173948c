"""Logical clock and the retention sweeper."""

from __future__ import annotations

from dlmcare.audit import log
from dlmcare.labels import ItemKey
from dlmcare.state import SystemState


def tick(state: SystemState, n: int = 1) -> SystemState:
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise ValueError(f"tick needs a positive integer, got {n!r}")
    # stamped with the tick it started from
    log(state, "tick", None, "clock", "ticked", n=n)
    state.clock += n
    return state


def expired(state: SystemState) -> list[tuple[str, ItemKey]]:
    return [
        (location, key)
        for location, table in state.tables()
        for key in sorted(table, key=ItemKey.sort_key)
        if table[key].meta.expiry < state.clock
    ]


def sweep(state: SystemState) -> set[ItemKey]:
    """Erase every copy whose expiry lies strictly before the current tick.

    Each copy is judged by its own meta: a hospital copy keeps the expiry it
    had when it was downloaded.
    """
    doomed = expired(state)
    log(state, "sweep", None, "clock", "swept", count=len(doomed))
    tables = dict(state.tables())
    for location, key in doomed:
        del tables[location][key]
        log(state, "sweep", None, location, "removed", item=key)
    return {key for _, key in doomed}
