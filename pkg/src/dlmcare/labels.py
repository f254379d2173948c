"""Actors, owner/reader labels and the read/flow predicates."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

ActorId = str


def check_actor(actor: ActorId) -> ActorId:
    if not isinstance(actor, str) or not actor:
        raise ValueError(f"actor id must be a non-empty string, got {actor!r}")
    return actor


@dataclass(frozen=True)
class DlmLabel:
    owner: ActorId
    readers: frozenset[ActorId] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        check_actor(self.owner)
        readers = frozenset(self.readers)
        for r in readers:
            check_actor(r)
        object.__setattr__(self, "readers", readers)
        object.__setattr__(self, "_hash", hash((self.owner, readers)))

    def __hash__(self) -> int:
        return self._hash

    @classmethod
    def of(cls, owner: ActorId, readers: Iterable[ActorId] = ()) -> DlmLabel:
        return cls(owner, frozenset(readers))

    def sort_key(self) -> tuple:
        return (self.owner, tuple(sorted(self.readers)))

    def __str__(self) -> str:
        return f"({self.owner},{{{','.join(sorted(self.readers))}}})"


@dataclass(frozen=True)
class Meta:
    """GDPR bookkeeping attached to an item at upload.

    ``expiry`` is an absolute clock tick; the item is erased by the first
    sweep that runs at a tick strictly greater than it.
    """

    purpose: str
    expiry: int
    restricted: bool = False

    def __post_init__(self) -> None:
        if not isinstance(self.purpose, str) or not self.purpose:
            raise ValueError("purpose must be a non-empty string")
        if isinstance(self.expiry, bool) or not isinstance(self.expiry, int) or self.expiry < 0:
            raise ValueError(f"expiry must be a non-negative integer, got {self.expiry!r}")


class ItemKey(NamedTuple):
    """Table identity of an item: the ``((o, r), d)`` tuple without meta."""

    label: DlmLabel
    payload: str

    def sort_key(self) -> tuple:
        return (*self.label.sort_key(), self.payload)

    def __str__(self) -> str:
        return f"({self.label},{self.payload!r})"


@dataclass(frozen=True)
class LabelledItem:
    label: DlmLabel
    meta: Meta
    payload: str

    @property
    def key(self) -> ItemKey:
        return ItemKey(self.label, self.payload)


def item_identity(item: LabelledItem) -> ItemKey:
    return ItemKey(item.label, item.payload)


def may_read(label: DlmLabel, actor: ActorId) -> bool:
    # the owner reads its own data without being listed
    return actor == label.owner or actor in label.readers


def flow_permitted(item: LabelledItem | ItemKey, destination: ActorId) -> bool:
    """Gate for every copy between nodes of the perimeter."""
    return may_read(item.label, destination)
