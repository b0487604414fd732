"""Document model: identifiers, dense positions, value histories, edges.

Every edge of the replicated tree carries, per attribute, the full history
of values it was ever given.  Each history entry remembers the timestamp of
the operation that produced it and an effect counter that undo/redo adjust.
"""

from __future__ import annotations

import bisect
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Optional, Sequence, Union


class CrdtError(Exception):
    """Base class for engine and harness errors."""


class DuplicateDelivery(CrdtError):
    """An operation was delivered twice (effect counters are not idempotent)."""


class CausalityViolation(CrdtError):
    """An operation arrived before something it depends on."""


class InvalidBoundary(CrdtError, ValueError):
    """generate_position was asked for a position inside an empty interval."""


class Timestamp(NamedTuple):
    """(clock, site) pair. Tuple ordering is the required total order."""

    clock: int
    site: int

    def __str__(self) -> str:
        return f"{self.clock},{self.site}"

    @classmethod
    def parse(cls, text: str) -> "Timestamp":
        clock, site = text.split(",")
        return cls(int(clock), int(site))


ROOT_ID = Timestamp(0, 0)

# attribute names with engine meaning; never serialized
TAG = "@tag"
POSITION = "@position"
TEXT = "@text"
ADD = "@add"
DEL = "@del"
SPECIAL_ATTRIBUTES = frozenset({TAG, POSITION, TEXT, ADD, DEL})


def compare_timestamps(a: Timestamp, b: Timestamp) -> int:
    """Return -1, 0 or 1 as ``a`` is less than, equal to or greater than ``b``."""
    return (a > b) - (a < b)


# ---------------------------------------------------------------------------
# dense positions

DIGIT_BASE = 1 << 16


@dataclass(frozen=True, order=True)
class Position:
    """Child-ordering key: a non-empty path of (digit, site) pairs.

    Comparison is lexicographic over the pairs; a proper prefix sorts first.
    """

    path: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        if not self.path:
            raise ValueError("position path must be non-empty")

    def __str__(self) -> str:
        return ".".join(f"{d}:{s}" for d, s in self.path)


def generate_position(
    left: Optional[Position], right: Optional[Position], site: int
) -> Position:
    """Return a fresh position strictly between ``left`` and ``right``.

    ``None`` stands for the start (left) or end (right) boundary.  The new
    position ends with a pair carrying ``site`` so two sites generating
    between the same neighbours never collide.
    """
    if left is not None and right is not None and not left < right:
        raise InvalidBoundary(f"{left} is not below {right}")
    lpath = left.path if left is not None else ()
    rpath = right.path if right is not None else ()
    bounded_right = right is not None
    prefix: list[tuple[int, int]] = []
    level = 0
    while True:
        lpair = lpath[level] if level < len(lpath) else None
        rpair = rpath[level] if bounded_right and level < len(rpath) else None
        lo = lpair[0] if lpair is not None else 0
        hi = rpair[0] if rpair is not None else DIGIT_BASE
        if hi - lo > 1:
            prefix.append(((lo + hi) // 2, site))
            return Position(tuple(prefix))
        if lpair is not None:
            # follow left one level down; once we are below right's pair the
            # right bound no longer constrains deeper levels
            prefix.append(lpair)
            if lpair != rpair:
                bounded_right = False
        elif rpair is not None and rpair[0] == 1:
            prefix.append((0, site))
            bounded_right = False
        elif rpair is not None and level + 1 < len(rpath):
            prefix.append(rpair)
        else:
            raise InvalidBoundary(f"no room below {right}")
        level += 1


# ---------------------------------------------------------------------------
# attribute histories

Value = Union[str, Position, None]


@dataclass
class AttrValue:
    value: Value
    timestamp: Timestamp
    effect: int = 1


def effect_of(v: AttrValue) -> int:
    return v.effect


def _desc_key(v: AttrValue) -> tuple[int, int]:
    return (-v.timestamp.clock, -v.timestamp.site)


@dataclass
class ValueHistory:
    """Entries for one attribute, newest first, unique timestamps."""

    entries: list[AttrValue] = field(default_factory=list)

    def __iter__(self) -> Iterator[AttrValue]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def _index(self, ts: Timestamp) -> int:
        return bisect.bisect_left(self.entries, (-ts.clock, -ts.site), key=_desc_key)

    def add(self, v: AttrValue) -> "ValueHistory":
        i = self._index(v.timestamp)
        if i < len(self.entries) and self.entries[i].timestamp == v.timestamp:
            raise DuplicateDelivery(f"value with timestamp {v.timestamp} already present")
        self.entries.insert(i, v)
        return self

    def get(self, ts: Timestamp) -> Optional[AttrValue]:
        i = self._index(ts)
        if i < len(self.entries) and self.entries[i].timestamp == ts:
            return self.entries[i]
        return None


def add_value(h: ValueHistory, v: AttrValue) -> ValueHistory:
    return h.add(v)


def get_value(h: ValueHistory, ts: Timestamp) -> Optional[AttrValue]:
    return h.get(ts)


# ---------------------------------------------------------------------------
# tree


@dataclass(eq=False)
class Edge:
    identifier: Timestamp
    parent: Optional[Timestamp] = None
    children: dict[Timestamp, "Edge"] = field(default_factory=dict)
    attributes: dict[str, ValueHistory] = field(default_factory=dict)

    def history(self, name: str) -> ValueHistory:
        """History for ``name``, created empty on first use."""
        h = self.attributes.get(name)
        if h is None:
            h = self.attributes[name] = ValueHistory()
        return h

    @property
    def add_entry(self) -> Optional[AttrValue]:
        h = self.attributes.get(ADD)
        if not h:
            return None
        return h.entries[0]

    def entries(self) -> Iterator[tuple[str, AttrValue]]:
        for name, h in self.attributes.items():
            for v in h:
                yield name, v

    def value_count(self) -> int:
        return sum(len(h) for h in self.attributes.values())


MODES = ("undo", "lww")


@dataclass(eq=False)
class Document:
    """Replica state: the tree plus an identifier index.

    ``index`` also holds edges that are not reachable from the root: orphan
    tombstones (a Del delivered before its Add) and edges detached by the
    garbage collector but not yet removable.  ``removed`` records ids of
    edges dropped for good, so late operations aimed at them are ignored.
    """

    mode: str = "undo"
    root: Edge = field(default_factory=lambda: Edge(ROOT_ID))
    index: dict[Timestamp, Edge] = field(default_factory=dict)
    removed: set[Timestamp] = field(default_factory=set)
    dropped: Counter = field(default_factory=Counter)

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        self.index.setdefault(ROOT_ID, self.root)

    def find(self, id: Timestamp) -> Optional[Edge]:
        return self.index.get(id)

    def find_father(self, id: Timestamp) -> Optional[Edge]:
        e = self.index.get(id)
        if e is None or e.parent is None:
            return None
        return self.index.get(e.parent)

    def attach(self, parent: Edge, child: Edge) -> None:
        child.parent = parent.identifier
        parent.children[child.identifier] = child

    def detach(self, e: Edge) -> None:
        if e.parent is not None:
            p = self.index.get(e.parent)
            if p is not None:
                p.children.pop(e.identifier, None)
        e.parent = None

    def reachable(self) -> set[Timestamp]:
        seen = {ROOT_ID}
        stack = [self.root]
        while stack:
            e = stack.pop()
            for c in e.children.values():
                seen.add(c.identifier)
                stack.append(c)
        return seen

    def edge_count(self) -> int:
        """Stored edges, root excluded."""
        return len(self.index) - 1

    def value_count(self) -> int:
        return sum(e.value_count() for e in self.index.values())

    def snapshot(self) -> tuple:
        """Canonical structural dump used for replica equality checks."""
        edges = []
        for id in sorted(self.index):
            e = self.index[id]
            attrs = tuple(
                (name, tuple((str(v.value) if isinstance(v.value, Position) else v.value,
                              v.timestamp, v.effect) for v in h))
                for name, h in sorted(e.attributes.items())
            )
            edges.append((id, e.parent, tuple(sorted(e.children)), attrs))
        return tuple(edges)


def find(d: Document, id: Timestamp) -> Optional[Edge]:
    return d.find(id)


def find_father(d: Document, id: Timestamp) -> Optional[Edge]:
    return d.find_father(id)


def sorted_children(children: Sequence[Edge], position_of) -> list[Edge]:
    """Order siblings by (position, identifier); unpositioned ones go first."""

    def key(e: Edge):
        p = position_of(e)
        return (p is not None, p if p is not None else Position(((0, 0),)), e.identifier)

    return sorted(children, key=key)
