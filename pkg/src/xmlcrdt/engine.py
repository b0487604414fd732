"""Operation delivery for the XML CRDT.

Two document modes share one engine:

* ``undo``: every delivered value is appended to its attribute history with
  an effect counter of 1; Undo/Redo move that counter by -1/+1.
* ``lww``: attributes hold a single value, overwritten only by a newer
  timestamp, and Del physically removes the subtree.

The engine assumes causal, exactly-once delivery (the simulator provides
it) and raises when that assumption is broken.  Operations aimed at an edge
already removed for good (lww delete, garbage collection) are dropped and
counted in ``Document.dropped``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import ClassVar, Optional, Union

from .model import (
    ADD,
    DEL,
    ROOT_ID,
    AttrValue,
    CausalityViolation,
    CrdtError,
    Document,
    DuplicateDelivery,
    Edge,
    Timestamp,
    Value,
)


class ModeError(CrdtError):
    """Operation not supported by the document's mode."""


@dataclass(frozen=True)
class Add:
    parent: Timestamp
    ts: Timestamp
    kind: ClassVar[str] = "Add"

    @property
    def target(self) -> Timestamp:
        return self.ts


@dataclass(frozen=True)
class Del:
    target: Timestamp
    ts: Timestamp
    kind: ClassVar[str] = "Del"


@dataclass(frozen=True)
class SetAttr:
    target: Timestamp
    attr: str
    value: Value
    ts: Timestamp
    kind: ClassVar[str] = "SetAttr"


BaseOp = Union[Add, Del, SetAttr]


@dataclass(frozen=True)
class Undo:
    undone: BaseOp
    ts: Timestamp
    kind: ClassVar[str] = "Undo"

    @property
    def target(self) -> Timestamp:
        return self.undone.target


@dataclass(frozen=True)
class Redo:
    undone: BaseOp
    ts: Timestamp
    kind: ClassVar[str] = "Redo"

    @property
    def target(self) -> Timestamp:
        return self.undone.target


Operation = Union[Add, Del, SetAttr, Undo, Redo]


def history_key(op: BaseOp) -> tuple[Timestamp, str, Timestamp]:
    """(edge id, attribute, entry timestamp) of the value ``op`` produced."""
    if isinstance(op, Add):
        return op.ts, ADD, op.ts
    if isinstance(op, Del):
        return op.target, DEL, op.ts
    return op.target, op.attr, op.ts


def entry_for(d: Document, op: BaseOp) -> Optional[AttrValue]:
    edge_id, attr, ts = history_key(op)
    e = d.find(edge_id)
    if e is None:
        return None
    h = e.attributes.get(attr)
    return h.get(ts) if h is not None else None


@dataclass
class ReplicaClock:
    site: int
    clock: int = 0

    def tick(self) -> Timestamp:
        self.clock += 1
        return Timestamp(self.clock, self.site)

    def sync(self, remote: Union[Timestamp, int]) -> "ReplicaClock":
        c = remote.clock if isinstance(remote, Timestamp) else remote
        if c > self.clock:
            self.clock = c
        return self


def tick(c: ReplicaClock) -> Timestamp:
    return c.tick()


def sync_clock(c: ReplicaClock, remote: Timestamp) -> ReplicaClock:
    return c.sync(remote)


# ---------------------------------------------------------------------------


def _drop(d: Document, op: Operation) -> Document:
    d.dropped[op.kind] += 1
    return d


def _existing(d: Document, id: Timestamp, op: Operation) -> Optional[Edge]:
    e = d.find(id)
    if e is None and id not in d.removed:
        raise CausalityViolation(f"{op.kind} {op.ts}: edge {id} unknown")
    return e


def deliver_add(d: Document, op: Add) -> Document:
    if op.ts in d.removed:
        return _drop(d, op)
    parent = d.find(op.parent)
    if parent is None:
        if op.parent in d.removed:
            # child of a dead edge can never render
            d.removed.add(op.ts)
            return _drop(d, op)
        raise CausalityViolation(f"Add {op.ts}: parent {op.parent} unknown")
    if parent is not d.root and parent.add_entry is None:
        raise CausalityViolation(f"Add {op.ts}: parent {op.parent} not yet added")
    e = d.find(op.ts)
    if e is None:
        e = d.index[op.ts] = Edge(op.ts)
    elif e.add_entry is not None:
        raise DuplicateDelivery(f"Add {op.ts} delivered twice")
    e.history(ADD).add(AttrValue(None, op.ts, 1))
    d.attach(parent, e)
    return d


def deliver_del(d: Document, op: Del) -> Document:
    if op.target == ROOT_ID:
        raise ValueError("the root cannot be deleted")
    if op.target in d.removed:
        return _drop(d, op)
    e = d.find(op.target)
    if e is None:
        # Del overtook its Add: keep an orphan tombstone
        e = d.index[op.target] = Edge(op.target)
    e.history(DEL).add(AttrValue(None, op.ts, 1))
    return d


def _check_attr(op: SetAttr) -> None:
    if op.attr in (ADD, DEL):
        raise ValueError(f"{op.attr} cannot be set directly")


def deliver_set_attr(d: Document, op: SetAttr) -> Document:
    _check_attr(op)
    e = _existing(d, op.target, op)
    if e is None:
        return _drop(d, op)
    e.history(op.attr).add(AttrValue(op.value, op.ts, 1))
    return d


def deliver_set_attr_lww(d: Document, op: SetAttr) -> Document:
    _check_attr(op)
    e = _existing(d, op.target, op)
    if e is None:
        return _drop(d, op)
    h = e.history(op.attr)
    if h.entries:
        current = h.entries[0].timestamp
        if current == op.ts:
            raise DuplicateDelivery(f"SetAttr {op.ts} delivered twice")
        if current > op.ts:
            return d
    h.entries[:] = [AttrValue(op.value, op.ts, 1)]
    return d


def remove_subtree(d: Document, e: Edge) -> int:
    """Unlink ``e`` and drop it with all descendants. Returns edges removed."""
    d.detach(e)
    n = 0
    stack = [e]
    while stack:
        x = stack.pop()
        stack.extend(x.children.values())
        d.index.pop(x.identifier, None)
        d.removed.add(x.identifier)
        n += 1
    return n


def deliver_del_lww(d: Document, op: Del) -> Document:
    if op.target == ROOT_ID:
        raise ValueError("the root cannot be deleted")
    e = _existing(d, op.target, op)
    if e is None:
        return _drop(d, op)
    remove_subtree(d, e)
    return d


def increment(d: Document, op: Union[Undo, Redo], delta: int) -> Document:
    edge_id, attr, ts = history_key(op.undone)
    e = _existing(d, edge_id, op)
    if e is None:
        return _drop(d, op)
    h = e.attributes.get(attr)
    v = h.get(ts) if h is not None else None
    if v is None:
        raise CausalityViolation(f"{op.kind} {op.ts}: no {attr} value {ts} on {edge_id}")
    v.effect += delta
    return d


def deliver_undo(d: Document, op: Undo) -> Document:
    return increment(d, op, -1)


def deliver_redo(d: Document, op: Redo) -> Document:
    return increment(d, op, +1)


def deliver(d: Document, op: Operation) -> Document:
    """Apply ``op`` according to the document's mode."""
    if d.mode == "lww":
        if isinstance(op, Add):
            return deliver_add(d, op)
        if isinstance(op, Del):
            return deliver_del_lww(d, op)
        if isinstance(op, SetAttr):
            return deliver_set_attr_lww(d, op)
        raise ModeError(f"{op.kind} is not available in lww mode")
    if isinstance(op, Add):
        return deliver_add(d, op)
    if isinstance(op, Del):
        return deliver_del(d, op)
    if isinstance(op, SetAttr):
        return deliver_set_attr(d, op)
    if isinstance(op, Undo):
        return deliver_undo(d, op)
    if isinstance(op, Redo):
        return deliver_redo(d, op)
    raise TypeError(f"not an operation: {op!r}")
