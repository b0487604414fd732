"""Tombstone and history garbage collection.

Each replica tracks the last clock it received from every replica (``v``)
and the last minimum each replica announced (``V``).  With FIFO channels,
every replica is known to have received every operation whose clock is at
or below ``M = min(V)``, and no replica will undo or redo such an operation
any more.  History that can no longer influence the rendered document is
then dropped by :func:`purge`.

Replicas announce ``min(v) - k`` instead of ``min(v)``; ``k`` keeps the most
recent operations undoable even when replicas are tightly synchronized.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

from .model import ADD, DEL, CrdtError, Document, Edge, Timestamp


class FifoViolation(CrdtError):
    """A clock or announced minimum went backwards on a channel."""


@dataclass
class GcState:
    site: int
    sites: tuple[int, ...]
    k: int = 0
    v: dict[int, int] = field(default_factory=dict)
    V: dict[int, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.k < 0:
            raise ValueError("k must be non-negative")
        self.sites = tuple(sorted(set(self.sites) | {self.site}))
        for s in self.sites:
            self.v.setdefault(s, 0)

    @classmethod
    def for_sites(cls, site: int, sites: Iterable[int], k: int = 0) -> "GcState":
        return cls(site=site, sites=tuple(sites), k=k)

    @property
    def m(self) -> int:
        return min(self.v[s] for s in self.sites)

    @property
    def M(self) -> Optional[int]:
        """Purge horizon, or None until every replica has announced."""
        if any(s not in self.V for s in self.sites):
            return None
        return min(self.V[s] for s in self.sites)

    def observe_operation(self, from_site: int, clock: int) -> "GcState":
        if clock < self.v.get(from_site, 0):
            raise FifoViolation(
                f"clock {clock} from site {from_site} after {self.v[from_site]}"
            )
        self.v[from_site] = clock
        return self

    def broadcast_minimum(self) -> int:
        announced = self.m - self.k
        self.receive_minimum(self.site, announced)
        return announced

    def receive_minimum(self, from_site: int, value: int) -> "GcState":
        if from_site in self.V and value < self.V[from_site]:
            raise FifoViolation(
                f"minimum {value} from site {from_site} after {self.V[from_site]}"
            )
        self.V[from_site] = value
        return self

    def can_undo(self, ts: Timestamp) -> bool:
        return ts.clock > self.m - self.k


def can_undo(g: GcState, ts: Timestamp) -> bool:
    return g.can_undo(ts)


@dataclass
class PurgeStats:
    edges: int = 0
    values: int = 0
    attributes: int = 0


def permanently_invisible(e: Edge, M: int) -> bool:
    """Edge-removal condition: a settled Del in effect, or a settled Add undone."""
    dels = e.attributes.get(DEL)
    if dels is not None and any(d.timestamp.clock < M and d.effect > 0 for d in dels):
        return True
    add = e.add_entry
    return add is not None and add.timestamp.clock < M and add.effect <= 0


def _settled(e: Edge, M: int) -> bool:
    return all(v.timestamp.clock < M for _, v in e.entries())


def purge(d: Document, M: Optional[int]) -> PurgeStats:
    """Drop every history entry and edge below the horizon ``M`` that can no
    longer affect the rendered document.

    Edges are removed with their subtrees.  A node of such a subtree that
    still holds an entry at or above ``M`` is only detached; it goes away
    on a later purge once the horizon has passed all of its entries.
    """
    stats = PurgeStats()
    if M is None:
        return stats

    for e in list(d.index.values()):
        if e is not d.root and e.parent is not None and permanently_invisible(e, M):
            d.detach(e)

    reachable = d.reachable()
    for id, e in list(d.index.items()):
        if id in reachable:
            continue
        if e.add_entry is None and not permanently_invisible(e, M):
            continue  # orphan tombstone still waiting for its Add
        if not _settled(e, M):
            continue
        for c in e.children.values():
            c.parent = None
        e.children.clear()
        d.detach(e)
        del d.index[id]
        d.removed.add(id)
        stats.edges += 1
        stats.values += e.value_count()

    for e in d.index.values():
        for name in list(e.attributes):
            if name == ADD:
                continue
            h = e.attributes[name]
            kept = []
            newer_in_effect = False
            for v in h.entries:
                old = v.timestamp.clock < M
                if old and (v.effect <= 0 or newer_in_effect):
                    stats.values += 1
                    continue
                if old and v.effect > 0:
                    newer_in_effect = True
                kept.append(v)
            h.entries[:] = kept
            dead = all(
                v.timestamp.clock < M and (v.effect <= 0 or v.value is None) for v in kept
            )
            if dead and (name != DEL or not kept):
                stats.values += len(kept)
                stats.attributes += 1
                del e.attributes[name]
    return stats
