"""Deterministic multi-replica harness.

All replicas live in one process and exchange messages over simulated
point-to-point channels.  Concurrency is modelled by choosing which queued
message to deliver next: scripted, seeded-random, or every causally valid
order (for small instances).

Causal delivery is enforced structurally: a message whose prerequisites
(parent Add, target Add, the operation an Undo/Redo refers to) have not
been applied at the receiver is held back.  No vector clocks are involved.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Optional, Sequence, Union

from .engine import (
    Add,
    BaseOp,
    Del,
    Operation,
    Redo,
    ReplicaClock,
    SetAttr,
    Undo,
    deliver,
    entry_for,
)
from .gc import GcState, PurgeStats, purge
from .model import (
    ADD,
    DEL,
    POSITION,
    ROOT_ID,
    TAG,
    TEXT,
    CrdtError,
    Document,
    Edge,
    Position,
    Timestamp,
    generate_position,
    sorted_children,
)
from .render import current, is_visible, render, serialize, visible_node_count


class GenerationRejected(CrdtError):
    """A local edit was not applicable in the replica's current state."""


@dataclass(frozen=True)
class OpMessage:
    op: Operation
    announced: Optional[int] = None


@dataclass(frozen=True)
class Heartbeat:
    ts: Timestamp
    announced: int


Message = Union[OpMessage, Heartbeat]


@dataclass
class Channel:
    src: int
    dst: int
    fifo: bool = True
    queue: deque = field(default_factory=deque)


def _describe(op: Operation) -> str:
    if isinstance(op, Add):
        return f"Add {op.ts} parent={op.parent}"
    if isinstance(op, Del):
        return f"Del {op.ts} target={op.target}"
    if isinstance(op, SetAttr):
        return f"SetAttr {op.ts} target={op.target} {op.attr}={op.value}"
    return f"{op.kind} {op.ts} of {op.undone.kind} {op.undone.ts}"


class Replica:
    def __init__(self, site: int, sites: Sequence[int], mode: str = "undo", k: int = 0):
        self.site = site
        self.mode = mode
        self.clock = ReplicaClock(site)
        self.doc = Document(mode=mode)
        self.gc = GcState.for_sites(site, sites, k)
        self.log: dict[Timestamp, Operation] = {}
        self.local: list[BaseOp] = []
        self.max_seen = Timestamp(0, 0)
        self.clock_violations = 0

    # -- bookkeeping -----------------------------------------------------

    def _seen(self, ts: Timestamp) -> None:
        if ts > self.max_seen:
            self.max_seen = ts

    def next_timestamp(self) -> Timestamp:
        ts = self.clock.tick()
        if not ts > self.max_seen:
            self.clock_violations += 1
        self._seen(ts)
        return ts

    def ready(self, op: Operation) -> bool:
        """Whether the causal prerequisites of ``op`` are applied here."""
        if isinstance(op, Add):
            return op.parent == ROOT_ID or op.parent in self.log
        if isinstance(op, SetAttr):
            return op.target == ROOT_ID or op.target in self.log
        if isinstance(op, Del):
            return self.mode == "undo" or op.target in self.log
        return op.undone.ts in self.log

    def apply(self, op: Operation) -> None:
        if op.ts in self.log:
            raise CrdtError(f"{op.kind} {op.ts} applied twice at site {self.site}")
        deliver(self.doc, op)
        self.log[op.ts] = op

    def receive(self, src: int, msg: Message, gc: bool) -> None:
        ts = msg.op.ts if isinstance(msg, OpMessage) else msg.ts
        self.clock.sync(ts)
        self._seen(ts)
        if isinstance(msg, OpMessage):
            self.apply(msg.op)
        if gc:
            self.gc.observe_operation(src, ts.clock)
            if msg.announced is not None:
                self.gc.receive_minimum(src, msg.announced)

    # -- queries used by generation guards --------------------------------

    def is_live(self, id: Timestamp) -> bool:
        """Edge is attached and it and all its ancestors are visible."""
        e = self.doc.find(id)
        while e is not None:
            if not is_visible(e):
                return False
            if e.identifier == ROOT_ID:
                return True
            e = self.doc.find(e.parent) if e.parent is not None else None
        return False

    def live_edges(self) -> list[Edge]:
        out = []
        stack = [self.doc.root]
        while stack:
            e = stack.pop()
            out.append(e)
            stack.extend(c for c in e.children.values() if is_visible(c))
        out.sort(key=lambda e: e.identifier)
        return out

    def effect(self, op: BaseOp) -> Optional[int]:
        v = entry_for(self.doc, op)
        return None if v is None else v.effect

    def new_position(self, parent: Edge, after: Optional[Timestamp]) -> Position:
        siblings = sorted_children(list(parent.children.values()), lambda x: current(x, POSITION))
        positions = [p for p in (current(c, POSITION) for c in siblings) if p is not None]
        if after is None:
            left = None
        else:
            anchor = parent.children.get(after)
            if anchor is None:
                raise GenerationRejected(f"{after} is not a child of {parent.identifier}")
            left = current(anchor, POSITION)
            if left is None:
                raise GenerationRejected(f"{after} has no position")
        right = next((p for p in positions if left is None or p > left), None)
        return generate_position(left, right, self.site)

    def storage(self) -> int:
        return self.doc.edge_count() + self.doc.value_count()


class Simulation:
    """A set of replicas plus the channels between every ordered pair."""

    def __init__(
        self,
        replicas: int = 2,
        mode: str = "undo",
        k: int = 0,
        fifo: bool = True,
        seed: int = 0,
        trace: bool = True,
    ):
        if replicas < 1:
            raise ValueError("need at least one replica")
        self.sites = tuple(range(1, replicas + 1))
        self.mode = mode
        self.k = k
        self.fifo = fifo
        self.gc_enabled = fifo
        self.rng = random.Random(seed)
        self.replicas = {s: Replica(s, self.sites, mode, k) for s in self.sites}
        self.channels = {
            (a, b): Channel(a, b, fifo) for a in self.sites for b in self.sites if a != b
        }
        self.tracing = trace
        self.trace: list[str] = []
        self.generated = 0
        self.deliveries = 0

    def _log(self, line: str) -> None:
        if self.tracing:
            self.trace.append(line)

    def replica(self, site: int) -> Replica:
        try:
            return self.replicas[site]
        except KeyError:
            raise CrdtError(f"unknown site {site}") from None

    # -- local generation -----------------------------------------------

    def emit(self, site: int, build: Callable[[Timestamp], Operation]) -> Operation:
        """Tick ``site``'s clock, apply the built operation locally, broadcast it."""
        r = self.replica(site)
        op = build(r.next_timestamp())
        r.apply(op)
        if not isinstance(op, (Undo, Redo)):
            r.local.append(op)
        announced = None
        if self.gc_enabled:
            r.gc.observe_operation(site, op.ts.clock)
            announced = r.gc.broadcast_minimum()
        msg = OpMessage(op, announced)
        for dst in self.sites:
            if dst != site:
                self.channels[(site, dst)].queue.append(msg)
        self.generated += 1
        self._log(f"gen {site} {_describe(op)}")
        return op

    def _insert(self, site: int, parent: Timestamp, after: Optional[Timestamp],
                attr: str, value: str) -> Add:
        r = self.replica(site)
        if not r.is_live(parent):
            raise GenerationRejected(f"parent {parent} is not visible at site {site}")
        p = r.doc.find(parent)
        if parent != ROOT_ID and current(p, TEXT) is not None:
            raise GenerationRejected(f"parent {parent} is a text node")
        pos = r.new_position(p, after)
        add = self.emit(site, lambda ts: Add(parent, ts))
        self.emit(site, lambda ts: SetAttr(add.ts, POSITION, pos, ts))
        self.emit(site, lambda ts: SetAttr(add.ts, attr, value, ts))
        return add

    def add_element(self, site: int, parent: Timestamp, after: Optional[Timestamp],
                    tag: str) -> Add:
        return self._insert(site, parent, after, TAG, tag)

    def add_text(self, site: int, parent: Timestamp, after: Optional[Timestamp],
                 value: str) -> Add:
        return self._insert(site, parent, after, TEXT, value)

    def delete(self, site: int, target: Timestamp) -> Del:
        r = self.replica(site)
        if target == ROOT_ID or not r.is_live(target):
            raise GenerationRejected(f"edge {target} is not visible at site {site}")
        return self.emit(site, lambda ts: Del(target, ts))

    def set_attr(self, site: int, target: Timestamp, name: str,
                 value: Union[str, Position, None]) -> SetAttr:
        r = self.replica(site)
        if name in (ADD, DEL):
            raise GenerationRejected(f"{name} cannot be set")
        if not r.is_live(target):
            raise GenerationRejected(f"edge {target} is not visible at site {site}")
        return self.emit(site, lambda ts: SetAttr(target, name, value, ts))

    def move(self, site: int, target: Timestamp, after: Optional[Timestamp]) -> SetAttr:
        r = self.replica(site)
        e = r.doc.find(target)
        if e is None or target == ROOT_ID or not r.is_live(target):
            raise GenerationRejected(f"edge {target} is not visible at site {site}")
        pos = r.new_position(r.doc.find(e.parent), after)
        return self.set_attr(site, target, POSITION, pos)

    def _undo_target(self, site: int, op_ts: Timestamp) -> tuple[Replica, BaseOp, int]:
        r = self.replica(site)
        op = r.log.get(op_ts)
        if op is None or isinstance(op, (Undo, Redo)):
            raise GenerationRejected(f"no undoable operation {op_ts} at site {site}")
        if self.gc_enabled and not r.gc.can_undo(op.ts):
            raise GenerationRejected(f"operation {op_ts} is outside the undo window")
        eff = r.effect(op)
        if eff is None:
            raise GenerationRejected(f"operation {op_ts} no longer tracked at site {site}")
        return r, op, eff

    def undo(self, site: int, op_ts: Timestamp) -> Undo:
        _, op, eff = self._undo_target(site, op_ts)
        if eff <= 0:
            raise GenerationRejected(f"operation {op_ts} has no effect to undo")
        return self.emit(site, lambda ts: Undo(op, ts))

    def redo(self, site: int, op_ts: Timestamp) -> Redo:
        _, op, eff = self._undo_target(site, op_ts)
        if eff > 0:
            raise GenerationRejected(f"operation {op_ts} is already in effect")
        return self.emit(site, lambda ts: Redo(op, ts))

    # -- gc ----------------------------------------------------------------

    def heartbeat(self, site: int) -> None:
        if not self.gc_enabled:
            raise CrdtError("heartbeats need FIFO channels")
        r = self.replica(site)
        ts = r.next_timestamp()
        r.gc.observe_operation(site, ts.clock)
        msg = Heartbeat(ts, r.gc.broadcast_minimum())
        for dst in self.sites:
            if dst != site:
                self.channels[(site, dst)].queue.append(msg)
        self._log(f"heartbeat {site} {ts} min={msg.announced}")

    def purge(self, site: int) -> PurgeStats:
        r = self.replica(site)
        M = r.gc.M if self.gc_enabled else None
        stats = purge(r.doc, M)
        self._log(f"purge {site} M={M} edges={stats.edges} values={stats.values}")
        return stats

    # -- delivery ----------------------------------------------------------

    def _ready(self, r: Replica, msg: Message) -> bool:
        return isinstance(msg, Heartbeat) or r.ready(msg.op)

    def deliver_next(self, dst: int, src: int, rng: Optional[random.Random] = None) -> str:
        """Deliver one message from ``src`` to ``dst``.

        Returns ``"delivered"``, ``"held"`` (nothing deliverable yet) or
        ``"empty"``.  FIFO channels only ever consider the head; otherwise
        the first deliverable message is taken, or a random one if ``rng``
        is given.
        """
        ch = self.channels.get((src, dst))
        if ch is None:
            raise CrdtError(f"no channel from site {src} to site {dst}")
        if not ch.queue:
            return "empty"
        r = self.replica(dst)
        if ch.fifo:
            idx = 0 if self._ready(r, ch.queue[0]) else None
        else:
            ready = [i for i, m in enumerate(ch.queue) if self._ready(r, m)]
            if not ready:
                idx = None
            elif rng is None:
                idx = ready[0]
            else:
                idx = rng.choice(ready)
        if idx is None:
            return "held"
        msg = ch.queue[idx]
        del ch.queue[idx]
        r.receive(src, msg, self.gc_enabled)
        self.deliveries += 1
        if isinstance(msg, OpMessage):
            self._log(f"deliver {dst}<-{src} {_describe(msg.op)}")
        else:
            self._log(f"deliver {dst}<-{src} heartbeat {msg.ts}")
        return "delivered"

    def deliver_from(self, dst: int, src: int, count: Optional[int] = 1) -> int:
        n = 0
        while count is None or n < count:
            if self.deliver_next(dst, src) != "delivered":
                break
            n += 1
        return n

    def pending(self) -> int:
        return sum(len(c.queue) for c in self.channels.values())

    def quiescent(self) -> bool:
        return self.pending() == 0

    def deliver_all(self) -> None:
        while not self.quiescent():
            progress = False
            for (src, dst) in sorted(self.channels):
                if self.deliver_from(dst, src, None):
                    progress = True
            if not progress:
                raise CrdtError("delivery deadlock: queued messages never become deliverable")

    def deliver_random(self) -> bool:
        """Deliver one random deliverable message; False if none is."""
        keys = [key for key, c in self.channels.items() if c.queue]
        self.rng.shuffle(keys)
        for src, dst in keys:
            if self.deliver_next(dst, src, self.rng) == "delivered":
                return True
        return False

    def drain_random(self) -> None:
        while not self.quiescent():
            if not self.deliver_random():
                raise CrdtError("delivery deadlock: queued messages never become deliverable")

    # -- observation ---------------------------------------------------------

    def render(self, site: int) -> bytes:
        return serialize(render(self.replica(site).doc))

    def renders(self) -> dict[int, bytes]:
        return {s: self.render(s) for s in self.sites}

    def converged(self) -> bool:
        return len(set(self.renders().values())) == 1

    def clock_violations(self) -> int:
        return sum(r.clock_violations for r in self.replicas.values())

    def dropped_undo_redo(self) -> int:
        return sum(r.doc.dropped["Undo"] + r.doc.dropped["Redo"] for r in self.replicas.values())

    def exchange_heartbeats(self, rounds: int = 3) -> None:
        """Heartbeat from every site, delivered everywhere, ``rounds`` times."""
        for _ in range(rounds):
            for s in self.sites:
                self.heartbeat(s)
            self.deliver_all()


# ---------------------------------------------------------------------------
# random workloads

DEFAULT_MIX = {"add": 40, "del": 15, "setattr": 25, "undo": 10, "redo": 10}
DELETE_HEAVY_MIX = {"add": 35, "del": 30, "setattr": 15, "undo": 20, "redo": 0}
LWW_MIX = {"add": 45, "del": 15, "setattr": 40}

TAGS = ("a", "b", "c", "item")
ATTRS = ("x", "y")
VALUES = ("1", "2", "3", "v&<\"")


def random_action(sim: Simulation, site: int, mix: dict[str, int], rng: random.Random) -> Operation:
    """Generate one random applicable edit at ``site``."""
    r = sim.replica(site)
    kinds = list(mix)
    kind = rng.choices(kinds, weights=[mix[k] for k in kinds])[0]
    live = r.live_edges()
    elements = [e for e in live if e.identifier == ROOT_ID or current(e, TEXT) is None]
    nonroot = [e for e in live if e.identifier != ROOT_ID]

    if kind == "del" and nonroot:
        return sim.delete(site, rng.choice(nonroot).identifier)

    if kind == "setattr":
        targets = [e for e in elements if e.identifier != ROOT_ID]
        if targets:
            e = rng.choice(targets)
            roll = rng.random()
            if roll < 0.1:
                return sim.set_attr(site, e.identifier, TAG, rng.choice(TAGS))
            if roll < 0.2:
                siblings = sorted(c for c in sim.replica(site).doc.find(e.parent).children
                                  if c != e.identifier)
                after = rng.choice([None] + siblings)
                try:
                    return sim.move(site, e.identifier, after)
                except GenerationRejected:
                    pass
            value = None if rng.random() < 0.15 else rng.choice(VALUES)
            return sim.set_attr(site, e.identifier, rng.choice(ATTRS), value)

    if kind in ("undo", "redo"):
        want_effect = kind == "undo"
        candidates = []
        for op in r.log.values():
            if isinstance(op, (Undo, Redo)):
                continue
            eff = r.effect(op)
            if eff is None or (eff > 0) != want_effect:
                continue
            if sim.gc_enabled and not r.gc.can_undo(op.ts):
                continue
            candidates.append(op.ts)
        if candidates:
            ts = rng.choice(sorted(candidates))
            return sim.undo(site, ts) if want_effect else sim.redo(site, ts)

    parent = rng.choice(elements)
    anchors = [None] + sorted(c for c in parent.children
                              if current(parent.children[c], POSITION) is not None)
    after = rng.choice(anchors)
    if rng.random() < 0.2:
        return sim.add_text(site, parent.identifier, after, rng.choice(VALUES))
    return sim.add_element(site, parent.identifier, after, rng.choice(TAGS))


@dataclass
class FuzzConfig:
    seed: int = 0
    replicas: int = 4
    ops: int = 200
    mode: str = "undo"
    k: int = 0
    fifo: bool = False
    mix: Optional[dict[str, int]] = None
    deliver_ratio: float = 1.5
    heartbeat_prob: float = 0.0
    purge_prob: float = 0.0
    trace: bool = True


@dataclass
class FuzzReport:
    seed: int
    converged: bool
    actions: int
    operations: int
    deliveries: int
    edges: int
    values: int
    visible_nodes: int
    clock_violations: int
    dropped_undo_redo: int
    renders: dict[int, bytes]
    trace: list[str]

    def summary(self) -> str:
        status = "converged" if self.converged else "diverged"
        return (
            f"{status} seed={self.seed} actions={self.actions} ops={self.operations} "
            f"deliveries={self.deliveries} edges={self.edges} values={self.values} "
            f"visible={self.visible_nodes}"
        )


def _mix_for(config: FuzzConfig) -> dict[str, int]:
    if config.mix is not None:
        return config.mix
    return LWW_MIX if config.mode == "lww" else DEFAULT_MIX


def fuzz_steps(sim: Simulation, config: FuzzConfig, actions: int,
               hook: Optional[Callable[[Simulation, int, Operation], None]] = None) -> None:
    """Interleave ``actions`` random edits with random deliveries."""
    rng = sim.rng
    mix = _mix_for(config)
    done = 0
    while done < actions:
        if rng.random() < config.deliver_ratio / (1 + config.deliver_ratio) and sim.deliver_random():
            continue
        site = rng.choice(sim.sites)
        if sim.gc_enabled and rng.random() < config.heartbeat_prob:
            sim.heartbeat(site)
            continue
        if sim.gc_enabled and rng.random() < config.purge_prob:
            sim.purge(site)
            continue
        op = random_action(sim, site, mix, rng)
        done += 1
        if hook is not None:
            hook(sim, site, op)


def make_simulation(config: FuzzConfig) -> Simulation:
    return Simulation(config.replicas, config.mode, config.k, config.fifo, config.seed,
                      trace=config.trace)


def _report(sim: Simulation, config: FuzzConfig, actions: int) -> FuzzReport:
    renders = sim.renders()
    first = sim.replicas[sim.sites[0]]
    return FuzzReport(
        seed=config.seed,
        converged=len(set(renders.values())) == 1,
        actions=actions,
        operations=sim.generated,
        deliveries=sim.deliveries,
        edges=first.doc.edge_count(),
        values=first.doc.value_count(),
        visible_nodes=visible_node_count(render(first.doc)),
        clock_violations=sim.clock_violations(),
        dropped_undo_redo=sim.dropped_undo_redo(),
        renders=renders,
        trace=sim.trace,
    )


def run_fuzz(config: FuzzConfig) -> FuzzReport:
    """Seeded random edits on every replica, random deliveries, then drain."""
    sim = make_simulation(config)
    fuzz_steps(sim, config, config.ops)
    sim.drain_random()
    return _report(sim, config, config.ops)


# ---------------------------------------------------------------------------
# exhaustive orders


def causal_orders(ops: Sequence[Operation], ready: Callable[[set, Operation], bool]
                  ) -> Iterator[tuple[Operation, ...]]:
    """Every ordering of ``ops`` in which each op is ready given those before it."""
    n = len(ops)
    order: list[Operation] = []
    applied: set[Timestamp] = set()
    used = [False] * n

    def walk() -> Iterator[tuple[Operation, ...]]:
        if len(order) == n:
            yield tuple(order)
            return
        for i in range(n):
            if used[i] or not ready(applied, ops[i]):
                continue
            used[i] = True
            order.append(ops[i])
            applied.add(ops[i].ts)
            yield from walk()
            applied.discard(ops[i].ts)
            order.pop()
            used[i] = False

    yield from walk()


def op_ready(mode: str, known: Iterable[Timestamp] = ()) -> Callable[[set, Operation], bool]:
    """Readiness predicate for :func:`causal_orders`; ``known`` ops count as applied."""
    known = set(known) | {ROOT_ID}

    def ready(applied: set, op: Operation) -> bool:
        have = lambda ts: ts in known or ts in applied  # noqa: E731
        if isinstance(op, Add):
            return have(op.parent)
        if isinstance(op, SetAttr):
            return have(op.target)
        if isinstance(op, Del):
            return mode == "undo" or have(op.target)
        return have(op.undone.ts)

    return ready


@dataclass
class PermutationReport:
    orders: int
    distinct_renders: int
    distinct_states: int
    renders: set

    @property
    def converged(self) -> bool:
        return self.distinct_renders == 1 and self.distinct_states == 1


def exhaustive_check(ops: Sequence[Operation], base: Sequence[Operation] = (),
                     mode: str = "undo") -> PermutationReport:
    """Deliver ``ops`` in every causally valid order on top of ``base``."""
    ready = op_ready(mode, (op.ts for op in base))
    renders, states = set(), set()
    count = 0
    for order in causal_orders(ops, ready):
        d = Document(mode=mode)
        for op in base:
            deliver(d, op)
        for op in order:
            deliver(d, op)
        renders.add(serialize(render(d)))
        states.add(d.snapshot())
        count += 1
    return PermutationReport(count, len(renders), len(states), renders)


# ---------------------------------------------------------------------------
# concurrent undos of an add and a delete


@dataclass
class Figure1Report:
    interleavings: int
    effects: dict[int, set]
    renders: set
    failures: list[str]
    canonical_trace: list[str]

    @property
    def ok(self) -> bool:
        return not self.failures


def run_figure1() -> Figure1Report:
    """Replay the three-replica concurrent-undo scenario in every order.

    Replica 2 adds an edge and deletes it, replica 3 undoes the add, and
    replicas 1 and 2 concurrently undo the delete.  Every replica must end
    with the add's effect at 0, the delete's at -1, and the edge hidden.
    """
    sim = Simulation(3, "undo", fifo=False)
    a = sim.emit(2, lambda ts: Add(ROOT_ID, ts))
    sim.deliver_from(1, 2)
    sim.deliver_from(3, 2)
    d = sim.delete(2, a.ts)
    sim.deliver_from(1, 2)
    ua = sim.undo(3, a.ts)
    u1 = sim.undo(1, d.ts)
    u2 = sim.undo(2, d.ts)
    sim.deliver_all()
    ops = {"a": a, "d": d, "ua": ua, "u1": u1, "u2": u2}
    origin = {"a": 2, "d": 2, "ua": 3, "u1": 1, "u2": 2}

    def consistent(site: int, order: Sequence[str]) -> bool:
        pos = {name: i for i, name in enumerate(order)}
        if site == 1 and not (pos["d"] < pos["u1"] < pos["u2"]):
            return False
        if site == 2 and not (pos["a"] < pos["d"] < pos["u2"] < pos["u1"]):
            return False
        if site == 3 and not (pos["a"] < pos["ua"] < pos["d"]):
            return False
        return True

    ready = op_ready("undo")
    failures: list[str] = []
    effects: dict[int, set] = {1: set(), 2: set(), 3: set()}
    renders = set()
    count = 0
    names = list(ops)
    for site in (1, 2, 3):
        for order in causal_orders([ops[n] for n in names], ready):
            labels = [next(n for n in names if ops[n] is op) for op in order]
            if not consistent(site, labels):
                continue
            r = Replica(site, (1, 2, 3))
            for label in labels:
                op = ops[label]
                if origin[label] == site and isinstance(op, Undo):
                    # a local undo is only issued while the target is in effect
                    if (r.effect(op.undone) or 0) <= 0:
                        failures.append(f"site {site} order {labels}: {label} not generatable")
                r.clock.sync(op.ts)
                r.apply(op)
            add_eff = r.effect(a)
            del_eff = r.effect(d)
            xml = serialize(render(r.doc))
            effects[site].add((add_eff, del_eff))
            renders.add(xml)
            count += 1
            if add_eff != 0 or del_eff != -1 or is_visible(r.doc.find(a.ts)) or xml != b"<root/>":
                failures.append(f"site {site} order {labels}: add={add_eff} del={del_eff} {xml!r}")
    for s in sim.sites:
        if sim.replica(s).effect(a) != 0 or sim.replica(s).effect(d) != -1:
            failures.append(f"canonical run site {s} ended with wrong effects")
    return Figure1Report(count, effects, renders, failures, sim.trace)


# ---------------------------------------------------------------------------
# garbage collection scenario


@dataclass
class GcReport:
    seed: int
    M: dict[int, Optional[int]]
    storage_before: dict[int, int]
    storage_after: dict[int, int]
    purged: dict[int, PurgeStats]
    renders_unchanged: bool
    converged_after: bool
    clock_violations: int
    dropped_undo_redo: int
    failures: list[str]

    @property
    def ok(self) -> bool:
        return not self.failures


def settle_and_purge(sim: Simulation) -> tuple[dict, dict, dict, dict, list[str]]:
    """Drain, exchange heartbeats until the horizon is stable, purge everywhere."""
    failures: list[str] = []
    sim.deliver_all()
    sim.exchange_heartbeats(3)
    before = sim.renders()
    storage_before = {s: r.storage() for s, r in sim.replicas.items()}
    stats = {s: sim.purge(s) for s in sim.sites}
    storage_after = {s: r.storage() for s, r in sim.replicas.items()}
    after = sim.renders()
    horizons = {s: r.gc.M for s, r in sim.replicas.items()}
    for s in sim.sites:
        if before[s] != after[s]:
            failures.append(f"site {s}: purge changed the render")
        garbage = stats[s].edges + stats[s].values
        if garbage and not storage_after[s] < storage_before[s]:
            failures.append(f"site {s}: storage did not shrink")
    return horizons, storage_before, storage_after, stats, failures


def run_gc_scenario(config: FuzzConfig, further_ops: int = 100,
                    prelude: Optional[Callable[[Simulation], None]] = None) -> GcReport:
    """Random workload over FIFO channels, then settle, purge and keep editing.

    Checks that purging leaves every render unchanged, shrinks storage when
    there was garbage, and that replicas still converge afterwards.
    """
    if not config.fifo:
        raise ValueError("garbage collection needs FIFO channels")
    sim = make_simulation(config)
    if prelude is not None:
        prelude(sim)
    else:
        fuzz_steps(sim, config, config.ops)
    M, before, after, stats, failures = settle_and_purge(sim)
    if not sim.converged():
        failures.append("replicas diverged before purge")
    renders_unchanged = not any("changed the render" in f for f in failures)
    fuzz_steps(sim, config, further_ops)
    sim.drain_random()
    converged = sim.converged()
    if not converged:
        failures.append("replicas diverged after further edits")
    return GcReport(
        seed=config.seed,
        M=M,
        storage_before=before,
        storage_after=after,
        purged=stats,
        renders_unchanged=renders_unchanged,
        converged_after=converged,
        clock_violations=sim.clock_violations(),
        dropped_undo_redo=sim.dropped_undo_redo(),
        failures=failures,
    )


__all__ = [
    "Channel",
    "FuzzConfig",
    "FuzzReport",
    "GenerationRejected",
    "Heartbeat",
    "OpMessage",
    "Replica",
    "Simulation",
    "causal_orders",
    "exhaustive_check",
    "run_figure1",
    "run_fuzz",
    "run_gc_scenario",
]
