import copy

import pytest
from hypothesis import given, settings, strategies as st

from xmlcrdt.engine import Add, Del, SetAttr, deliver
from xmlcrdt.gc import FifoViolation, GcState, can_undo, purge
from xmlcrdt.model import POSITION, ROOT_ID, TAG, AttrValue, Document, Position, Timestamp
from xmlcrdt.render import render, serialize
from xmlcrdt.simulator import FuzzConfig, fuzz_steps, make_simulation

T = Timestamp


def state(site=1, sites=(1, 2), k=0, v=None, V=None):
    g = GcState.for_sites(site, sites, k)
    g.v.update(v or {})
    g.V.update(V or {})
    return g


def test_observe_operation_examples():
    g = state(v={1: 5, 2: 3})
    g.observe_operation(2, 7)
    assert g.v == {1: 5, 2: 7}
    g.observe_operation(1, 6)
    assert g.v[1] == 6
    with pytest.raises(FifoViolation):
        state(v={1: 5, 2: 3}).observe_operation(2, 2)


def test_broadcast_minimum_examples():
    assert state(sites=(1, 2, 3), v={1: 5, 2: 3, 3: 9}).broadcast_minimum() == 3
    g = state(sites=(1, 2, 3), k=2, v={1: 5, 2: 3, 3: 9})
    assert g.broadcast_minimum() == 1
    assert g.V[1] == 1
    assert state(sites=(1,), v={1: 5}).broadcast_minimum() == 5


def test_receive_minimum_examples():
    g = state(V={1: 2, 2: 1})
    g.receive_minimum(2, 4)
    assert g.V == {1: 2, 2: 4} and g.M == 2
    g = state(sites=(1, 2, 3), V={1: 7, 2: 7, 3: 7})
    assert g.M == 7
    with pytest.raises(FifoViolation):
        state(V={1: 2, 2: 4}).receive_minimum(2, 3)


def test_missing_minimum_disables_purge():
    g = state(sites=(1, 2, 3), V={1: 9, 2: 9})
    assert g.M is None
    d = Document()
    deliver(d, Add(ROOT_ID, T(1, 1)))
    deliver(d, Del(T(1, 1), T(2, 1)))
    before = d.snapshot()
    stats = purge(d, g.M)
    assert (stats.edges, stats.values) == (0, 0)
    assert d.snapshot() == before


def test_can_undo_examples():
    assert can_undo(state(sites=(1,), k=3, v={1: 10}), T(8, 1))
    assert not can_undo(state(sites=(1,), v={1: 10}), T(10, 1))
    assert can_undo(state(sites=(1,), v={1: 10}), T(11, 1))


def test_k_must_be_non_negative():
    with pytest.raises(ValueError):
        GcState.for_sites(1, (1,), -1)


# -- purge rules -------------------------------------------------------------

def _doc_with_element(tag="a"):
    d = Document()
    e = T(1, 1)
    deliver(d, Add(ROOT_ID, e))
    deliver(d, SetAttr(e, POSITION, Position(((5, 1),)), T(1, 2)))
    deliver(d, SetAttr(e, TAG, tag, T(1, 3)))
    return d, d.find(e)


def test_rule1_removes_undone_old_value():
    d, e = _doc_with_element()
    e.history("x").add(AttrValue("v", T(4, 1), 1))
    e.history("x").add(AttrValue(None, T(3, 1), 0))
    purge(d, 5)
    assert [v.timestamp for v in e.attributes["x"]] == [T(4, 1)]


def test_rule2_removes_shadowed_value():
    d, e = _doc_with_element()
    e.history("x").add(AttrValue("b", T(4, 2), 1))
    e.history("x").add(AttrValue("a", T(2, 1), 1))
    before = serialize(render(d))
    purge(d, 5)
    assert [v.value for v in e.attributes["x"]] == ["b"]
    assert serialize(render(d)) == before == b'<root><a x="b"/></root>'


def test_rule2_keeps_value_when_newer_is_not_settled():
    d, e = _doc_with_element()
    e.history("x").add(AttrValue("b", T(6, 2), 1))
    e.history("x").add(AttrValue("a", T(2, 1), 1))
    purge(d, 5)
    assert [v.value for v in e.attributes["x"]] == ["b", "a"]


def test_rule3_removes_dead_attribute():
    d, e = _doc_with_element()
    e.history("x").add(AttrValue(None, T(4, 2), 1))
    e.history("x").add(AttrValue("a", T(2, 1), 0))
    e.history("y").add(AttrValue("kept", T(4, 1), 1))
    stats = purge(d, 5)
    assert "x" not in e.attributes and "y" in e.attributes
    assert stats.attributes == 1


def test_rule4_removes_deleted_subtree():
    d, e = _doc_with_element()
    deliver(d, Add(e.identifier, T(1, 4)))
    deliver(d, SetAttr(T(1, 4), TAG, "child", T(1, 5)))
    deliver(d, Del(e.identifier, T(2, 1)))
    before = serialize(render(d))
    stats = purge(d, 5)
    assert stats.edges == 2
    assert set(d.index) == {ROOT_ID}
    assert serialize(render(d)) == before == b"<root/>"
    assert {e.identifier, T(1, 4)} <= d.removed


def test_rule4_undone_add():
    d, e = _doc_with_element()
    e.add_entry.effect = 0
    purge(d, 5)
    assert d.find(e.identifier) is None


def test_rule4_keeps_descendant_with_unsettled_entries():
    d, e = _doc_with_element()
    deliver(d, Add(e.identifier, T(7, 2)))
    deliver(d, Del(e.identifier, T(2, 1)))
    purge(d, 5)
    assert d.find(e.identifier) is None
    child = d.find(T(7, 2))
    assert child is not None and child.parent is None
    purge(d, 8)
    assert d.find(T(7, 2)) is None


def test_orphan_tombstone_waits_for_add():
    d = Document()
    deliver(d, Del(T(9, 1), T(10, 2)))
    purge(d, 5)
    assert d.find(T(9, 1)) is not None


def test_operations_on_purged_edge_are_dropped():
    d, e = _doc_with_element()
    deliver(d, Del(e.identifier, T(2, 1)))
    purge(d, 5)
    deliver(d, SetAttr(e.identifier, "x", "1", T(9, 2)))
    deliver(d, Add(e.identifier, T(9, 3)))
    deliver(d, SetAttr(T(9, 3), "x", "1", T(10, 3)))
    assert d.dropped["SetAttr"] == 2 and d.dropped["Add"] == 1
    assert serialize(render(d)) == b"<root/>"


# -- properties over reachable states ----------------------------------------

def _entries(d):
    return {(id, name, v.timestamp) for id, e in d.index.items() for name, v in e.entries()}


def _states(seed, mode="undo"):
    cfg = FuzzConfig(seed=seed, replicas=3, ops=60, mode=mode, fifo=True, trace=False)
    sim = make_simulation(cfg)
    fuzz_steps(sim, cfg, cfg.ops)
    return sim


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(0, 300), st.sampled_from(["undo", "lww"]))
def test_purge_preserves_render_and_is_safe(seed, M, mode):
    sim = _states(seed, mode)
    for r in sim.replicas.values():
        d = copy.deepcopy(r.doc)
        before_xml = serialize(render(d))
        before = _entries(d)
        purge(d, M)
        assert serialize(render(d)) == before_xml
        after = _entries(d)
        assert after <= before
        assert {x for x in before if x[2].clock >= M} <= after
        again = d.snapshot()
        stats = purge(d, M)
        assert (stats.edges, stats.values) == (0, 0)
        assert d.snapshot() == again


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000))
def test_common_horizon_preserves_structural_equality(seed):
    sim = _states(seed)
    sim.deliver_all()
    snaps = {r.doc.snapshot() for r in sim.replicas.values()}
    assert len(snaps) == 1
    M = max(r.clock.clock for r in sim.replicas.values()) // 2
    for r in sim.replicas.values():
        purge(r.doc, M)
    assert len({r.doc.snapshot() for r in sim.replicas.values()}) == 1
