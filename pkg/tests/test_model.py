import random

import pytest
from hypothesis import given, settings, strategies as st

from xmlcrdt.engine import Add, Del, deliver
from xmlcrdt.model import (
    DIGIT_BASE,
    ROOT_ID,
    AttrValue,
    Document,
    DuplicateDelivery,
    InvalidBoundary,
    Position,
    Timestamp,
    ValueHistory,
    add_value,
    compare_timestamps,
    find,
    find_father,
    generate_position,
    get_value,
)

T = Timestamp


def test_compare_examples():
    assert compare_timestamps(T(3, 2), T(3, 2)) == 0
    assert compare_timestamps(T(3, 2), T(3, 1)) == 1
    assert compare_timestamps(T(2, 9), T(3, 1)) == -1


def _encoded(ts):
    # independent route: sites are bounded, so clock * 2**20 + site is order-preserving
    return ts.clock * (1 << 20) + ts.site


def test_timestamp_order_against_integer_encoding():
    rng = random.Random(7)
    stamps = [T(rng.randrange(6), rng.randrange(6)) for _ in range(60)]
    pairs = [(rng.choice(stamps), rng.choice(stamps)) for _ in range(1000)]
    for a, b in pairs:
        c = compare_timestamps(a, b)
        assert [a < b, a == b, a > b].count(True) == 1
        assert c == (_encoded(a) > _encoded(b)) - (_encoded(a) < _encoded(b))
        assert compare_timestamps(b, a) == -c
    for _ in range(1000):
        a, b, c = (rng.choice(stamps) for _ in range(3))
        if compare_timestamps(a, b) < 0 and compare_timestamps(b, c) < 0:
            assert compare_timestamps(a, c) < 0


def test_distinct_sites_never_equal():
    assert T(4, 1) != T(4, 2)


def _clocks(h):
    return [v.timestamp for v in h]


def test_add_value_examples():
    h = ValueHistory([AttrValue("a", T(7, 1)), AttrValue("b", T(3, 2))])
    add_value(h, AttrValue("c", T(5, 1)))
    assert _clocks(h) == [T(7, 1), T(5, 1), T(3, 2)]

    h = add_value(ValueHistory(), AttrValue("x", T(9, 2)))
    assert _clocks(h) == [T(9, 2)]

    with pytest.raises(DuplicateDelivery):
        add_value(ValueHistory([AttrValue("a", T(7, 1))]), AttrValue("z", T(7, 1)))


def test_get_value_examples():
    h = ValueHistory([AttrValue("a", T(7, 1)), AttrValue("b", T(3, 2))])
    assert get_value(h, T(7, 1)).value == "a"
    assert get_value(h, T(4, 4)) is None
    assert get_value(ValueHistory(), T(3, 2)) is None


@given(st.lists(st.tuples(st.integers(0, 50), st.integers(0, 5)), unique=True, max_size=40))
def test_history_round_trip_and_order(stamps):
    h = ValueHistory()
    for clock, site in stamps:
        add_value(h, AttrValue(f"{clock}/{site}", T(clock, site)))
    assert _clocks(h) == sorted((T(*s) for s in stamps), reverse=True)
    for clock, site in stamps:
        assert get_value(h, T(clock, site)).value == f"{clock}/{site}"


def test_find_examples():
    d = Document()
    assert find(d, ROOT_ID) is d.root
    assert find(d, T(5, 5)) is None
    deliver(d, Del(T(1, 1), T(2, 2)))
    orphan = find(d, T(1, 1))
    assert orphan is not None and orphan.parent is None


def test_find_father_examples():
    d = Document()
    deliver(d, Add(ROOT_ID, T(1, 1)))
    assert find_father(d, T(1, 1)) is d.root
    assert find_father(d, ROOT_ID) is None
    deliver(d, Del(T(9, 1), T(10, 2)))
    assert find_father(d, T(9, 1)) is None


@given(st.lists(st.tuples(st.integers(1, 9), st.integers(1, 9)), min_size=1, max_size=10).map(
    lambda xs: [Add(ROOT_ID, T(c, s)) for c, s in dict.fromkeys(xs)]))
def test_find_every_delivered_edge(adds):
    d = Document()
    for op in adds:
        deliver(d, op)
    for op in adds:
        assert find(d, op.ts).identifier == op.ts
        assert find_father(d, op.ts) is d.root


# -- positions ---------------------------------------------------------------

def P(*pairs):
    return Position(tuple(pairs))


def test_position_examples():
    assert generate_position(None, None, 1) == P((DIGIT_BASE // 2, 1))
    assert generate_position(None, None, 1) == P((32768, 1))
    assert generate_position(P((1, 1)), P((2, 1)), 3) == P((1, 1), (32768, 3))
    a = generate_position(P((1, 1)), P((5, 1)), 1)
    b = generate_position(P((1, 1)), P((5, 1)), 2)
    assert a != b
    for p in (a, b):
        assert P((1, 1)) < p < P((5, 1))


def test_position_invalid_boundaries():
    with pytest.raises(InvalidBoundary):
        generate_position(P((5, 1)), P((5, 1)), 1)
    with pytest.raises(InvalidBoundary):
        generate_position(P((6, 1)), P((5, 1)), 1)


def test_position_ordering_is_lexicographic():
    assert P((1, 1)) < P((1, 1), (0, 0))
    assert P((1, 1), (9, 9)) < P((1, 2))
    assert P((1, 2)) < P((2, 0))


def test_position_tight_neighbours():
    cases = [
        (P((1, 1)), P((1, 1), (1, 2))),
        (P((1, 1)), P((1, 1), (0, 3), (5, 3))),
        (P((4, 1)), P((4, 2))),
        (P((DIGIT_BASE - 1, 1)), None),
        (None, P((1, 1))),
        (P((3, 1), (DIGIT_BASE - 1, 2)), P((4, 1))),
    ]
    for left, right in cases:
        p = generate_position(left, right, 7)
        assert left is None or left < p
        assert right is None or p < right
        assert p.path[-1][1] == 7


def test_position_chain_of_100_is_dense():
    rng = random.Random(3)
    seq = []
    for i in range(100):
        slot = rng.randrange(len(seq) + 1)
        left = seq[slot - 1] if slot > 0 else None
        right = seq[slot] if slot < len(seq) else None
        p = generate_position(left, right, rng.randrange(1, 4))
        seq.insert(slot, p)
    assert len(set(seq)) == 100
    assert seq == sorted(seq)


@settings(max_examples=200)
@given(st.lists(st.tuples(st.integers(0, 10_000), st.integers(1, 3)), min_size=1, max_size=60))
def test_position_insertion_property(moves):
    seq = []
    for raw, site in moves:
        slot = raw % (len(seq) + 1)
        left = seq[slot - 1] if slot > 0 else None
        right = seq[slot] if slot < len(seq) else None
        p = generate_position(left, right, site)
        assert (left is None or left < p) and (right is None or p < right)
        seq.insert(slot, p)
    assert seq == sorted(seq)
