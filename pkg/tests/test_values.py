import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pebc import values as V

syms = st.sampled_from(["a", "b", "down", "up", "open", "closed", "emp", "ok"])
scalars = st.one_of(syms, st.booleans().map(V.as_bool), st.integers(-50, 50))
pairs = st.tuples(scalars, scalars).map(lambda t: V.make_pair(*t))
flat_sets = st.one_of(
    st.lists(scalars, max_size=5).map(V.canonical_set), st.lists(pairs, max_size=5).map(V.canonical_set)
)
values = st.one_of(scalars, pairs, flat_sets)


def sign(x):
    return (x > 0) - (x < 0)


def test_cross_kind_order():
    assert V.compare_values("open", V.FALSE) < 0
    assert V.compare_values(V.TRUE, 0) < 0
    assert V.compare_values(3, 3) == 0
    assert V.compare_values(V.FALSE, V.TRUE) < 0
    assert V.compare_values(V.make_pair(1, 2), V.EMPTY) < 0


def test_canonical_set_examples():
    assert V.canonical_set([2, 1, 2]).elems == (1, 2)
    assert V.canonical_set([]).elems == ()
    assert V.canonical_set(["up", "down"]).elems == ("down", "up")


def test_mixed_set_rejected():
    with pytest.raises(V.KindMismatch):
        V.canonical_set([1, V.make_pair(1, 2)])


def test_set_order_is_lexicographic_on_elements():
    a, b, c = V.canonical_set([1]), V.canonical_set([1, 2]), V.canonical_set([2])
    assert V.compare_values(a, b) < 0 < V.compare_values(c, b)


@settings(max_examples=500)
@given(values, values)
def test_order_antisymmetric(a, b):
    assert sign(V.compare_values(a, b)) == -sign(V.compare_values(b, a))
    assert (V.compare_values(a, b) == 0) == (a == b)


@settings(max_examples=500)
@given(values, values, values)
def test_order_transitive(a, b, c):
    if V.compare_values(a, b) <= 0 and V.compare_values(b, c) <= 0:
        assert V.compare_values(a, c) <= 0


@given(st.lists(scalars, max_size=8), st.randoms())
def test_canonical_set_idempotent_and_permutation_invariant(xs, rnd):
    s = V.canonical_set(xs)
    assert V.canonical_set(s.elems) == s
    ys = list(xs)
    rnd.shuffle(ys)
    assert V.canonical_set(ys) == s
    assert all(V.compare_values(a, b) < 0 for a, b in zip(s.elems, s.elems[1:]))


def test_integer_overflow_is_an_error():
    with pytest.raises(V.IntegerOverflow):
        V.check_int(V.INT_MAX + 1)


@given(values)
def test_json_round_trip(v):
    assert V.value_from_json(V.value_to_json(v)) == v
