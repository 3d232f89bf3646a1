from gmpy2 import mpq
from hypothesis import given, strategies as st

from fairslice.cake import (EMPTY, WHOLE, Interval, Piece, contains,
                            format_piece, is_partition, leftmost_prefix,
                            normalize, piece_intersect, piece_subtract,
                            piece_union, rat, suffix_from)

coords = st.fractions(min_value=0, max_value=1)


def piece_strategy():
    def build(pairs):
        return normalize([Interval(mpq(min(a, b)), mpq(max(a, b)))
                          for a, b in pairs if a != b])
    return st.lists(st.tuples(coords, coords), max_size=4).map(build)


def test_rat():
    assert rat(1, 3) == mpq(1, 3)
    assert rat("2/7") == mpq(2, 7)


def test_normalize_merges_and_sorts():
    p = normalize([Interval(mpq(1, 2), mpq(3, 4)),
                   Interval(mpq(0), mpq(1, 2))])
    assert p == Piece((Interval(mpq(0), mpq(3, 4)),))
    assert p.is_connected


def test_empty_and_whole():
    assert EMPTY.is_empty
    assert WHOLE.measure() == 1
    assert piece_union(EMPTY, WHOLE) == WHOLE
    assert piece_subtract(WHOLE, WHOLE) == EMPTY


@given(piece_strategy(), piece_strategy())
def test_union_subtract_partition(a, b):
    u = piece_union(a, b)
    only_a = piece_subtract(a, b)
    both = piece_intersect(a, b)
    only_b = piece_subtract(b, a)
    assert u.measure() == only_a.measure() + both.measure() + only_b.measure()
    assert piece_union(piece_union(only_a, both), only_b) == u


@given(piece_strategy(), piece_strategy())
def test_subtract_disjoint_from_remainder(a, b):
    assert piece_intersect(piece_subtract(a, b), b).is_empty


@given(piece_strategy(), coords)
def test_prefix_suffix_split(p, x):
    if p.is_empty:
        return
    lo, hi = p.span()
    x = min(max(mpq(x), lo), hi)
    pre = leftmost_prefix(p, x)
    suf = suffix_from(p, x)
    assert piece_union(pre, suf) == p
    assert pre.measure() + suf.measure() == p.measure()
    assert contains(p, pre) and contains(p, suf)


def test_is_partition():
    half = Piece((Interval(mpq(0), mpq(1, 2)),))
    rest = Piece((Interval(mpq(1, 2), mpq(1)),))
    assert is_partition([half, rest], WHOLE)
    assert not is_partition([half, half], WHOLE)
    assert not is_partition([half], WHOLE)


def test_format_piece():
    assert format_piece(EMPTY) == "empty"
    p = normalize([Interval(mpq(0), mpq(1, 3)),
                   Interval(mpq(1, 2), mpq(1))])
    assert format_piece(p) == "[0,1/3];[1/2,1]"
