import pytest
from gmpy2 import mpq
from hypothesis import given, strategies as st

from fairslice.cake import Interval, Piece, WHOLE, leftmost_prefix
from fairslice.errors import BudgetExhausted, TargetExceedsAvailable
from fairslice.valuation import (QueryCounter, make_oracles,
                                 piece_from_pairs, random_instance)

from conftest import step, uniform


def test_value_additive():
    v = step(1, 3)
    assert v.total == mpq(2)
    assert v.value(WHOLE) == 2
    left = Piece((Interval(mpq(0), mpq(1, 2)),))
    right = Piece((Interval(mpq(1, 2), mpq(1)),))
    assert v.value(left) + v.value(right) == v.total


@given(st.fractions(min_value=0, max_value=1))
def test_cut_point_inverts_value(t):
    v = step(2, 0, 6)
    target = mpq(t) * v.total
    y = v.cut_point(mpq(0), target)
    assert v.value(leftmost_prefix(WHOLE, y)) == target


def test_cut_point_smallest():
    # a zero-density span means many cut points attain the target; the
    # oracle must return the leftmost one
    v = step(2, 0, 2)
    y = v.cut_point(mpq(0), v.total / 2)
    assert y == mpq(1, 3)


def test_cut_point_from_right_largest():
    v = step(2, 0, 2)
    y = v.cut_point_from_right(mpq(1), v.total / 2)
    assert y == mpq(2, 3)


def test_cut_in_piece_multi_interval():
    counter = QueryCounter()
    oracles = make_oracles({0: uniform()}, counter)
    p = piece_from_pairs([(mpq(0), mpq(1, 4)), (mpq(1, 2), mpq(3, 4))])
    x = oracles[0].cut_in_piece(p, mpq(3, 8))
    assert x == mpq(5, 8)
    assert oracles[0].valuation.value(leftmost_prefix(p, x)) == mpq(3, 8)


def test_cut_in_piece_target_too_large():
    counter = QueryCounter()
    oracles = make_oracles({0: uniform()}, counter)
    p = piece_from_pairs([(mpq(0), mpq(1, 4))])
    with pytest.raises(TargetExceedsAvailable):
        oracles[0].cut_in_piece(p, mpq(1, 2))


def test_counter_and_budget():
    counter = QueryCounter(max_queries=3)
    oracles = make_oracles({0: uniform(), 1: uniform()}, counter)
    oracles[0].eval(WHOLE)
    oracles[1].eval(WHOLE)
    oracles[0].cut(mpq(0), mpq(1, 2))
    assert counter.total == 3
    assert counter.cut[0] == 1 and counter.eval[1] == 1
    with pytest.raises(BudgetExhausted):
        oracles[1].eval(WHOLE)


def test_random_instance_deterministic():
    a = random_instance(3, 4, seed=9)
    b = random_instance(3, 4, seed=9)
    assert [v.segments for v in a] == [v.segments for v in b]
    assert all(v.total > 0 for v in a)
