import pytest
from gmpy2 import mpq

from fairslice.bruteforce import dominated_set_naive
from fairslice.cake import EMPTY, WHOLE, Interval, Piece
from fairslice.errors import TooManyAgents
from fairslice.valuation import piece_from_pairs, random_instance
from fairslice.verify import (Allocation, conservation, dominates,
                              find_dominated_set, is_envy_free, is_neat,
                              is_proportional)

from conftest import step, uniform


def halves():
    return (piece_from_pairs([(mpq(0), mpq(1, 2))]),
            piece_from_pairs([(mpq(1, 2), mpq(1))]))


def test_envy_free_and_proportional():
    left, right = halves()
    vals = {0: step(2, 0), 1: step(0, 2)}
    alloc = Allocation({0: left, 1: right}, EMPTY, WHOLE)
    ok, witness = is_envy_free(alloc, vals)
    assert ok and witness is None
    assert is_proportional(alloc, vals)
    assert conservation(alloc)


def test_envy_witness():
    left, right = halves()
    vals = {0: step(2, 0), 1: step(0, 2)}
    alloc = Allocation({0: right, 1: left}, EMPTY, WHOLE)
    ok, witness = is_envy_free(alloc, vals)
    assert not ok and witness == (0, 1)


def test_conservation_rejects_overlap_and_loss():
    left, right = halves()
    assert not conservation(Allocation({0: left, 1: left}, EMPTY, WHOLE))
    assert not conservation(Allocation({0: left}, EMPTY, WHOLE))


def test_dominates():
    left, right = halves()
    vals = {0: uniform(), 1: uniform()}
    alloc = Allocation({0: left, 1: right}, EMPTY, WHOLE)
    assert dominates(alloc, 0, 1, vals)
    quarter = piece_from_pairs([(mpq(0), mpq(1, 4))])
    rest = piece_from_pairs([(mpq(1, 4), mpq(1, 2))])
    alloc2 = Allocation({0: quarter, 1: rest},
                        piece_from_pairs([(mpq(1, 2), mpq(1))]), WHOLE)
    assert not dominates(alloc2, 0, 1, vals)


def test_find_dominated_set_matches_naive():
    for seed in range(25):
        n = 3 + seed % 3
        vals = dict(enumerate(random_instance(n, 3, seed=seed)))
        cuts = [mpq(j, 2 * n) for j in range(n + 1)]
        shares = {a: piece_from_pairs([(cuts[a], cuts[a + 1])])
                  for a in range(n)}
        residue = piece_from_pairs([(mpq(1, 2), mpq(1))])
        alloc = Allocation(shares, residue, WHOLE)
        assert find_dominated_set(alloc, vals) == \
            dominated_set_naive(shares, residue, vals)


def test_find_dominated_set_guard():
    vals = {i: uniform() for i in range(9)}
    shares = {i: EMPTY for i in range(9)}
    alloc = Allocation(shares, WHOLE, WHOLE)
    with pytest.raises(TooManyAgents):
        find_dominated_set(alloc, vals)


def test_is_neat_clauses():
    pieces = [(j, Piece((Interval(mpq(j, 3), mpq(j + 1, 3)),)))
              for j in range(3)]
    vals = {0: uniform(), 1: uniform()}
    by_pid = dict(pieces)
    good = {0: (0, by_pid[0]), 1: (1, by_pid[1])}
    assert is_neat(pieces, good, vals)
    # no unallocated piece left
    vals3 = {0: uniform(), 1: uniform(), 2: uniform()}
    full = {0: (0, by_pid[0]), 1: (1, by_pid[1]), 2: (2, by_pid[2])}
    assert not is_neat(pieces, full, vals3)
    # a trimmed share loses to the unallocated piece
    trimmed = {0: (0, piece_from_pairs([(mpq(0), mpq(1, 6))])),
               1: (1, by_pid[1])}
    assert not is_neat(pieces, trimmed, vals)
