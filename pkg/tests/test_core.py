from gmpy2 import mpq

from fairslice.cake import WHOLE, piece_union
from fairslice.core import core, cut_equal_pieces
from fairslice.errors import EmptyResidue
from fairslice.valuation import random_instance
from fairslice.verify import is_envy_free

import pytest

from conftest import make_ctx, step


def test_cut_equal_pieces():
    ctx, _ = make_ctx({0: step(1, 3)})
    pieces = cut_equal_pieces(ctx, 0, WHOLE, 4)
    assert len(pieces) == 4
    total = ctx.oracles[0].valuation.total
    union = None
    for pid, p, _ in pieces:
        assert ctx.oracles[0].valuation.value(p) == total / 4
        union = p if union is None else piece_union(union, p)
    assert union == WHOLE


def test_cut_equal_pieces_empty_residue():
    ctx, _ = make_ctx({0: step(0, 1)})
    from fairslice.valuation import piece_from_pairs
    worthless = piece_from_pairs([(mpq(0), mpq(1, 2))])
    with pytest.raises(EmptyResidue):
        cut_equal_pieces(ctx, 0, worthless, 3)


def test_core_invariants_many_instances():
    for n in range(3, 8):
        for seed in range(20):
            valuations = dict(enumerate(random_instance(n, 3, seed=seed)))
            ctx, _ = make_ctx(valuations)
            outcome = core(ctx, 0, sorted(valuations), WHOLE)
            alloc = outcome.allocation(origin=WHOLE)
            ok, witness = is_envy_free(alloc, valuations)
            assert ok, witness
            # the cutter keeps a full piece, and so does at least one
            # non-cutter
            full_holders = [a for a, (pid, share) in outcome.shares.items()
                            if ctx.geometry[pid] == share]
            assert 0 in full_holders
            assert any(a != 0 for a in full_holders)
            # leftover bound for the cutter, exact
            v0 = valuations[0]
            assert n * v0.value(outcome.leftover) <= \
                (n - 2) * v0.value(WHOLE)


def test_core_counts_queries():
    valuations = dict(enumerate(random_instance(4, 3, seed=1)))
    ctx, counter = make_ctx(valuations)
    core(ctx, 0, sorted(valuations), WHOLE)
    assert counter.total > 0
    assert ctx.stats.core_runs == 1
