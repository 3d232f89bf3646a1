from fairslice.cake import WHOLE
from fairslice.partial import connected_pieces, proportional_ef_partial
from fairslice.valuation import random_instance
from fairslice.verify import conservation, is_connected, is_envy_free

from conftest import make_ctx


def test_proportional_ef_partial():
    for n in range(2, 8):
        for seed in range(15):
            valuations = dict(enumerate(random_instance(n, 3, seed=seed)))
            ctx, counter = make_ctx(valuations)
            alloc = proportional_ef_partial(ctx, sorted(valuations), WHOLE)
            ok, witness = is_envy_free(alloc, valuations)
            assert ok, witness
            assert conservation(alloc)
            for a, v in valuations.items():
                assert v.value(alloc.shares[a]) >= v.total / n
            assert counter.total <= n * n ** 3 * (n * n) ** n


def test_connected_pieces():
    for n in range(1, 9):
        for seed in range(10):
            valuations = dict(enumerate(random_instance(n, 3, seed=seed)))
            ctx, _ = make_ctx(valuations)
            alloc = connected_pieces(ctx, sorted(valuations), WHOLE)
            ok, witness = is_envy_free(alloc, valuations)
            assert ok, witness
            assert conservation(alloc)
            for a, v in valuations.items():
                assert is_connected(alloc.shares[a])
                assert v.value(alloc.shares[a]) >= v.total / (3 * n)
