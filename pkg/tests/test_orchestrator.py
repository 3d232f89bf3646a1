import pytest
from gmpy2 import mpq

from fairslice.cake import WHOLE
from fairslice.errors import BudgetExhausted
from fairslice.orchestrator import (assemble_partial, divide_and_choose,
                                    main, selfridge_conway)
from fairslice.snapshots import Params
from fairslice.valuation import Valuation, random_instance
from fairslice.verify import conservation, is_envy_free, is_proportional

from conftest import make_ctx, step, uniform


def check_complete(alloc, valuations):
    ok, witness = is_envy_free(alloc, valuations)
    assert ok, witness
    assert is_proportional(alloc, valuations)
    assert conservation(alloc)
    assert alloc.residue.is_empty


def test_divide_and_choose_many_seeds():
    for seed in range(200):
        valuations = dict(enumerate(random_instance(2, 3, seed=seed)))
        ctx, _ = make_ctx(valuations)
        alloc = divide_and_choose(ctx, sorted(valuations), WHOLE)
        check_complete(alloc, valuations)


def test_selfridge_conway_many_seeds():
    for seed in range(200):
        valuations = dict(enumerate(random_instance(3, 3, seed=seed)))
        ctx, _ = make_ctx(valuations)
        alloc = selfridge_conway(ctx, sorted(valuations), WHOLE)
        check_complete(alloc, valuations)


def test_main_small_n_dispatch():
    for n in (1, 2, 3):
        valuations = dict(enumerate(random_instance(n, 3, seed=n)))
        ctx, _ = make_ctx(valuations)
        alloc = main(ctx, sorted(valuations), WHOLE)
        check_complete(alloc, valuations)


def test_identical_valuations_single_core_round():
    for n in range(4, 9):
        base = random_instance(1, 3, seed=n)[0]
        valuations = {i: base for i in range(n)}
        ctx, _ = make_ctx(valuations)
        alloc = main(ctx, sorted(valuations), WHOLE)
        check_complete(alloc, valuations)
        assert ctx.stats.core_runs == 1


def test_random_instances_complete():
    for n in (4, 5, 6):
        for seed in range(10):
            valuations = dict(enumerate(random_instance(n, 3, seed=seed)))
            ctx, _ = make_ctx(valuations, budget=10 ** 7)
            alloc = main(ctx, sorted(valuations), WHOLE)
            check_complete(alloc, valuations)


def test_near_identical_budgeted():
    base = random_instance(1, 4, seed=77)[0]
    for seed in range(5):
        valuations = {}
        for i in range(5):
            segs = [(l, r, d + mpq(i * seed, 997)) for l, r, d
                    in base.segments]
            valuations[i] = Valuation(segs)
        ctx, _ = make_ctx(valuations, budget=10 ** 7)
        try:
            alloc = main(ctx, sorted(valuations), WHOLE)
            check_complete(alloc, valuations)
        except BudgetExhausted:
            partial = assemble_partial(ctx, sorted(valuations), WHOLE)
            ok, witness = is_envy_free(partial, valuations)
            assert ok, witness
            assert conservation(partial)


def test_budget_exhaustion_yields_ef_partial():
    valuations = dict(enumerate(random_instance(6, 4, seed=2)))
    ctx, _ = make_ctx(valuations, budget=40)
    with pytest.raises(BudgetExhausted):
        main(ctx, sorted(valuations), WHOLE)
    partial = assemble_partial(ctx, sorted(valuations), WHOLE)
    ok, witness = is_envy_free(partial, valuations)
    assert ok, witness
    assert conservation(partial)


def test_disjoint_support_instance():
    def val(i):
        segs = []
        for j in range(4):
            d = mpq(4) if j == i else mpq(1, 100)
            segs.append((mpq(j, 4), mpq(j + 1, 4), d))
        return Valuation(segs)

    valuations = {i: val(i) for i in range(4)}
    ctx, _ = make_ctx(valuations, budget=10 ** 7)
    alloc = main(ctx, sorted(valuations), WHOLE)
    check_complete(alloc, valuations)


def test_contested_instance():
    def right_heavy(a, b, c, d):
        return Valuation([(mpq(0), mpq(1, 4), mpq(a)),
                          (mpq(1, 4), mpq(1, 2), mpq(b)),
                          (mpq(1, 2), mpq(3, 4), mpq(c)),
                          (mpq(3, 4), mpq(1), mpq(d))])

    valuations = {0: uniform(), 1: right_heavy(1, 2, 4, 8),
                  2: right_heavy(1, 3, 9, 27), 3: right_heavy(1, 4, 16, 64)}
    ctx, _ = make_ctx(valuations, budget=10 ** 7)
    alloc = main(ctx, sorted(valuations), WHOLE)
    check_complete(alloc, valuations)
    assert ctx.stats.phase_checks >= 1


def test_worthless_tail_goes_to_first_agent():
    # everyone concentrates on [0,1/2]; whoever ends up with the
    # worthless rest, the allocation must stay complete and envy-free
    valuations = {i: step(4, 0) for i in range(4)}
    ctx, _ = make_ctx(valuations)
    alloc = main(ctx, sorted(valuations), WHOLE)
    check_complete(alloc, valuations)


def test_explicit_params_respected():
    valuations = dict(enumerate(random_instance(4, 3, seed=9)))
    ctx, _ = make_ctx(valuations, budget=10 ** 7)
    params = Params.adaptive(4, sig_threshold=mpq(1, 1024), working_set=4)
    alloc = main(ctx, sorted(valuations), WHOLE, params)
    check_complete(alloc, valuations)
