from gmpy2 import mpq

from fairslice.runtime import ProtocolContext
from fairslice.valuation import QueryCounter, Valuation, make_oracles


def make_ctx(valuations, budget=None):
    counter = QueryCounter(max_queries=budget)
    oracles = make_oracles(valuations, counter)
    return ProtocolContext(sorted(valuations), oracles, counter), counter


def uniform(density=1):
    return Valuation([(mpq(0), mpq(1), mpq(density))])


def step(*densities):
    """Piecewise-constant valuation with equal-width segments."""
    k = len(densities)
    return Valuation([(mpq(i, k), mpq(i + 1, k), mpq(d))
                      for i, d in enumerate(densities)])
