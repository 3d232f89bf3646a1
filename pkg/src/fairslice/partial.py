"""Partial allocation protocols built on Core and SubCore.

proportional_ef_partial runs one Core round per agent with rotating
cutters; the merged outcome is envy-free and gives every agent at
least a 1/n fraction of his value for the whole cake.

connected_pieces guarantees every agent a single connected interval
worth at least 1/(3n) of the whole cake to him: each agent in turn
decomposes the residue into pieces of exactly that value, SubCore
allocates n of them among the others, the decomposing agent takes an
unallocated piece, and other agents keep a piece only when it strictly
improves on both the threshold and their current holding.
"""

from gmpy2 import mpq

from .cake import EMPTY, Interval, Piece, piece_subtract, piece_union
from .core import core
from .errors import CannotFormDivisions, SubCoreFailure
from .runtime import zero_benchmark
from .subcore import subcore
from .verify import Allocation, is_envy_free, is_proportional

ZERO = mpq(0)


def proportional_ef_partial(ctx, agents, cake):
    """Envy-free partial allocation with every agent's share worth at
    least V_i(cake)/n to him.  One Core round per agent, skipping
    cutters who value the residue at zero (their value is then fully
    allocated already, so proportionality holds for them)."""
    alloc = Allocation({a: EMPTY for a in agents}, cake, cake)
    residue = cake
    for cutter in agents:
        if residue.is_empty:
            break
        if ctx.oracles[cutter].eval(residue) <= 0:
            continue
        outcome = core(ctx, cutter, agents, residue)
        alloc = alloc.merged(outcome.allocation(origin=cake))
        residue = outcome.leftover
    _check_partial(ctx, alloc)
    return alloc


def _check_partial(ctx, alloc):
    valuations = {a: ctx.oracles[a].valuation for a in alloc.shares}
    ok, witness = is_envy_free(alloc, valuations)
    if not ok:
        raise SubCoreFailure("partial allocation envious: %r" % (witness,))
    if not is_proportional(alloc, valuations):
        raise SubCoreFailure("partial allocation not proportional")


def _decompose(ctx, agent, residue, unit, count):
    """The agent marks, left to right across the residue's connected
    components, pieces worth exactly `unit` to him; returns the first
    `count` such intervals."""
    out = []
    for iv in residue.intervals:
        prev = iv.left
        left_val = ctx.oracles[agent].eval(Piece((iv,)))
        while left_val >= unit and len(out) < count:
            x = ctx.oracles[agent].cut(prev, unit)
            out.append(Interval(prev, min(x, iv.right)))
            prev = x
            left_val -= unit
        if len(out) == count:
            break
    if len(out) < count:
        raise CannotFormDivisions(
            "agent %s formed %d of %d divisions" % (agent, len(out), count))
    return out


def connected_pieces(ctx, agents, cake):
    """Envy-free partial allocation of connected intervals, each worth
    at least 1/(3n) of the whole cake to its holder."""
    n = len(agents)
    holding = {}
    residue = cake
    for i in agents:
        if i in holding:
            continue
        unit = ctx.oracles[i].eval(cake) / (3 * n)
        divisions = _decompose(ctx, i, residue, unit, n)
        pids, margins = [], {}
        for iv in divisions:
            pid, margin = ctx.new_piece(Piece((iv,)), creator=i)
            pids.append(pid)
            margins[pid] = margin
        others = [a for a in agents if a != i]
        benchmarks = {a: zero_benchmark() for a in others}
        result = subcore(ctx, others, pids, benchmarks, margins)
        taken = {pid for pid, _ in result.values()}
        free = sorted(p for p in pids if p not in taken)
        if not free:
            raise SubCoreFailure("no unallocated piece for the divider")
        new_holdings = {i: ctx.geometry[free[0]]}
        for a, (pid, margin) in result.items():
            piece = ctx.remainder(pid, margin)
            value = ctx.oracles[a].eval(piece)
            threshold = ctx.oracles[a].eval(cake) / (3 * n)
            prior = (ctx.oracles[a].eval(holding[a])
                     if a in holding else None)
            # strict improvement on both counts, else the piece goes back
            if value > threshold and (prior is None or value > prior):
                new_holdings[a] = piece
        holding.update(new_holdings)
        allocated = EMPTY
        for piece in holding.values():
            allocated = piece_union(allocated, piece)
        residue = piece_subtract(cake, allocated)
    alloc = Allocation(holding, residue, cake)
    _check_connected(ctx, alloc, n)
    return alloc


def _check_connected(ctx, alloc, n):
    valuations = {a: ctx.oracles[a].valuation for a in alloc.shares}
    ok, witness = is_envy_free(alloc, valuations)
    if not ok:
        raise SubCoreFailure("connected allocation envious: %r" % (witness,))
    for a, share in alloc.shares.items():
        if not share.is_connected():
            raise SubCoreFailure("share of %s is disconnected" % (a,))
        if 3 * n * valuations[a].value(share) < valuations[a].value(
                alloc.origin):
            raise SubCoreFailure("share of %s below 1/(3n)" % (a,))
