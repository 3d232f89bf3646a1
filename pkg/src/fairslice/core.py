"""The Core protocol: a designated cutter divides the residue into n
equally preferred pieces, SubCore allocates to everyone else with zero
benchmarks, and the cutter takes an untouched piece.  The outcome is an
envy-free partial allocation in which the cutter and at least one other
agent receive full pieces.
"""

from gmpy2 import mpq

from .cake import EMPTY, leftmost_prefix, piece_subtract, piece_union
from .errors import EmptyResidue, SubCoreFailure
from .runtime import zero_benchmark
from .subcore import subcore
from .verify import Allocation, is_envy_free

ZERO = mpq(0)


class CoreOutcome:
    def __init__(self, cutter, cut_pieces, shares, leftover, residue_before):
        self.cutter = cutter
        self.cut_pieces = cut_pieces          # list of (pid, Piece)
        self.shares = shares                  # agent -> (pid, Piece)
        self.leftover = leftover
        self.residue_before = residue_before

    def allocation(self, origin=None):
        return Allocation({a: s for a, (_, s) in self.shares.items()},
                          self.leftover,
                          origin if origin is not None else self.residue_before)


def cut_equal_pieces(ctx, cutter, residue, n):
    """The cutter slices the residue into n pieces of equal value to
    him, cutting along the residue's own geometry."""
    total = ctx.oracles[cutter].eval(residue)
    if total <= 0:
        raise EmptyResidue("cutter values the residue at zero")
    pieces = []
    prev = leftmost_prefix(residue, residue.span()[0])
    for k in range(1, n):
        x = ctx.oracles[cutter].cut_in_piece(residue, total * k / n)
        pref = leftmost_prefix(residue, x)
        pieces.append(piece_subtract(pref, prev))
        prev = pref
    pieces.append(piece_subtract(residue, prev))
    out = []
    for piece in pieces:
        pid, margin = ctx.new_piece(piece, creator=cutter)
        out.append((pid, piece, margin))
    return out


def core(ctx, cutter, agents, residue):
    """One Core run.  Raises EmptyResidue when the cutter has no value
    left to divide."""
    n = len(agents)
    ctx.stats.core_runs += 1
    cuts = cut_equal_pieces(ctx, cutter, residue, n)
    pids = [pid for pid, _, _ in cuts]
    margins = {pid: margin for pid, _, margin in cuts}
    geometry = {pid: piece for pid, piece, _ in cuts}
    others = [a for a in agents if a != cutter]
    if others:
        benchmarks = {a: zero_benchmark() for a in others}
        alloc = subcore(ctx, others, pids, benchmarks, margins)
    else:
        alloc = {}
    # unallocated pieces keep their creation margins: contests only move
    # the margins of pieces they allocate, so any free piece is whole
    taken = {pid for (pid, _) in alloc.values()}
    full_free = [pid for pid in pids if pid not in taken]
    if not full_free:
        raise SubCoreFailure("no unallocated piece left for the cutter")
    cutter_pid = min(full_free)
    shares = {}
    for agent, (pid, margin) in alloc.items():
        shares[agent] = (pid, ctx.remainder(pid, margin))
    shares[cutter] = (cutter_pid, geometry[cutter_pid])
    allocated = EMPTY
    for _, share in shares.values():
        allocated = piece_union(allocated, share)
    leftover = piece_subtract(residue, allocated)
    outcome = CoreOutcome(cutter, [(p, geometry[p]) for p in pids],
                          shares, leftover, residue)
    _check_core_invariants(ctx, outcome, n)
    return outcome


def _check_core_invariants(ctx, outcome, n):
    valuations = {a: ctx.oracles[a].valuation for a in ctx.oracles}
    alloc = outcome.allocation()
    sub = {a: valuations[a] for a in alloc.shares}
    ok, witness = is_envy_free(alloc, sub)
    if not ok:
        raise SubCoreFailure("core outcome not envy-free: %r" % (witness,))
    vc = valuations[outcome.cutter]
    if n >= 2 and n * vc.value(outcome.leftover) > (n - 2) * vc.value(
            outcome.residue_before):
        raise SubCoreFailure("core leftover exceeds (n-2)/n of the residue")


def cutter_advantage(outcome, valuations):
    """(victim, margin): the non-cutter share the cutter values least,
    and the cutter's bonus over it."""
    vc = valuations[outcome.cutter]
    own = vc.value(outcome.shares[outcome.cutter][1])
    victim, worst = None, None
    for agent, (_, share) in outcome.shares.items():
        if agent == outcome.cutter:
            continue
        v = vc.value(share)
        if worst is None or v < worst:
            victim, worst = agent, v
    if victim is None:
        return None, ZERO
    return victim, own - worst
