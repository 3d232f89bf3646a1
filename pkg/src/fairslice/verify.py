"""Independent certification of allocations.

Everything here reads valuations directly (no query accounting): the
verifier is the auditor, not a protocol participant.  All checks are
exact rational comparisons with zero tolerance.
"""

from itertools import combinations

from gmpy2 import mpq

from .cake import (EMPTY, contains, is_partition, piece_intersect,
                   piece_union)
from .errors import MalformedAssignment, TooManyAgents

ZERO = mpq(0)


class Allocation:
    """shares: agent -> Piece; residue: Piece; origin: the cake divided."""

    def __init__(self, shares, residue, origin):
        self.shares = dict(shares)
        self.residue = residue
        self.origin = origin

    def merged(self, other):
        """Combine with an allocation of (part of) this residue."""
        shares = dict(self.shares)
        for agent, piece in other.shares.items():
            shares[agent] = piece_union(shares.get(agent, EMPTY), piece)
        return Allocation(shares, other.residue, self.origin)


def _value(valuations, agent, piece):
    return valuations[agent].value(piece)


def conservation(alloc):
    parts = list(alloc.shares.values()) + [alloc.residue]
    return is_partition(parts, alloc.origin)


def is_envy_free(alloc, valuations):
    """(ok, witness): witness is an envying (i, j) pair on failure."""
    agents = list(alloc.shares)
    vals = {i: {j: _value(valuations, i, alloc.shares[j]) for j in agents}
            for i in agents}
    for i in agents:
        for j in agents:
            if vals[i][j] > vals[i][i]:
                return False, (i, j)
    return True, None


def is_proportional(alloc, valuations):
    n = len(alloc.shares)
    for i, share in alloc.shares.items():
        total = _value(valuations, i, alloc.origin)
        if n * _value(valuations, i, share) < total:
            return False
    return True


def dominates(alloc, i, j, valuations):
    """i is unenvious of j even if j also got the whole residue."""
    vi = valuations[i]
    return vi.value(alloc.shares[i]) >= (
        vi.value(alloc.shares[j]) + vi.value(alloc.residue))


def is_connected(piece):
    return piece.is_connected()


def is_neat(pieces, assignment, valuations, value_of=None,
            require_unallocated=True):
    """Neatness of a one-piece-per-agent partial allocation.

    pieces: list of (pid, Piece); assignment: agent -> (pid, sub-piece).
    value_of(agent, pid, piece) may supply augmented values; by default
    physical values are compared.  Checks:
      (i)   every share lies inside its single listed piece,
      (ii)  at least one listed piece is fully unallocated,
      (iii) no agent strictly prefers an unallocated piece to his share,
      (iv)  no agent strictly prefers another agent's share to his own.
    """
    if value_of is None:
        def value_of(agent, pid, piece):
            return _value(valuations, agent, piece)
    by_pid = dict(pieces)
    taken = set()
    for agent, (pid, share) in assignment.items():
        if pid not in by_pid or not contains(by_pid[pid], share):
            raise MalformedAssignment(
                "share of %s not inside piece %s" % (agent, pid))
        taken.add(pid)
    unallocated = [pid for pid, _ in pieces if pid not in taken]
    if require_unallocated and not unallocated:
        return False
    for agent, (pid, share) in assignment.items():
        mine = value_of(agent, pid, share)
        for upid in unallocated:
            if value_of(agent, upid, by_pid[upid]) > mine:
                return False
        for other, (opid, oshare) in assignment.items():
            if other != agent and value_of(agent, opid, oshare) > mine:
                return False
    return True


def find_dominated_set(alloc, valuations, max_agents=8):
    """Inclusion-minimal nonempty A strictly inside N with every agent of
    N\\A dominating every agent of A; lexicographically first among the
    minimal candidates; None when no candidate exists.  Exhaustive over
    bipartitions, guarded by max_agents."""
    agents = sorted(alloc.shares)
    n = len(agents)
    if n > max_agents:
        raise TooManyAgents("%d agents exceed the exhaustive guard" % n)
    dom = {(i, j): dominates(alloc, i, j, valuations)
           for i in agents for j in agents if i != j}
    for size in range(1, n):
        for combo in combinations(agents, size):
            a_set = set(combo)
            if all(dom[(i, j)]
                   for i in agents if i not in a_set for j in combo):
                return a_set
    return None


def envy_gap_report(alloc, valuations):
    """Informational: worst envy gap per agent (negative = envious)."""
    out = {}
    for i in alloc.shares:
        mine = _value(valuations, i, alloc.shares[i])
        worst = None
        for j in alloc.shares:
            if j == i:
                continue
            gap = mine - _value(valuations, i, alloc.shares[j])
            if worst is None or gap < worst:
                worst = gap
        out[i] = worst if worst is not None else ZERO
    return out


def assert_disjoint(pieces):
    for a, b in combinations(pieces, 2):
        if not piece_intersect(a, b).is_empty:
            return False
    return True
