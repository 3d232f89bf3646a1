"""Independent exhaustive checkers used only by the test suite.

Nothing here shares code with the protocol implementations: existence
of a neat benchmark-meeting allocation is decided by enumerating every
assignment of agents to pieces and solving exact linear feasibility
over the trim coordinates, and cycle structure of exchange graphs is
recovered by plain depth-first search.  Slow by design; use only on
tiny instances.
"""

from itertools import permutations, product

from gmpy2 import mpq

from .cake import suffix_from

ZERO = mpq(0)


# exact linear feasibility ---------------------------------------------------

def fm_feasible(constraints, nvars):
    """Feasibility of a system of linear inequalities over the rationals.

    constraints: list of (coeffs, const) meaning sum(c*x) <= const with
    len(coeffs) == nvars.  Decided by Fourier-Motzkin elimination, which
    is exact and complete for non-strict inequalities.
    """
    rows = [(list(c), mpq(b)) for c, b in constraints]
    for v in range(nvars):
        pos, neg, rest = [], [], []
        for c, b in rows:
            if c[v] > 0:
                pos.append((c, b))
            elif c[v] < 0:
                neg.append((c, b))
            else:
                rest.append((c, b))
        for cp, bp in pos:
            for cn, bn in neg:
                # scale so the eliminated coefficients cancel exactly
                c = [cp[j] / cp[v] + cn[j] / -cn[v] for j in range(nvars)]
                b = bp / cp[v] + bn / -cn[v]
                rest.append((c, b))
        rows = rest
    return all(b >= 0 for c, b in rows)


# neat allocation existence ---------------------------------------------------

def _breakpoints(piece, valuations):
    pts = set()
    for iv in piece.intervals:
        pts.add(iv.left)
        pts.add(iv.right)
    lo, hi = piece.span()
    for v in valuations:
        for a, b, _ in v.segments:
            if lo < a < hi:
                pts.add(a)
            if lo < b < hi:
                pts.add(b)
    return sorted(pts)


def _density_in(valuation, lo, hi, piece):
    """Constant density of the valuation on (lo,hi) as seen through the
    piece: zero when the cell lies in a gap of the piece."""
    mid_covered = any(iv.left <= lo and hi <= iv.right
                      for iv in piece.intervals)
    if not mid_covered:
        return ZERO
    for a, b, d in valuation.segments:
        if a <= lo and hi <= b:
            return d
    return ZERO


class _Affine:
    """value = base + slope * x, valid while x stays inside one cell."""

    __slots__ = ("base", "slope")

    def __init__(self, base, slope=ZERO):
        self.base = mpq(base)
        self.slope = mpq(slope)


def _suffix_affine(valuation, piece, lo, hi):
    """The value of piece-right-of-x as an affine function of x on the
    cell [lo, hi]."""
    at_lo = valuation.value(suffix_from(piece, lo))
    d = _density_in(valuation, lo, hi, piece)
    return _Affine(at_lo + d * lo, -d)


def neat_benchmark_feasible(pieces, agents, valuations, benchmarks):
    """Whether any neat allocation meeting every benchmark exists.

    pieces: list of (pid, Piece); agents get one trimmed piece each and
    at least one piece must stay whole and unallocated.  Exhaustive over
    assignments, trim cells, and exact linear feasibility inside each
    cell.  benchmarks maps agent -> required physical value.
    """
    agents = list(agents)
    pids = [pid for pid, _ in pieces]
    geom = dict(pieces)
    if len(agents) >= len(pids):
        return False
    for chosen in permutations(pids, len(agents)):
        unallocated = [p for p in pids if p not in chosen]
        cells = []
        ok_pick = True
        for pid in chosen:
            piece = geom[pid]
            if piece.is_empty:
                ok_pick = False
                break
            pts = _breakpoints(piece, [valuations[a] for a in agents])
            cells.append([(pts[i], pts[i + 1]) for i in range(len(pts) - 1)]
                         + [(pts[-1], pts[-1])])
        if not ok_pick:
            continue
        for combo in product(*cells):
            if _cell_feasible(agents, chosen, combo, geom, unallocated,
                              valuations, benchmarks):
                return True
    return False


def _cell_feasible(agents, chosen, combo, geom, unallocated, valuations,
                   benchmarks):
    nv = len(agents)
    # affine suffix value of every agent for every chosen piece
    val = {}
    for j, (pid, (lo, hi)) in enumerate(zip(chosen, combo)):
        for a in agents:
            val[(a, j)] = _suffix_affine(valuations[a], geom[pid], lo, hi)
    cons = []

    def add_ge(lhs, rhs):
        """lhs >= rhs with affine sides over the trim variables."""
        c = [ZERO] * nv
        b = ZERO
        for sign, side in ((1, rhs), (-1, lhs)):
            for j, coeff in side[0]:
                c[j] += sign * coeff
            b -= sign * side[1]
        cons.append((c, b))

    def aff(a, j):
        f = val[(a, j)]
        return ([(j, f.slope)], f.base)

    def const(x):
        return ([], mpq(x))

    for j, (lo, hi) in enumerate(combo):
        cons.append(([ZERO] * j + [mpq(1)] + [ZERO] * (nv - j - 1), mpq(hi)))
        cons.append(([ZERO] * j + [mpq(-1)] + [ZERO] * (nv - j - 1),
                     -mpq(lo)))
    for i, a in enumerate(agents):
        mine = aff(a, i)
        add_ge(mine, const(benchmarks.get(a, ZERO)))
        for u in unallocated:
            add_ge(mine, const(valuations[a].value(geom[u])))
        for j in range(len(agents)):
            if j != i:
                add_ge(mine, aff(a, j))
    return fm_feasible(cons, nv)


# naive domination search -----------------------------------------------------

def dominated_set_naive(shares, residue, valuations):
    """Inclusion-minimal, lexicographically first nonempty proper subset
    A with V_i(share_i) >= V_i(share_j) + V_i(residue) for every i
    outside A and j inside.  Straight from the definition, no shared
    code with the verifier."""
    agents = sorted(shares)
    from itertools import combinations
    for size in range(1, len(agents)):
        for combo in combinations(agents, size):
            good = True
            for i in agents:
                if i in combo:
                    continue
                vi = valuations[i]
                mine = vi.value(shares[i])
                for j in combo:
                    if mine < vi.value(shares[j]) + vi.value(residue):
                        good = False
                        break
                if not good:
                    break
            if good:
                return set(combo)
    return None


# exhaustive graph enumeration -------------------------------------------------

def enumerate_valid_graphs(n):
    """Every exchange graph on nodes 0..n-1 (identity class map) that
    satisfies the structural invariants and still has a tradeable node:
    each non-full node has exactly one chosen predecessor, and every
    node points at every holder of a full class."""
    from .goleft import PermutationGraph
    nodes = list(range(n))
    for fullmask in range(2 ** n):
        full = {v for v in nodes if fullmask >> v & 1}
        tnodes = [v for v in nodes if v not in full]
        if not tnodes:
            continue
        for preds in product(nodes, repeat=len(tnodes)):
            edges = {u: set(full) for u in nodes}
            for v, p in zip(tnodes, preds):
                edges[p].add(v)
            g = PermutationGraph(nodes, edges=edges,
                                 full_classes=set(full))
            yield g


# exhaustive cycle search -----------------------------------------------------

def all_simple_cycles(edges):
    """Every simple cycle of the directed graph, each rotated to start
    at its smallest node, as tuples.  edges: node -> iterable of
    successors."""
    nodes = sorted(edges)
    found = set()

    def walk(path, seen):
        u = path[-1]
        for v in sorted(edges[u]):
            if v == path[0]:
                cyc = path[path.index(min(path)):] + \
                    path[:path.index(min(path))]
                found.add(tuple(cyc))
            elif v not in seen and v > path[0]:
                walk(path + [v], seen | {v})

    for s in nodes:
        walk([s], {s})
    return found
