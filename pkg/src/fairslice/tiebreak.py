"""Symbolic infinitesimal tie-breaking.

Every protocol piece carries a shared "imaginary" tag: a sparse integer
combination of epsilon symbols.  Symbols form a strict total order in
which each symbol dominates any integer combination of all strictly
smaller symbols, so augmented values (physical rational + tag) never
tie unless they are identical.

Order schema: symbols of a lower-indexed agent outrank symbols of any
higher-indexed agent, and within one agent earlier-issued symbols
outrank later-issued ones.  Cuts on the cake are always driven by
physical values alone; this module is pure bookkeeping.
"""

from gmpy2 import mpq

from .errors import EmptyTrimSet, UnknownPiece

ZERO = mpq(0)


class EpsSymbol:
    """One infinitesimal.  `rank` is the total-order key: a smaller key
    means a larger infinitesimal (agent-major, then issue order)."""

    __slots__ = ("rank", "owner", "owner_index")

    def __init__(self, owner_pos, owner, owner_index):
        self.rank = (owner_pos, owner_index)
        self.owner = owner
        self.owner_index = owner_index

    def outranks(self, other):
        """True iff self is the (infinitely) larger symbol."""
        return self.rank < other.rank

    def __eq__(self, other):
        return isinstance(other, EpsSymbol) and self.rank == other.rank

    def __hash__(self):
        return hash(self.rank)

    def __repr__(self):
        return "eps[%s.%d]" % (self.owner, self.owner_index)


def _vec_cmp(a, b):
    """Compare two sparse symbol->coefficient maps lexicographically
    from the largest symbol downward."""
    for sym in sorted(set(a) | set(b), key=lambda s: s.rank):
        ca = a.get(sym, 0)
        cb = b.get(sym, 0)
        if ca != cb:
            return 1 if ca > cb else -1
    return 0


class AugmentedValue:
    """Exact rational plus a sparse infinitesimal vector."""

    __slots__ = ("phys", "inf")

    def __init__(self, phys=0, inf=None):
        self.phys = mpq(phys)
        self.inf = {s: c for s, c in (inf or {}).items() if c != 0}

    def cmp(self, other):
        if self.phys != other.phys:
            return 1 if self.phys > other.phys else -1
        return _vec_cmp(self.inf, other.inf)

    def __lt__(self, other):
        return self.cmp(other) < 0

    def __le__(self, other):
        return self.cmp(other) <= 0

    def __gt__(self, other):
        return self.cmp(other) > 0

    def __ge__(self, other):
        return self.cmp(other) >= 0

    def __eq__(self, other):
        return (isinstance(other, AugmentedValue)
                and self.phys == other.phys and self.inf == other.inf)

    def __hash__(self):
        return hash((self.phys, frozenset(self.inf.items())))

    def __add__(self, other):
        inf = dict(self.inf)
        for s, c in other.inf.items():
            inf[s] = inf.get(s, 0) + c
        return AugmentedValue(self.phys + other.phys, inf)

    def __sub__(self, other):
        inf = dict(self.inf)
        for s, c in other.inf.items():
            inf[s] = inf.get(s, 0) - c
        return AugmentedValue(self.phys - other.phys, inf)

    def __repr__(self):
        if not self.inf:
            return "AV(%s)" % self.phys
        terms = "+".join(
            "%d*%r" % (c, s)
            for s, c in sorted(self.inf.items(), key=lambda kv: kv[0].rank))
        return "AV(%s; %s)" % (self.phys, terms)


def compare(a, b):
    """Three-way comparison of augmented values: -1, 0, or 1."""
    return a.cmp(b)


class ImaginaryLedger:
    """Single-writer registry of piece tags and per-agent symbol supply.

    Tags are agent-independent: every agent reads the same infinitesimal
    vector for a piece.  The symbol supply is extended on demand; only
    the order schema matters for soundness, not the pool size.
    """

    def __init__(self, agents=()):
        self._agent_pos = {}
        self._next_index = {}
        self.piece_tags = {}
        # instrumentation for tie-breaking soundness checks: counts of
        # augmented-value equality outcomes between distinct pieces
        self.equal_tie_comparisons = 0
        self.total_tie_comparisons = 0
        for a in agents:
            self.register_agent(a)

    def register_agent(self, agent):
        if agent not in self._agent_pos:
            self._agent_pos[agent] = len(self._agent_pos)
            self._next_index[agent] = 0

    def issue_epsilon(self, agent):
        self.register_agent(agent)
        idx = self._next_index[agent]
        self._next_index[agent] = idx + 1
        return EpsSymbol(self._agent_pos[agent], agent, idx)

    def register_piece(self, piece_id, tag=None):
        self.piece_tags[piece_id] = dict(tag or {})

    def drop_piece(self, piece_id):
        self.piece_tags.pop(piece_id, None)

    def piece_imaginary_value(self, piece_id):
        if piece_id not in self.piece_tags:
            raise UnknownPiece(str(piece_id))
        return dict(self.piece_tags[piece_id])

    def tag_fresh_piece(self, agent, piece_id):
        """Tag a newly cut piece with one fresh symbol of its creator."""
        eps = self.issue_epsilon(agent)
        tag = self.piece_tags.setdefault(piece_id, {})
        tag[eps] = tag.get(eps, 0) + 1
        return eps

    def tag_equalized_pieces(self, agent, trimmed, benchmark=None):
        """Record a trim event: `trimmed` lists piece ids in the agent's
        strict pre-trim preference order, least preferred first.

        One fresh symbol is issued per trimmed piece, least preferred
        first, and tags accumulate so that the k-th piece carries the
        first k new symbols.  Later (more preferred) pieces therefore
        stay strictly above earlier ones, every tagged piece strictly
        exceeds the untagged benchmark, and the pre-trim order is
        conserved in the augmented order.
        """
        if not trimmed:
            raise EmptyTrimSet("no pieces to equalize")
        acc = {}
        for pid in trimmed:
            if pid == benchmark:
                continue
            eps = self.issue_epsilon(agent)
            acc[eps] = 1
            tag = self.piece_tags.setdefault(pid, {})
            for s, c in acc.items():
                tag[s] = tag.get(s, 0) + c

    def augmented(self, phys, piece_id):
        """Augmented value of a piece for one agent: his physical value
        plus the shared tag."""
        return AugmentedValue(phys, self.piece_tags.get(piece_id, {}))

    def observe_comparison(self, a, b, piece_a=None, piece_b=None):
        """Instrumented comparison used at protocol decision sites.
        Counts equality outcomes between distinct pieces, which the
        no-ties claim says must never occur."""
        c = a.cmp(b)
        if piece_a is not None and piece_b is not None and piece_a != piece_b:
            self.total_tie_comparisons += 1
            if c == 0:
                self.equal_tie_comparisons += 1
        return c
