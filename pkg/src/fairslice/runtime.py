"""Shared per-run protocol state.

A ProtocolContext owns everything one protocol run mutates: the piece
registry, the tie-break ledger, the query-counted oracles, and
instrumentation counters.  Verifiers never go through it; they read
valuations directly.

Piece entities.  A protocol piece is identified by (pid, Margin): the
cake of piece `pid` right of the margin.  A Margin is either the
creation margin of the piece or one specific trim; each margin entity
carries its own immutable imaginary tag, assigned once when the entity
comes into being.  Two trims at the same physical coordinate are
distinct entities with distinct tags, so augmented values of distinct
entities never tie.
"""

from functools import cmp_to_key

from gmpy2 import mpq

from .cake import suffix_from
from .tiebreak import AugmentedValue, ImaginaryLedger

ZERO = mpq(0)


class Margin:
    """A left margin of one piece.  Identity-hashed: every trim is its
    own entity even at a repeated coordinate."""

    __slots__ = ("pid", "x", "by")

    def __init__(self, pid, x, by=None):
        self.pid = pid
        self.x = mpq(x)
        self.by = by  # trimming agent; None for a creation margin

    def __repr__(self):
        who = "origin" if self.by is None else "trim by %s" % (self.by,)
        return "Margin(p%s at %s, %s)" % (self.pid, self.x, who)


class Benchmark:
    """An augmented benchmark value plus the margin entity it was read
    from (None for a bare zero benchmark).  The source entity's tag
    seeds the tags of trims equalizing pieces to this benchmark."""

    __slots__ = ("value", "src")

    def __init__(self, value, src=None):
        self.value = value
        self.src = src

    def __repr__(self):
        return "Benchmark(%r, src=%r)" % (self.value, self.src)


def zero_benchmark():
    return Benchmark(AugmentedValue(0), None)


class Stats:
    def __init__(self):
        self.trim_events = 0
        self.order_violations = 0
        self.subcore_calls = 0
        self.core_runs = 0
        self.resets = 0
        self.attachments = 0
        self.exchanges = 0
        self.separations = 0
        self.phase_checks = 0
        self.quota_events = []


class ProtocolContext:
    def __init__(self, agents, oracles, counter, ledger=None, trace=None):
        self.agents = list(agents)
        self.agent_pos = {a: i for i, a in enumerate(self.agents)}
        self.oracles = oracles
        self.counter = counter
        self.ledger = ledger if ledger is not None else ImaginaryLedger(agents)
        for a in self.agents:
            self.ledger.register_agent(a)
        self.trace = trace
        self.geometry = {}
        self.holding_margin = {}  # pid -> Margin of the committed holder
        self.stats = Stats()
        self.frames = []  # live orchestrator states, outermost first
        self._next_pid = 0
        self._phys_cache = {}

    # piece registry -----------------------------------------------------

    def new_piece(self, piece, creator=None):
        pid = self._next_pid
        self._next_pid += 1
        self.geometry[pid] = piece
        start = piece.span()[0] if not piece.is_empty else ZERO
        margin = Margin(pid, start)
        self.holding_margin[pid] = margin
        self.ledger.register_piece(margin)
        if creator is not None:
            self.ledger.tag_fresh_piece(creator, margin)
        return pid, margin

    def remainder(self, pid, margin):
        return suffix_from(self.geometry[pid], margin.x)

    # valuations ---------------------------------------------------------

    def phys(self, agent, pid, margin):
        key = (agent, pid, margin.x)
        if key not in self._phys_cache:
            self._phys_cache[key] = self.oracles[agent].eval(
                self.remainder(pid, margin))
        return self._phys_cache[key]

    def aug(self, agent, pid, margin):
        return AugmentedValue(self.phys(agent, pid, margin),
                              self.ledger.piece_tags.get(margin, {}))

    def best_piece(self, agent, candidates, margin_of, benchmark=None):
        """(pid, aug) the agent most prefers in the augmented order:
        physical value first, shared infinitesimal tags at a physical
        tie.  The tag placement rules make the order strict, so the
        result never depends on candidate enumeration order."""
        best = None
        for pid in candidates:
            m = margin_of(pid)
            a = self.aug(agent, pid, m)
            if best is None:
                best = (pid, m, a)
                continue
            bpid, bm, ba = best
            if self.ledger.observe_comparison(a, ba, m, bm) > 0:
                best = (pid, m, a)
        pid, _, a = best
        return pid, a

    def sort_by_preference(self, agent, pids, margin_of):
        """pids sorted least preferred first, augmented order."""
        def cmp(p, q):
            return self.ledger.observe_comparison(
                self.aug(agent, p, margin_of(p)),
                self.aug(agent, q, margin_of(q)),
                margin_of(p), margin_of(q))
        return sorted(pids, key=cmp_to_key(cmp))

    # tie-break bookkeeping ----------------------------------------------

    def tag_trim_entities(self, agent, trims_least_first, benchmark):
        """Equalization event.  Each trim entity (the right side of one
        new trim) gets the benchmark source's tag plus cumulative fresh
        symbols, least preferred piece first, so every trimmed piece
        strictly exceeds the benchmark and the agent's pre-trim order
        is conserved.  Conservation is asserted and counted."""
        if not trims_least_first:
            return
        base = dict(self.ledger.piece_tags.get(benchmark.src, {})) \
            if benchmark.src is not None else {}
        acc = dict(base)
        post = []
        for margin in trims_least_first:
            eps = self.ledger.issue_epsilon(agent)
            acc = dict(acc)
            acc[eps] = acc.get(eps, 0) + 1
            self.ledger.register_piece(margin, acc)
            post.append(AugmentedValue(benchmark.value.phys, acc))
        self.stats.trim_events += 1
        for earlier, later in zip(post, post[1:]):
            if not earlier < later:
                self.stats.order_violations += 1
        if post and not benchmark.value < post[0]:
            self.stats.order_violations += 1
