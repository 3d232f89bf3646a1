"""Piecewise-constant valuations answering exact Cut/Eval queries.

A Valuation is a density that is constant on finitely many segments
partitioning [0,1].  Eval integrates exactly; Cut inverts exactly and
returns the smallest satisfying point, so zero-density plateaus never
introduce nondeterminism.  A QueryCounter tracks per-agent query usage
so runs can be audited against the protocol bounds.
"""

import random

from gmpy2 import mpq

from .cake import Interval, normalize
from .errors import BudgetExhausted, FairsliceError, TargetExceedsAvailable

ZERO = mpq(0)
ONE = mpq(1)


class QueryCounter:
    def __init__(self, max_queries=None):
        self.cut = {}
        self.eval = {}
        self.max_queries = max_queries

    @property
    def total(self):
        return sum(self.cut.values()) + sum(self.eval.values())

    def count_cut(self, agent, amount=1):
        self.cut[agent] = self.cut.get(agent, 0) + amount
        self._check()

    def count_eval(self, agent, amount=1):
        self.eval[agent] = self.eval.get(agent, 0) + amount
        self._check()

    def _check(self):
        if self.max_queries is not None and self.total > self.max_queries:
            raise BudgetExhausted(
                "query budget %d exhausted" % self.max_queries)

    def snapshot(self):
        return {a: (self.cut.get(a, 0), self.eval.get(a, 0))
                for a in set(self.cut) | set(self.eval)}


class Valuation:
    """Non-negative piecewise-constant density on [0,1], total > 0."""

    def __init__(self, segments):
        segs = [(mpq(l), mpq(r), mpq(d)) for (l, r, d) in segments]
        segs.sort(key=lambda s: s[0])
        if not segs or segs[0][0] != ZERO or segs[-1][1] != ONE:
            raise FairsliceError("segments must cover [0,1]")
        for (l, r, d) in segs:
            if d < 0:
                raise FairsliceError("negative density")
            if r < l:
                raise FairsliceError("segment endpoints out of order")
        for a, b in zip(segs, segs[1:]):
            if a[1] != b[0]:
                raise FairsliceError("segments must partition [0,1]")
        self.segments = segs
        self.total = sum((d * (r - l) for (l, r, d) in segs), ZERO)
        if self.total <= 0:
            raise FairsliceError("total value must be positive")

    def _value_interval(self, left, right):
        v = ZERO
        for (l, r, d) in self.segments:
            lo = max(l, left)
            hi = min(r, right)
            if lo < hi:
                v += d * (hi - lo)
        return v

    def value(self, piece):
        """Exact value of a piece, without query accounting."""
        return sum((self._value_interval(iv.left, iv.right)
                    for iv in piece.intervals), ZERO)

    def cut_point(self, start, target):
        """Smallest y with value([start, y]) == target."""
        start = mpq(start)
        target = mpq(target)
        if target < 0 or target > self._value_interval(start, ONE):
            raise TargetExceedsAvailable(
                "target %s not available from %s" % (target, start))
        if target == 0:
            return start
        acc = ZERO
        for (l, r, d) in self.segments:
            lo = max(l, start)
            if lo >= r:
                continue
            seg_val = d * (r - lo)
            if acc + seg_val >= target:
                # inside this segment; d > 0 because target > acc >= 0
                return lo + (target - acc) / d
            acc += seg_val
        raise TargetExceedsAvailable("target %s unreachable" % target)

    def cut_point_from_right(self, end, target):
        """Largest y with value([y, end]) == target."""
        end = mpq(end)
        target = mpq(target)
        if target < 0 or target > self._value_interval(ZERO, end):
            raise TargetExceedsAvailable(
                "target %s not available up to %s" % (target, end))
        if target == 0:
            return end
        acc = ZERO
        for (l, r, d) in reversed(self.segments):
            hi = min(r, end)
            if hi <= l:
                continue
            seg_val = d * (hi - l)
            if acc + seg_val >= target:
                return hi - (target - acc) / d
            acc += seg_val
        raise TargetExceedsAvailable("target %s unreachable" % target)


class Oracle:
    """Robertson-Webb query front end for one agent, with accounting."""

    def __init__(self, agent, valuation, counter):
        self.agent = agent
        self.valuation = valuation
        self.counter = counter
        self.trace = None

    def eval(self, piece):
        self.counter.count_eval(self.agent)
        v = self.valuation.value(piece)
        if self.trace is not None:
            self.trace.query_eval(self.agent, piece, v)
        return v

    def cut(self, start, target):
        self.counter.count_cut(self.agent)
        y = self.valuation.cut_point(start, target)
        if self.trace is not None:
            self.trace.query_cut(self.agent, start, target, y)
        return y

    def cut_in_piece(self, piece, target):
        """Coordinate x such that the prefix of `piece` left of x is
        worth exactly `target`.  Costs one Cut query per interval
        inspected (at most len(piece.intervals))."""
        target = mpq(target)
        if target < 0:
            raise TargetExceedsAvailable("negative target")
        if piece.is_empty:
            if target == 0:
                raise TargetExceedsAvailable("empty piece")
            raise TargetExceedsAvailable("empty piece")
        remaining = target
        for iv in piece.intervals:
            iv_val = self.valuation._value_interval(iv.left, iv.right)
            if remaining <= iv_val:
                self.counter.count_cut(self.agent)
                y = self.valuation.cut_point(iv.left, remaining)
                y = min(y, iv.right)
                if self.trace is not None:
                    self.trace.query_cut(self.agent, iv.left, remaining, y)
                return y
            remaining -= iv_val
            self.counter.count_cut(self.agent)
            if self.trace is not None:
                self.trace.query_cut(self.agent, iv.left, iv_val, iv.right)
        if remaining == 0:
            return piece.intervals[-1].right
        raise TargetExceedsAvailable(
            "target %s exceeds piece value" % target)

    def suffix_cut(self, piece, target):
        """Largest coordinate x such that the part of `piece` right of x
        is worth exactly `target`.  Costs one Cut query per interval
        inspected, like cut_in_piece."""
        target = mpq(target)
        if target < 0:
            raise TargetExceedsAvailable("negative target")
        if piece.is_empty:
            raise TargetExceedsAvailable("empty piece")
        remaining = target
        for iv in reversed(piece.intervals):
            iv_val = self.valuation._value_interval(iv.left, iv.right)
            if remaining <= iv_val:
                self.counter.count_cut(self.agent)
                y = self.valuation.cut_point_from_right(iv.right, remaining)
                y = max(y, iv.left)
                if self.trace is not None:
                    self.trace.query_cut(
                        self.agent, iv.left, iv_val - remaining, y)
                return y
            remaining -= iv_val
            self.counter.count_cut(self.agent)
            if self.trace is not None:
                self.trace.query_cut(self.agent, iv.left, ZERO, iv.left)
        if remaining == 0:
            return piece.intervals[0].left
        raise TargetExceedsAvailable(
            "target %s exceeds piece value" % target)


def make_oracles(valuations, counter):
    """Map agent id -> Oracle for an ordered agent/valuation pairing."""
    return {agent: Oracle(agent, val, counter)
            for agent, val in valuations.items()}


def random_instance(n, k, seed):
    """Deterministic-by-seed list of n piecewise-constant valuations
    with k segments each, rational breakpoints, positive totals."""
    rng = random.Random(seed)
    out = []
    for _ in range(n):
        denom = rng.randrange(4 * k, 16 * k)
        cuts = sorted(rng.sample(range(1, denom), k - 1)) if k > 1 else []
        points = [ZERO] + [mpq(c, denom) for c in cuts] + [ONE]
        while True:
            densities = [mpq(rng.randrange(0, 9)) for _ in range(k)]
            if any(d > 0 for d in densities):
                break
        segs = [(points[i], points[i + 1], densities[i]) for i in range(k)]
        out.append(Valuation(segs))
    return out


def piece_from_pairs(pairs):
    return normalize([Interval(l, r) for (l, r) in pairs])
