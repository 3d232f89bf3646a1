"""Exact rational geometry of the cake.

The cake is the interval [0,1].  A Piece is a finite union of disjoint
closed subintervals with rational endpoints, kept in a canonical form:
sorted, interior-disjoint, adjacent intervals merged, zero-length
intervals dropped.  Because valuations are non-atomic, intervals that
meet only at a point count as disjoint.

All values are gmpy2.mpq rationals (arbitrary precision, always in
lowest terms).
"""

from gmpy2 import mpq

from .errors import EndpointOutOfRange, EndpointOutsidePiece

ZERO = mpq(0)
ONE = mpq(1)


def rat(x, y=None):
    """Coerce to an exact rational.  Accepts ints, strings like '3/4',
    Fractions, or a numerator/denominator pair."""
    if y is None:
        return mpq(x)
    return mpq(x, y)


class Interval:
    """A closed interval [left, right] with 0 <= left <= right <= 1."""

    __slots__ = ("left", "right")

    def __init__(self, left, right):
        left = mpq(left)
        right = mpq(right)
        if not (ZERO <= left <= right <= ONE):
            raise EndpointOutOfRange(
                "bad interval [%s, %s]" % (left, right))
        self.left = left
        self.right = right

    @property
    def length(self):
        return self.right - self.left

    def __eq__(self, other):
        return (isinstance(other, Interval)
                and self.left == other.left and self.right == other.right)

    def __hash__(self):
        return hash((self.left, self.right))

    def __repr__(self):
        return "Interval(%s, %s)" % (self.left, self.right)


class Piece:
    """Canonical finite union of intervals.  Immutable.

    Use `normalize` to build one from arbitrary interval lists; the
    constructor trusts its input to already be canonical.
    """

    __slots__ = ("intervals",)

    def __init__(self, intervals=()):
        self.intervals = tuple(intervals)

    @property
    def is_empty(self):
        return not self.intervals

    def measure(self):
        return sum((iv.length for iv in self.intervals), ZERO)

    def span(self):
        """(leftmost, rightmost) endpoints; None for the empty piece."""
        if not self.intervals:
            return None
        return (self.intervals[0].left, self.intervals[-1].right)

    def is_connected(self):
        return len(self.intervals) <= 1

    def __eq__(self, other):
        return isinstance(other, Piece) and self.intervals == other.intervals

    def __hash__(self):
        return hash(self.intervals)

    def __repr__(self):
        if not self.intervals:
            return "Piece()"
        return "Piece(%s)" % ", ".join(
            "[%s, %s]" % (iv.left, iv.right) for iv in self.intervals)


EMPTY = Piece()
WHOLE = Piece((Interval(0, 1),))


def normalize(raw):
    """Canonicalize a list of Interval (or (left, right) pairs):
    sort, drop zero-length, merge overlapping or adjacent intervals."""
    ivs = []
    for item in raw:
        if not isinstance(item, Interval):
            item = Interval(item[0], item[1])
        if item.length > 0:
            ivs.append(item)
    ivs.sort(key=lambda iv: (iv.left, iv.right))
    merged = []
    for iv in ivs:
        if merged and iv.left <= merged[-1].right:
            if iv.right > merged[-1].right:
                merged[-1] = Interval(merged[-1].left, iv.right)
        else:
            merged.append(iv)
    return Piece(merged)


def piece_union(a, b):
    return normalize(list(a.intervals) + list(b.intervals))


def piece_intersect(a, b):
    out = []
    for x in a.intervals:
        for y in b.intervals:
            lo = max(x.left, y.left)
            hi = min(x.right, y.right)
            if lo < hi:
                out.append(Interval(lo, hi))
    return normalize(out)


def piece_subtract(a, b):
    out = []
    for x in a.intervals:
        cur = x.left
        for y in b.intervals:
            if y.right <= cur or y.left >= x.right:
                continue
            if y.left > cur:
                out.append(Interval(cur, y.left))
            cur = max(cur, y.right)
            if cur >= x.right:
                break
        if cur < x.right:
            out.append(Interval(cur, x.right))
    return normalize(out)


def is_partition(parts, whole):
    """True iff the parts have pairwise disjoint interiors and their
    union equals `whole` after normalization."""
    union = EMPTY
    total = ZERO
    for p in parts:
        union = piece_union(union, p)
        total += p.measure()
    # disjoint interiors <=> measures add up exactly
    return union == normalize(whole.intervals) and total == union.measure()


def leftmost_prefix(p, endpoint):
    """The sub-piece of p lying left of `endpoint`, measured along p
    (gaps are skipped; an endpoint inside a gap closes the preceding
    interval)."""
    if p.is_empty:
        if endpoint is not None:
            raise EndpointOutsidePiece("empty piece has no prefix")
    lo, hi = p.span()
    endpoint = mpq(endpoint)
    if not (lo <= endpoint <= hi):
        raise EndpointOutsidePiece(
            "endpoint %s outside piece span [%s, %s]" % (endpoint, lo, hi))
    out = []
    for iv in p.intervals:
        if iv.right <= endpoint:
            out.append(iv)
        elif iv.left < endpoint:
            out.append(Interval(iv.left, endpoint))
        else:
            break
    return normalize(out)


def suffix_from(p, endpoint):
    """Complement of leftmost_prefix within p."""
    return piece_subtract(p, leftmost_prefix(p, endpoint))


def contains(outer, inner):
    """True iff inner is a subset of outer (up to measure zero)."""
    return piece_subtract(inner, outer).is_empty


def format_piece(p):
    """Exact textual form used in traces: semicolon-joined intervals."""
    if p.is_empty:
        return "empty"
    return ";".join("[%s,%s]" % (iv.left, iv.right) for iv in p.intervals)
