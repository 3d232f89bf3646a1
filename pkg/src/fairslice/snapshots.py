"""Snapshot bookkeeping for the orchestrated protocol.

A snapshot is one envy-free partial allocation produced by a Core
round, remembered so that later phases can compare agents' holdings,
cut matching pieces off the residue (extraction), and trade holdings
without moving any cake.  This module owns the parameter schedule, the
bound function, bonus and significance tests, the extraction step, and
the isomorphism classification that groups snapshots whose extraction
histories coincide.
"""

from gmpy2 import mpq, mpz

from .cake import EMPTY, leftmost_prefix, piece_subtract, piece_union

ZERO = mpq(0)


def f(b, n):
    """((n-2)/n)**b: the cutter's residue shrink factor after b rounds."""
    return mpq(n - 2, n) ** b


def _ceil_div(a, b):
    return -(-a // b)


class Params:
    """Run parameters.

    strict mode follows the full tower C = n^(n^n), C' = n^C, B = n^C',
    B' = n^B; those numbers are unexecutable for n >= 4 and exist for
    symbolic verification only.  adaptive mode replaces the bound
    function everywhere by a configurable threshold s (default 2^-20)
    and sizes the working set and snapshot store to executable counts.
    """

    def __init__(self, n, mode, sig_threshold=None, working_set=None,
                 snapshot_cap=None, B=None):
        self.n = n
        self.mode = mode
        if mode == "adaptive":
            self.s = mpq(sig_threshold) if sig_threshold is not None \
                else mpq(1, 2 ** 20)
            if not (0 < self.s < 1):
                raise ValueError("threshold must lie strictly in (0,1)")
        else:
            self.s = None
        self.working_set = working_set if working_set is not None \
            else max(8, n * n + 2)
        self.snapshot_cap = snapshot_cap if snapshot_cap is not None \
            else 8 * self.working_set
        self.B = B  # explicit small override for executable strict runs
        self._explicit = (sig_threshold is not None, working_set is not None,
                          snapshot_cap is not None)

    @classmethod
    def adaptive(cls, n, sig_threshold=None, working_set=None,
                 snapshot_cap=None):
        return cls(n, "adaptive", sig_threshold=sig_threshold,
                   working_set=working_set, snapshot_cap=snapshot_cap)

    @classmethod
    def strict(cls, n, B=None):
        return cls(n, "strict", B=B)

    def for_n(self, m):
        """The same parameter choices resized for m agents: explicit
        overrides carry over, defaults are recomputed for m."""
        if m == self.n:
            return self
        se, we, ce = self._explicit
        return Params(m, self.mode,
                      sig_threshold=self.s if se else None,
                      working_set=self.working_set if we else None,
                      snapshot_cap=self.snapshot_cap if ce else None,
                      B=self.B)

    def threshold(self):
        """The significance threshold as a fraction of residue value."""
        if self.mode == "adaptive":
            return self.s
        if self.B is None:
            raise ValueError(
                "strict parameters are symbolic; supply an explicit B "
                "to execute strict-mode significance tests")
        return f(self.B, self.n)


def bonus(ctx, snapshot, i, k):
    """How much more agent i thinks he got in this snapshot than he
    would have holding class k's piece instead.  Non-negative because
    every snapshot is envy-free."""
    own = ctx.oracles[i].eval(snapshot.pieces[i])
    other = ctx.oracles[i].eval(snapshot.pieces[k])
    return own - other


def is_significant(ctx, agent, value, residue, params):
    """A value is significant when it is at least the threshold fraction
    of the agent's residue value; with a worthless residue every
    non-negative value (including zero) qualifies."""
    return value >= ctx.oracles[agent].eval(residue) * params.threshold()


class Snapshot:
    """One Core round's allocation plus extraction/exchange bookkeeping.

    pieces maps each class (named after the agent originally allocated
    it) to its immutable geometry.  holder tracks who currently owns
    each class; extraction entries are dicts with keys agent/piece/state
    where state is one of 'out' (cut from the residue), 'aggregated'
    (consumed by a nested division), or 'returned' (back in the
    residue).  attached counts how many leading extractions have been
    officially attached to the class.
    """

    def __init__(self, sid, cutter, shares):
        self.sid = sid
        self.cutter = cutter
        self.pieces = dict(shares)
        self.holder = {k: k for k in shares}
        self.extractions = {k: [] for k in shares}
        self.attached = {k: 0 for k in shares}
        self.history = {k: {k} for k in shares}
        self.finalized = False

    def classes(self, ctx):
        return sorted(self.pieces, key=ctx.agent_pos.get)

    def position(self, ctx, k, agent):
        """1-based rank of an agent in class k's ordering: the original
        recipient first, then extractors in extraction order, then the
        rest by registration order."""
        if agent == k:
            return 1
        seq = [e["agent"] for e in self.extractions[k]]
        if agent in seq:
            return 2 + seq.index(agent)
        rest = sorted((a for a in self.pieces
                       if a != k and a not in seq), key=ctx.agent_pos.get)
        return 2 + len(seq) + rest.index(agent)

    def active_count(self, ctx, k):
        """Attachments the current holder actually enjoys: never more
        than cover his own extraction."""
        return min(self.attached[k], self.position(ctx, k, self.holder[k]) - 1)

    def realized(self, ctx, k):
        """The cake class k's holder walks away with."""
        piece = self.pieces[k]
        for entry in self.extractions[k][:self.active_count(ctx, k)]:
            if entry["state"] == "out":
                piece = piece_union(piece, entry["piece"])
        return piece

    def realized_shares(self, ctx):
        out = {}
        for k in self.pieces:
            h = self.holder[k]
            out[h] = piece_union(out.get(h, EMPTY), self.realized(ctx, k))
        return out

    def outstanding(self):
        """Extraction pieces currently out of the residue."""
        for k, entries in self.extractions.items():
            for i, entry in enumerate(entries):
                if entry["state"] == "out":
                    yield k, i, entry

    def signature(self, ctx):
        return tuple((k, tuple(e["agent"] for e in self.extractions[k]))
                     for k in self.classes(ctx))


class DiscrepantPiece:
    """A delimited residue piece significant to some agents but not all:
    a normal extraction outcome that hands control to the gap-widening
    protocol."""

    def __init__(self, piece, trimmer, trimmer_bonus, significant_for):
        self.piece = piece
        self.trimmer = trimmer
        self.trimmer_bonus = trimmer_bonus
        self.significant_for = significant_for


def extract_for_piece(ctx, snapshot, k, residue, params):
    """One extraction step for class k of one snapshot.

    Every agent (other than the class's original recipient) whose bonus
    over the class is not significant marks a prefix of the residue
    worth exactly his bonus.  Successive marks delimit pieces left to
    right; coinciding marks are ordered by agent registration, leaving
    empty pieces for the latter agents.  Each delimited piece that no
    agent finds significant is cut out of the residue and recorded on
    the snapshot; a piece significant to some agents but not all stops
    the step and is reported as discrepant.

    Returns (new_residue, extracted_entries, discrepant_or_None).
    """
    trims = []
    for i in sorted(snapshot.pieces, key=ctx.agent_pos.get):
        if i == k:
            continue
        b = bonus(ctx, snapshot, i, k)
        if is_significant(ctx, i, b, residue, params):
            continue
        x = ctx.oracles[i].cut_in_piece(residue, b)
        trims.append((x, ctx.agent_pos[i], i, b))
    if not trims:
        return residue, [], None
    trims.sort(key=lambda t: (t[0], t[1]))
    rightmost = trims[-1]
    # delimit on the pre-extraction geometry; the slices are disjoint,
    # so removing earlier ones never moves a later one
    base = residue
    prev = EMPTY
    delimited = []
    for x, _, agent, b in trims:
        pref = leftmost_prefix(base, x)
        delimited.append((agent, b, piece_subtract(pref, prev)))
        prev = pref
    extracted = []
    for agent, b, piece in delimited:
        sig = [i for i in sorted(snapshot.pieces, key=ctx.agent_pos.get)
               if is_significant(ctx, i, ctx.oracles[i].eval(piece),
                                 residue, params)]
        if len(sig) == len(snapshot.pieces):
            # unanimously significant (the residue may have shrunk since
            # the trims were placed): stop here so the extracted slices
            # stay a contiguous prefix of the marked region
            break
        if sig:
            disc = DiscrepantPiece(piece, rightmost[2], rightmost[3], sig)
            return residue, extracted, disc
        entry = {"agent": agent, "piece": piece, "state": "out"}
        residue = piece_subtract(residue, piece)
        snapshot.extractions[k].append(entry)
        extracted.append(entry)
    return residue, extracted, None


def iso_signature(ctx, snapshot):
    return snapshot.signature(ctx)


def find_isomorphic_subset(ctx, snapshots, target):
    """The earliest-started signature class holding at least `target`
    snapshots, or None.  Members come back in generation order."""
    groups = {}
    order = []
    for snap in snapshots:
        sig = snap.signature(ctx)
        if sig not in groups:
            groups[sig] = []
            order.append(sig)
        groups[sig].append(snap)
    for sig in order:
        if len(groups[sig]) >= target:
            return groups[sig][:target]
    return None


# Symbolic verification of the strict parameter tower.  The numbers
# C' = n^(n^(n^n)) and beyond cannot be materialized, so the checks
# work through exponent and bit-length comparisons on the quantities
# that do fit in memory.

def _floor_log2(n):
    return n.bit_length() - 1


def _ceil_log2(n):
    return (n - 1).bit_length()


def verify_iso_count_bound(n):
    """C' >= (n+1)^(n^2-n) * C for the strict tower.

    C = n^(n^n) fits in memory through n = 8; C' = n^C does not, but
    C' >= 2^(floor_log2(n) * C) and any integer m is below 2^bitlen(m),
    so it is enough that floor_log2(n) * C reaches the right side's bit
    length.
    """
    C = mpz(n) ** (mpz(n) ** n)
    rhs = mpz(n + 1) ** (n * n - n) * C
    return _floor_log2(mpz(n)) * C >= rhs.bit_length()


def verify_residue_stability(n):
    """C' * n^2 * ((n-2)/n)^B < 1/n for the strict tower.

    Exact reduction chain: (n/(n-2))^B >= 1 + 2B/(n-2) >= 2B/n by the
    binomial lower bound, so ((n-2)/n)^B <= n/(2B) <= n/B, and the
    claim follows from C' * n^4 < B.  With B = n^C' and
    C' * n^4 <= 2^L for L = ceil_log2(n) * (C + 4) + 1, while
    B >= 2^(floor_log2(n) * C') >= 2^(2^(floor_log2(n) * C)), it is
    enough that L's bit length stays within floor_log2(n) * C.
    """
    C = mpz(n) ** (mpz(n) ** n)
    cl = _ceil_log2(mpz(n))
    fl = _floor_log2(mpz(n))
    L = cl * (C + 4) + 1
    return mpz(L).bit_length() <= fl * C
