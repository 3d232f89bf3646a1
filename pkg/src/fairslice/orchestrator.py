"""End-to-end envy-free division of a cake among any number of agents.

Small agent counts use the classical protocols (take-all, divide and
choose, the three-agent trim protocol).  Larger counts run the full
machinery: record Core snapshots with rotating cutters, push every
bonus out of an intermediate band, cut matching pieces off the residue,
trade and attach them across isomorphic snapshots until some agent set
can be dominated, then recurse on the dominated set with the rest of
the residue.  Every phase boundary is re-verified exactly; a failed
check stops the run rather than emitting a doubtful allocation.
"""

from gmpy2 import mpq

from .cake import EMPTY, leftmost_prefix, piece_subtract, piece_union
from .core import core
from .discrepancy import discrepancy
from .errors import FailStopError, InsufficientSnapshots
from .goleft import goleft
from .snapshots import Params, Snapshot, extract_for_piece
from .verify import (Allocation, conservation, dominates, find_dominated_set,
                     is_envy_free)

ZERO = mpq(0)


class RunState:
    """Mutable state of one orchestrated run: final shares, the live
    snapshot store, and the shrinking residue."""

    def __init__(self, ctx, agents, cake, params):
        self.ctx = ctx
        self.agents = list(agents)
        self.cake = cake
        self.params = params
        self.shares = {a: EMPTY for a in self.agents}
        self.snapshots = []        # active (not yet finalized) snapshots
        self.residue = cake
        self.cutter_counts = {a: 0 for a in self.agents}
        self._sid = 0

    # core plumbing --------------------------------------------------------

    def run_core(self, cutter, as_snapshot=False):
        outcome = core(self.ctx, cutter, self.agents, self.residue)
        self.residue = outcome.leftover
        self.cutter_counts[cutter] += 1
        if as_snapshot:
            shares = {a: piece for a, (_, piece) in outcome.shares.items()}
            snap = Snapshot(self._sid, cutter, shares)
            self._sid += 1
            self.snapshots.append(snap)
        else:
            self.absorb({a: piece for a, (_, piece) in
                         outcome.shares.items()})
        return outcome

    def absorb(self, shares):
        for agent, piece in shares.items():
            self.shares[agent] = piece_union(
                self.shares.get(agent, EMPTY), piece)

    # snapshot lifecycle ---------------------------------------------------

    def finalize_snapshot(self, snap):
        """Freeze a snapshot: the holders keep what they actually enjoy,
        everything else extracted for it rejoins the residue."""
        if snap.finalized:
            return
        for k in snap.pieces:
            active = snap.active_count(self.ctx, k)
            for entry in snap.extractions[k][active:]:
                if entry["state"] == "out":
                    entry["state"] = "returned"
                    self.residue = piece_union(self.residue, entry["piece"])
            snap.attached[k] = min(snap.attached[k], active)
        self.absorb(snap.realized_shares(self.ctx))
        snap.finalized = True
        self.snapshots.remove(snap)

    def finalize_all(self):
        for snap in list(self.snapshots):
            self.finalize_snapshot(snap)

    def return_all_extractions(self):
        """Undo the current extraction pass: every piece still out and
        unattached rejoins the residue and the tables clear."""
        for snap in self.snapshots:
            for k in snap.pieces:
                if snap.attached[k]:
                    raise FailStopError(
                        "extraction reset after attachments began")
                for entry in snap.extractions[k]:
                    if entry["state"] == "out":
                        entry["state"] = "returned"
                        self.residue = piece_union(
                            self.residue, entry["piece"])
                snap.extractions[k] = []

    # assembled views ------------------------------------------------------

    def assembled_shares(self):
        shares = {a: self.shares.get(a, EMPTY) for a in self.agents}
        for snap in self.snapshots:
            for agent, piece in snap.realized_shares(self.ctx).items():
                shares[agent] = piece_union(shares[agent], piece)
        return shares

    def pending_pieces(self):
        out = []
        for snap in self.snapshots:
            for k in snap.pieces:
                active = snap.active_count(self.ctx, k)
                for entry in snap.extractions[k][active:]:
                    if entry["state"] == "out":
                        out.append(entry["piece"])
        return out

    def allocation_view(self):
        unassigned = self.residue
        for piece in self.pending_pieces():
            unassigned = piece_union(unassigned, piece)
        return Allocation(self.assembled_shares(), unassigned, self.cake)

    def check_point(self, label):
        alloc = self.allocation_view()
        valuations = {a: self.ctx.oracles[a].valuation for a in self.agents}
        ok, witness = is_envy_free(alloc, valuations)
        if not ok:
            raise FailStopError(
                "phase %s left envy: %r" % (label, witness))
        if not conservation(alloc):
            raise FailStopError("phase %s lost cake" % (label,))
        self.ctx.stats.phase_checks += 1
        if self.ctx.trace is not None:
            self.ctx.trace.state("checked %s" % label)
        return alloc

    def residue_worthless(self):
        return all(self.ctx.oracles[a].valuation.value(self.residue) == 0
                   for a in self.agents)


def assemble_partial(ctx, agents, cake):
    """Best verified partial allocation across the live run stack; used
    when the query budget runs out mid-protocol."""
    shares = {}
    for state in ctx.frames:
        for agent, piece in state.assembled_shares().items():
            shares[agent] = piece_union(shares.get(agent, EMPTY), piece)
    for a in agents:
        shares.setdefault(a, EMPTY)
    used = EMPTY
    for piece in shares.values():
        used = piece_union(used, piece)
    return Allocation(shares, piece_subtract(cake, used), cake)


# small-n protocols --------------------------------------------------------

def _verify_full(ctx, alloc, label):
    valuations = {a: ctx.oracles[a].valuation for a in alloc.shares}
    ok, witness = is_envy_free(alloc, valuations)
    if not ok:
        raise FailStopError("%s left envy: %r" % (label, witness))
    if not conservation(alloc):
        raise FailStopError("%s lost cake" % (label,))
    if not alloc.residue.is_empty:
        raise FailStopError("%s left a residue" % (label,))


def divide_and_choose(ctx, agents, cake):
    """First agent halves the cake by his own value, second takes the
    half he prefers."""
    a, b = agents
    half = ctx.oracles[a].eval(cake) / 2
    x = ctx.oracles[a].cut_in_piece(cake, half)
    left = leftmost_prefix(cake, x)
    right = piece_subtract(cake, left)
    if ctx.oracles[b].eval(left) >= ctx.oracles[b].eval(right):
        shares = {b: left, a: right}
    else:
        shares = {b: right, a: left}
    alloc = Allocation(shares, EMPTY, cake)
    _verify_full(ctx, alloc, "divide and choose")
    return alloc


def _cut_thirds(ctx, agent, cake):
    total = ctx.oracles[agent].eval(cake)
    x1 = ctx.oracles[agent].cut_in_piece(cake, total / 3)
    x2 = ctx.oracles[agent].cut_in_piece(cake, 2 * total / 3)
    p1 = leftmost_prefix(cake, x1)
    p2 = piece_subtract(leftmost_prefix(cake, x2), p1)
    p3 = piece_subtract(cake, leftmost_prefix(cake, x2))
    return [p1, p2, p3]


def _pick_best(ctx, agent, pieces, indices):
    best = None
    for i in indices:
        v = ctx.oracles[agent].eval(pieces[i])
        if best is None or v > best[1]:
            best = (i, v)
    return best[0]


def selfridge_conway(ctx, agents, cake):
    """Three-agent full division: one agent cuts equal thirds, the
    second trims the piece he likes best down to a tie, all three pick
    with the trimmed piece constrained, then the trimmings are split
    three ways with the safe picking order."""
    p1, p2, p3 = agents
    pieces = _cut_thirds(ctx, p1, cake)
    vals2 = [ctx.oracles[p2].eval(piece) for piece in pieces]
    top = max(range(3), key=lambda i: (vals2[i], -i))
    second = max(vals2[i] for i in range(3) if i != top)
    trim = EMPTY
    if vals2[top] > second:
        excess = vals2[top] - second
        y = ctx.oracles[p2].cut_in_piece(pieces[top], excess)
        trim = leftmost_prefix(pieces[top], y)
        trim = piece_subtract(trim, piece_subtract(trim, pieces[top]))
        pieces[top] = piece_subtract(pieces[top], trim)
    shares = {}
    remaining = [0, 1, 2]
    choice3 = _pick_best(ctx, p3, pieces, remaining)
    shares[p3] = choice3
    remaining.remove(choice3)
    if not trim.is_empty and top in remaining:
        shares[p2] = top
    else:
        shares[p2] = _pick_best(ctx, p2, pieces, remaining)
    remaining.remove(shares[p2])
    shares[p1] = remaining[0]
    out = {agent: pieces[i] for agent, i in shares.items()}
    if not trim.is_empty:
        taker = p3 if shares[p3] == top else p2
        cutter = p2 if taker == p3 else p3
        t1, t2, t3 = _cut_thirds(ctx, cutter, trim)
        parts = [t1, t2, t3]
        order = [taker, p1, cutter]
        left = [0, 1, 2]
        for agent in order:
            i = _pick_best(ctx, agent, parts, left)
            out[agent] = piece_union(out[agent], parts[i])
            left.remove(i)
    alloc = Allocation(out, EMPTY, cake)
    _verify_full(ctx, alloc, "three-agent division")
    return alloc


# the orchestrated protocol -------------------------------------------------

def generate_snapshots(state, target):
    ctx = state.ctx
    while len(state.snapshots) < target:
        candidates = [a for a in state.agents
                      if ctx.oracles[a].eval(state.residue) > 0]
        if not candidates:
            return
        cutter = min(candidates,
                     key=lambda a: (state.cutter_counts[a],
                                    ctx.agent_pos[a]))
        state.run_core(cutter, as_snapshot=True)


def tighten_band(state):
    """Run Core with any agent whose bonus over some snapshot class sits
    strictly between s^2 and sqrt(s) of his residue value, until no
    bonus does.  Bonuses are fixed; residues only shrink, so each
    (agent, class) pair crosses the band at most once."""
    ctx = state.ctx
    s = state.params.threshold()
    cache = {}
    rounds = 0
    while True:
        found = None
        res_val = {a: ctx.oracles[a].eval(state.residue)
                   for a in state.agents}
        for snap in state.snapshots:
            for i in sorted(state.agents, key=ctx.agent_pos.get):
                for k in snap.classes(ctx):
                    key = (snap.sid, i, k)
                    if key not in cache:
                        own = ctx.oracles[i].eval(snap.pieces[i])
                        other = ctx.oracles[i].eval(snap.pieces[k])
                        cache[key] = own - other
                    b = cache[key]
                    r = res_val[i]
                    if b > r * s * s and b * b < s * r * r:
                        found = i
                        break
                if found:
                    break
            if found:
                break
        if found is None:
            return
        state.run_core(found)
        rounds += 1
        if rounds > 5000:
            raise FailStopError("band tightening made no progress")


def extraction_pass(state):
    """Cut bonus-matching pieces off the residue for every snapshot
    class.  A discrepant piece hands control to the gap widener: an
    agent split returns it for recursion, unanimity rewinds the pass
    and retries with the now-significant bonus excluded."""
    ctx = state.ctx
    resets = 0
    while True:
        restart = False
        for snap in list(state.snapshots):
            for k in snap.classes(ctx):
                residue, _, disc = extract_for_piece(
                    ctx, snap, k, state.residue, state.params)
                state.residue = residue
                if disc is None:
                    continue
                e = disc.piece
                state.residue = piece_subtract(state.residue, e)
                state.return_all_extractions()
                outcome = discrepancy(ctx, state, e, disc.trimmer,
                                      disc.trimmer_bonus, state.params)
                if outcome.flag:
                    return ("split", e, outcome)
                state.residue = piece_union(state.residue, e)
                ctx.stats.resets += 1
                resets += 1
                if resets > 4 * len(state.agents) ** 2 * max(
                        1, len(state.snapshots)):
                    raise FailStopError("extraction kept resetting")
                restart = True
                break
            if restart:
                break
        if not restart:
            return ("ok",)


def convert_domination(state, A):
    """Shrink the residue until every agent outside A dominates every
    agent in A.  An outsider who does not yet dominate must value the
    residue positively (envy-freeness covers the worthless case), so he
    can always cut."""
    ctx = state.ctx
    valuations = {a: ctx.oracles[a].valuation for a in state.agents}
    outsiders = [a for a in sorted(state.agents, key=ctx.agent_pos.get)
                 if a not in A]
    rounds = 0
    while True:
        alloc = state.allocation_view()
        viol = [(i, j) for i in outsiders for j in A
                if not dominates(alloc, i, j, valuations)]
        if not viol:
            return
        rounds += 1
        if rounds > 2000:
            raise FailStopError("domination conversion stalled")
        state.run_core(viol[0][0])


def _distribute_worthless(state):
    """A residue worth zero to everybody goes to the first agent."""
    if state.residue.is_empty:
        return
    first = min(state.agents, key=state.ctx.agent_pos.get)
    state.shares[first] = piece_union(state.shares[first], state.residue)
    state.residue = EMPTY


def main(ctx, agents, cake, params=None):
    """Complete envy-free allocation of the cake among the agents."""
    agents = list(agents)
    n = len(agents)
    if n == 0:
        raise FailStopError("no agents to serve")
    if cake.is_empty:
        return Allocation({a: EMPTY for a in agents}, EMPTY, cake)
    if n == 1:
        alloc = Allocation({agents[0]: cake}, EMPTY, cake)
        _verify_full(ctx, alloc, "single agent")
        return alloc
    if n == 2:
        return divide_and_choose(ctx, agents, cake)
    if n == 3:
        return selfridge_conway(ctx, agents, cake)
    if params is None or params.n != n:
        params = Params.adaptive(n) if params is None else params.for_n(n)
    state = RunState(ctx, agents, cake, params)
    ctx.frames.append(state)
    try:
        return _main_loop(state)
    finally:
        ctx.frames.remove(state)


def _main_loop(state):
    ctx = state.ctx
    params = state.params
    gen_target = params.working_set
    attempts = 0
    while True:
        attempts += 1
        if attempts > 64:
            raise FailStopError("orchestrated run made no progress")
        if state.residue_worthless():
            break
        generate_snapshots(state, min(gen_target, params.snapshot_cap))
        state.check_point("snapshots")
        if state.residue_worthless():
            break
        tighten_band(state)
        state.check_point("band")
        sub = _try_early_domination(state)
        if sub is not None:
            return sub
        result = extraction_pass(state)
        if result[0] == "split":
            # the contested piece is set aside, so the usual conservation
            # check waits until the recursive halves merge back
            return _recurse_split(state, result[1], result[2])
        state.check_point("extraction")
        try:
            A = goleft(ctx, state, params, main)
        except InsufficientSnapshots:
            state.finalize_all()
            state.check_point("regenerate")
            gen_target = min(gen_target * 2, params.snapshot_cap)
            continue
        state.finalize_all()
        state.check_point("separation")
        convert_domination(state, set(A))
        state.check_point("conversion")
        return _recurse_remainder(state, A)
    state.finalize_all()
    _distribute_worthless(state)
    alloc = Allocation(dict(state.shares), EMPTY, state.cake)
    _verify_full(ctx, alloc, "orchestrated run")
    return alloc


def _try_early_domination(state):
    ctx = state.ctx
    valuations = {a: ctx.oracles[a].valuation for a in state.agents}
    if len(state.agents) > 8:
        return None
    alloc = state.allocation_view()
    A = find_dominated_set(alloc, valuations, max_agents=8)
    if A is None or len(A) >= len(state.agents):
        return None
    A = sorted(A, key=ctx.agent_pos.get)
    state.finalize_all()
    return _recurse_remainder(state, A)


def _recurse_remainder(state, A):
    """Give the whole residue to the dominated set and assemble."""
    ctx = state.ctx
    residue = state.residue
    state.residue = EMPTY
    sub = main(ctx, A, residue, state.params)
    state.absorb(sub.shares)
    alloc = Allocation(dict(state.shares), EMPTY, state.cake)
    _verify_full(ctx, alloc, "orchestrated run")
    return alloc


def _recurse_split(state, e, outcome):
    """Serve the high-valuation camp on the contested piece and the low
    camp on the residue, then check the split actually paid off."""
    ctx = state.ctx
    state.finalize_all()
    residue = state.residue
    res_val = {a: ctx.oracles[a].valuation.value(residue)
               for a in state.agents}
    state.residue = EMPTY
    n = len(state.agents)
    sub_e = main(ctx, outcome.D, e, state.params)
    sub_r = main(ctx, outcome.D_prime, residue, state.params)
    for i in outcome.D:
        vi = ctx.oracles[i].valuation
        if vi.value(sub_e.shares[i]) < res_val[i]:
            raise FailStopError(
                "split gave %s less than his residue value" % (i,))
    for i in outcome.D_prime:
        vi = ctx.oracles[i].valuation
        if n * vi.value(e) > vi.value(residue):
            raise FailStopError(
                "split misclassified %s on the low side" % (i,))
    state.absorb(sub_e.shares)
    state.absorb(sub_r.shares)
    alloc = Allocation(dict(state.shares), EMPTY, state.cake)
    _verify_full(ctx, alloc, "orchestrated run")
    return alloc
