"""Neat envy-free partial allocation of pieces to agents meeting
per-agent benchmark values.

Agents are introduced one at a time.  A newcomer whose favorite piece
is free just takes it.  Otherwise the first m agents contest the m-1
tentatively held pieces: every agent raises his benchmark to his best
uncontested piece, trims every contested piece worth at least the
benchmark down to it, and the contest is resolved by giving each
contested piece to one agent at one of the placed trims while exactly
one agent is kicked to his best uncontested piece.

The resolution is found by deterministic search: kicked agent and
piece assignment are enumerated in a fixed order, and for each
candidate the piece margins start at the rightmost point the recipient
can afford and are widened leftward, one step at a time, until the
allocation is envy-free or widening is exhausted.  Widening is sound:
margins to the right of the starting point underpay the recipient, so
any envy-free solution uses margins at or left of the ones tried, and
each widening step is forced by an envy constraint every solution must
satisfy.

The search runs in two passes.  The first restricts margins to the
trims placed this round, which keeps the tie-break tags of placed
trims on the winning pieces.  If no candidate resolves there, the
second pass widens continuously: an envied agent's own piece is recut
at exactly the envied value, so margins land on indifference points no
placed trim marks.  Each continuous widening moves one margin strictly
left to the rightmost point any envy-free solution permits, so the
pass finds the pointwise narrowest solution whenever one exists.
"""

from functools import cmp_to_key
from itertools import permutations

from .errors import BenchmarkInfeasible, SubCoreFailure
from .runtime import ZERO, Benchmark, Margin
from .tiebreak import _vec_cmp


def _trim_cmp(ctx, s, t):
    """Left-to-right order on trims: coordinate first; at a coordinate
    tie the trim leaving the infinitesimally larger remainder (the
    larger entity tag) sits further left."""
    if s.x != t.x:
        return -1 if s.x < t.x else 1
    return -_vec_cmp(ctx.ledger.piece_tags.get(s, {}),
                     ctx.ledger.piece_tags.get(t, {}))


def subcore(ctx, agents, pids, benchmarks, margins):
    """Allocate to `agents` (ordered) connected parts of the pieces in
    `pids`, ignoring cake left of `margins` (pid -> Margin).  Returns
    agent -> (pid, Margin): the share is the piece right of the margin.
    """
    if len(pids) < len(agents):
        raise SubCoreFailure("fewer pieces than agents")
    ctx.stats.subcore_calls += 1
    margins = dict(margins)
    tentative = {}
    launch_pref = {}
    for a in agents:
        pid, _ = ctx.best_piece(a, pids, lambda p: margins[p])
        launch_pref[a] = pid
    for m in range(1, len(agents) + 1):
        agent_m = agents[m - 1]
        fav = launch_pref[agent_m]
        if fav not in tentative.values():
            tentative[agent_m] = fav
        else:
            _contest(ctx, tentative, margins, agents[:m], pids, benchmarks)
    result = {}
    for agent, pid in tentative.items():
        result[agent] = (pid, margins[pid])
    for agent, (pid, margin) in result.items():
        # attainment is physical; the infinitesimal tier of an entity
        # is not monotone under re-margining
        if ctx.phys(agent, pid, margin) < benchmarks[agent].value.phys:
            raise BenchmarkInfeasible(
                "agent %s got %r below benchmark %r"
                % (agent, ctx.aug(agent, pid, margin),
                   benchmarks[agent].value))
    return result


def _contest(ctx, tentative, margins, ms_agents, pids, benchmarks):
    m = len(ms_agents)
    contested = set(tentative.values())
    if len(contested) != m - 1:
        raise SubCoreFailure("contested count %d != %d" % (
            len(contested), m - 1))
    contested_sorted = sorted(contested)
    local_unc = [p for p in pids if p not in contested]
    if not local_unc:
        raise SubCoreFailure("no uncontested piece left for the contest")
    hold = {p: margins[p] for p in pids}

    def margin_of(p):
        return hold[p]

    # benchmark update: the best uncontested piece replaces a smaller
    # input benchmark, so nobody settles for less than an open piece
    bprime = {}
    for j in ms_agents:
        best = benchmarks[j]
        pid, aug = ctx.best_piece(j, local_unc, margin_of)
        if ctx.ledger.observe_comparison(
                aug, best.value, hold[pid], best.src) > 0:
            best = Benchmark(aug, hold[pid])
        bprime[j] = best

    # fresh trims: each agent marks, on every contested piece worth at
    # least his benchmark, the point leaving exactly the benchmark
    # (equality gives a zero-width trim at the current margin)
    round_trims = {p: [] for p in contested}
    for j in ms_agents:
        to_trim = [p for p in contested
                   if ctx.ledger.observe_comparison(
                       ctx.aug(j, p, hold[p]), bprime[j].value,
                       hold[p], bprime[j].src) >= 0]
        to_trim = ctx.sort_by_preference(j, to_trim, margin_of)
        new_trims = []
        for p in to_trim:
            rem = ctx.remainder(p, hold[p])
            surplus = ctx.phys(j, p, hold[p]) - bprime[j].value.phys
            if rem.is_empty:
                x = hold[p].x
            else:
                x = ctx.oracles[j].cut_in_piece(rem, surplus)
            trim = Margin(p, x, by=j)
            round_trims[p].append(trim)
            new_trims.append(trim)
        ctx.tag_trim_entities(j, new_trims, bprime[j])
    for p in contested:
        if not round_trims[p]:
            raise SubCoreFailure("contested piece %s has no trim" % p)

    outcome = _resolve(ctx, ms_agents, contested_sorted, local_unc,
                       hold, round_trims, bprime, benchmarks)
    if outcome is None:
        raise SubCoreFailure("contest has no envy-free resolution")
    assignment, chosen, kicked, kick_pid = outcome
    tentative.clear()
    for pid, agent in assignment.items():
        tentative[agent] = pid
        margins[pid] = chosen[pid]
        ctx.holding_margin[pid] = chosen[pid]
    tentative[kicked] = kick_pid


def _resolve(ctx, ms_agents, contested, local_unc, hold, round_trims,
             bprime, benchmarks):
    """First (kicked agent, piece -> recipient, piece margins) triple,
    in a fixed enumeration order, giving an envy-free allocation that
    pays every recipient his benchmark and the kicked agent his best
    uncontested piece."""
    key = cmp_to_key(lambda s, t: _trim_cmp(ctx, s, t))
    # margin chain per piece, widest (leftmost) first
    chains = {p: [hold[p]] + sorted(round_trims[p], key=key)
              for p in contested}

    def value(j, p, mg):
        return ctx.phys(j, p, mg)

    candidates = []
    for kicked in ms_agents:
        kick_pid, _ = ctx.best_piece(kicked, local_unc, lambda p: hold[p])
        kick_share = value(kicked, kick_pid, hold[kick_pid])
        if kick_share < benchmarks[kicked].value.phys:
            continue
        candidates.append((kicked, kick_pid, kick_share))
    for kicked, kick_pid, kick_share in candidates:
        recipients = [a for a in ms_agents if a != kicked]
        # start index per (piece, recipient): rightmost margin the
        # recipient can afford; None when the piece underpays him even
        # at full width
        afford = {}
        for p in contested:
            for i in recipients:
                start = None
                for idx in range(len(chains[p]) - 1, -1, -1):
                    if value(i, p, chains[p][idx]) >= bprime[i].value.phys:
                        start = idx
                        break
                afford[(p, i)] = start
        for perm in permutations(recipients):
            assignment = dict(zip(contested, perm))
            if any(afford[(p, i)] is None for p, i in assignment.items()):
                continue
            pos = {p: afford[(p, i)] for p, i in assignment.items()}
            ok = True
            while ok:
                shares = {kicked: kick_share}
                for p, i in assignment.items():
                    shares[i] = value(i, p, chains[p][pos[p]])
                moved = False
                for p in contested:
                    mg = chains[p][pos[p]]
                    holder = assignment[p]
                    for j in ms_agents:
                        if j == holder or shares[j] >= value(j, p, mg):
                            continue
                        if j == kicked:
                            ok = False
                            break
                        # widen the envier's own piece just enough
                        q = next(pp for pp, a in assignment.items()
                                 if a == j)
                        need = value(j, p, mg)
                        new = None
                        for idx in range(pos[q] - 1, -1, -1):
                            if value(j, q, chains[q][idx]) >= need:
                                new = idx
                                break
                        if new is None:
                            ok = False
                            break
                        pos[q] = new
                        moved = True
                        break
                    if not ok or moved:
                        break
                if ok and not moved:
                    chosen = {p: chains[p][pos[p]] for p in contested}
                    return assignment, chosen, kicked, kick_pid
    for kicked, kick_pid, kick_share in candidates:
        recipients = [a for a in ms_agents if a != kicked]
        for perm in permutations(recipients):
            assignment = dict(zip(contested, perm))
            coords = _chase(ctx, ms_agents, assignment, hold, bprime,
                            kicked, kick_share)
            if coords is None:
                continue
            chosen = {}
            for p, x in coords.items():
                reuse = next((mg for mg in chains[p] if mg.x == x), None)
                if reuse is None:
                    reuse = Margin(p, x, by=assignment[p])
                    ctx.ledger.register_piece(reuse)
                    ctx.ledger.tag_fresh_piece(assignment[p], reuse)
                chosen[p] = reuse
            return assignment, chosen, kicked, kick_pid
    return None


# widening steps allowed before a candidate is abandoned as divergent,
# and how often the exact limit solve is attempted along the way
_CHASE_CAP = 10000
_SOLVE_PERIOD = 32


def _chase(ctx, ms_agents, assignment, hold, bprime, kicked, kick_share):
    """Continuous-margin resolution for one (kicked, assignment)
    candidate.  Margins start at the rightmost point paying each
    recipient exactly his benchmark; while anyone envies a contested
    piece, the envier's own piece is recut at the envied value.  Each
    recut moves a margin strictly left, so the loop either reaches the
    pointwise narrowest envy-free margins or proves none exist for this
    candidate.

    Mutual envy between two pieces can make the recut sequence converge
    geometrically without reaching its limit, so periodically the limit
    is computed in closed form from the active indifference equalities
    and adopted when it verifies as envy-free."""
    def val(j, p, x):
        return ctx.phys(j, p, Margin(p, x))

    coords = {}
    for p, i in assignment.items():
        rem = ctx.remainder(p, hold[p])
        total = ctx.phys(i, p, hold[p])
        want = bprime[i].value.phys
        if total < want:
            return None
        if rem.is_empty:
            coords[p] = hold[p].x
        else:
            coords[p] = ctx.oracles[i].suffix_cut(rem, want)
    last_constraint = {}
    recut = set()
    for step in range(1, _CHASE_CAP + 1):
        shares = {kicked: kick_share}
        for p, i in assignment.items():
            shares[i] = val(i, p, coords[p])
        # kicked envy anywhere dooms the candidate: margins only move
        # left from here, which can only raise the envied values
        for p in sorted(assignment):
            if kick_share < val(kicked, p, coords[p]):
                return None
        # full sweep: every envious recipient recuts his own piece at
        # his largest envied value, so no envy constraint is starved
        moved = False
        for q in sorted(assignment):
            j = assignment[q]
            worst = None
            for p in sorted(assignment):
                if p == q:
                    continue
                envied = val(j, p, coords[p])
                if envied > shares[j] and (
                        worst is None or envied > worst[0]):
                    worst = (envied, p)
            if worst is None:
                continue
            envied, p = worst
            rem = ctx.remainder(q, hold[q])
            if rem.is_empty or ctx.phys(j, q, hold[q]) < envied:
                return None
            coords[q] = ctx.oracles[j].suffix_cut(rem, envied)
            shares[j] = envied
            last_constraint[q] = (j, p)
            recut.add(q)
            moved = True
        if not moved:
            return coords
        if step % _SOLVE_PERIOD == 0 and recut:
            active = {q: last_constraint[q] for q in recut}
            recut.clear()
            solved = _solve_limit(ctx, hold, coords, active)
            if solved is not None and _feasible(
                    ctx, ms_agents, assignment, solved, bprime,
                    kicked, kick_share):
                return solved
    raise SubCoreFailure("margin widening did not converge")


def _feasible(ctx, ms_agents, assignment, coords, bprime, kicked,
              kick_share):
    """Exact check that the margins pay every recipient his benchmark
    and nobody, the kicked agent included, strictly envies a contested
    piece."""
    def val(j, p, x):
        return ctx.phys(j, p, Margin(p, x))

    shares = {kicked: kick_share}
    for p, i in assignment.items():
        shares[i] = val(i, p, coords[p])
        if shares[i] < bprime[i].value.phys:
            return False
    for p in assignment:
        for j in ms_agents:
            if j != assignment[p] and shares[j] < val(j, p, coords[p]):
                return False
    return True


def _affine(ctx, agent, pid, hold_margin, x0):
    """(A, D, lo) with the agent's value of the piece right of x equal
    to A - D*x for x in [lo, x0]: the local affine model of the suffix
    value just left of x0.  None when x0 is at the piece's far left."""
    rem = ctx.remainder(pid, hold_margin)
    iv = None
    prev_right = None
    for it in rem.intervals:
        if it.left < x0 <= it.right:
            iv = it
            break
        if it.right <= x0:
            prev_right = it.right
    v0 = ctx.phys(agent, pid, Margin(pid, x0))
    if iv is None:
        # x0 sits in a gap between intervals: constant across the gap
        if prev_right is None:
            return None
        return (v0, ZERO, prev_right)
    val = ctx.oracles[agent].valuation
    seg = None
    for (l, r, d) in val.segments:
        if l < x0 <= r:
            seg = (l, r, d)
            break
    if seg is None:
        return None
    ctx.counter.count_eval(agent)
    D = seg[2]
    return (v0 + D * x0, D, max(seg[0], iv.left))


def _solve_limit(ctx, hold, coords, active):
    """Closed-form limit of the recut chase: for every recently recut
    piece q with active envy constraint (j, p), impose the equality
    V_j(q at x_q) = V_j(p at x_p) using the local affine models around
    the current coordinates, solve the linear system exactly, and
    return the full coordinate map.  None when the system is singular
    or the solution leaves any model's range of validity."""
    pieces = sorted(active)
    index = {q: c for c, q in enumerate(pieces)}
    n = len(pieces)
    rows = []
    lows = {q: None for q in pieces}
    for q in pieces:
        j, p = active[q]
        own = _affine(ctx, j, q, hold[q], coords[q])
        if own is None:
            return None
        a1, d1, lo1 = own
        lows[q] = lo1 if lows[q] is None else max(lows[q], lo1)
        # row: sum(coef * x) = rhs, from a1 - d1*x_q = a2 - d2*x_p
        row = [ZERO] * n
        row[index[q]] = -d1
        rhs = -a1
        if p in index:
            other = _affine(ctx, j, p, hold[p], coords[p])
            if other is None:
                return None
            a2, d2, lo2 = other
            lows[p] = lo2 if lows[p] is None else max(lows[p], lo2)
            row[index[p]] += d2
            rhs += a2
        else:
            rhs += ctx.phys(j, p, Margin(p, coords[p]))
        rows.append((row, rhs))
    mat = [list(r) + [rhs] for r, rhs in rows]
    for col in range(n):
        piv = next((r for r in range(col, n) if mat[r][col] != 0), None)
        if piv is None:
            return None
        mat[col], mat[piv] = mat[piv], mat[col]
        inv = 1 / mat[col][col]
        mat[col] = [v * inv for v in mat[col]]
        for r in range(n):
            if r != col and mat[r][col] != 0:
                f = mat[r][col]
                mat[r] = [a - f * b for a, b in zip(mat[r], mat[col])]
    out = dict(coords)
    for q in pieces:
        x = mat[index[q]][n]
        if not (lows[q] <= x <= coords[q]):
            return None
        out[q] = x
        ctx.counter.count_cut(active[q][0])
    return out
