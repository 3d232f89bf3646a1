"""Gap widening around a piece agents disagree about.

When a candidate extraction piece is significant to some agents but
not others, the disagreement can be amplified: shrink the residue with
Core rounds until every agent values the piece either at n times his
residue value or at most a 1/n fraction of it.  If both camps survive,
the agent set splits and each camp can be served recursively on the
part of the cake it cares about; if everyone lands on one side, the
bonus that produced the piece has become significant and the caller
simply retries extraction.
"""

from .errors import FailStopError
from .snapshots import is_significant


class DiscrepancyOutcome:
    """flag True: D values the piece at >= n residues each, D_prime at
    <= 1/n residue each, both nonempty.  flag False: unanimity; the
    piece goes back to the residue and the triggering bonus is now
    significant."""

    def __init__(self, flag, D=None, D_prime=None):
        self.flag = flag
        self.D = D
        self.D_prime = D_prime


def _in_band(ctx, i, piece, residue, n):
    v = ctx.oracles[i].eval(piece)
    r = ctx.oracles[i].eval(residue)
    return r / n < v < r * n


def discrepancy(ctx, state, e, u, b_u, params):
    """Resolve a discrepant piece e reported with trimmer u's bonus b_u.

    state carries the live residue and allocation; e must already be
    set aside (out of the residue) and every still-unattached extracted
    piece of the current pass must have rejoined the residue before the
    call.  Core rounds here allocate cake for real; they merge into the
    state like any other round.
    """
    agents = state.agents
    n = len(agents)
    rounds = 0
    cap = 200 * n
    while True:
        band = [i for i in sorted(agents, key=ctx.agent_pos.get)
                if _in_band(ctx, i, e, state.residue, n)]
        if not band:
            break
        if rounds >= cap:
            raise FailStopError(
                "gap widening made no progress after %d rounds" % rounds)
        # any band member values the residue above v/n > 0, so he can cut
        state.run_core(band[rounds % len(band)])
        rounds += 1
    D, D_prime = [], []
    for i in sorted(agents, key=ctx.agent_pos.get):
        v = ctx.oracles[i].eval(e)
        r = ctx.oracles[i].eval(state.residue)
        if v >= r * n:
            D.append(i)
        elif n * v <= r:
            D_prime.append(i)
        else:
            raise FailStopError("agent %s still inside the band" % (i,))
    if D and D_prime:
        return DiscrepancyOutcome(True, D, D_prime)
    if not is_significant(ctx, u, b_u, state.residue, params):
        raise FailStopError(
            "unanimity without the triggering bonus becoming significant")
    return DiscrepancyOutcome(False)
