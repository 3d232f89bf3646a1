"""Snapshot exchanges and ordered attachment of extracted pieces.

A working set of isomorphic snapshots is ground down by repeated
trade-and-attach events until some class of pieces runs out of
extractions to attach.  At that point every agent who ever held that
class can be dominated by the rest, and the protocol returns that set.

The exchange structure is a directed graph on the agents: an edge from
u to v means u would accept the class v currently holds (with its
attachments) at no loss.  Nodes holding fully attached classes are
accepted by everyone; every other node has exactly one incoming edge.
Cycles in this graph drive lossless trades.
"""

from gmpy2 import mpq

from .cake import EMPTY, piece_union
from .errors import FailStopError, InsufficientSnapshots
from .snapshots import bonus, find_isomorphic_subset

ZERO = mpq(0)


def _ceil_div(a, b):
    return -(-a // b)


class PermutationGraph:
    """Directed agent graph with the acceptance invariants.

    full_classes holds the classes whose every extraction has been
    attached; their holders are accepted by every node.  node_class
    maps each agent to the class he currently holds in the working set.
    """

    def __init__(self, nodes, edges=None, node_class=None, full_classes=None):
        self.nodes = list(nodes)
        self.edges = {v: set(es) for v, es in edges.items()} \
            if edges is not None else {v: {v} for v in self.nodes}
        self.node_class = dict(node_class) if node_class is not None \
            else {v: v for v in self.nodes}
        self.full_classes = set(full_classes) if full_classes is not None \
            else set()

    def holders_of_full(self):
        return {v for v in self.nodes
                if self.node_class[v] in self.full_classes}

    def t_nodes(self):
        full = self.holders_of_full()
        return [v for v in self.nodes if v not in full]

    def in_edges(self, v):
        return [u for u in self.nodes if v in self.edges[u]]

    def assert_invariants(self):
        full = self.holders_of_full()
        for v in self.nodes:
            preds = self.in_edges(v)
            if not preds:
                raise FailStopError("node %s lost all incoming edges" % (v,))
            if v not in full and len(preds) != 1:
                raise FailStopError(
                    "tradeable node %s has in-degree %d" % (v, len(preds)))
            if v in full:
                for u in self.nodes:
                    if v not in self.edges[u]:
                        raise FailStopError(
                            "node %s does not accept fully attached %s"
                            % (u, v))


def find_cycle_with_T_node(g):
    """A simple cycle containing at least one tradeable node, found by
    walking unique incoming edges backwards from the first tradeable
    node until the walk revisits itself or reaches a node everyone
    accepts.  Returned as [v0..vm-1] with an edge v_t -> v_{t+1 mod m}.
    """
    g.assert_invariants()
    full = g.holders_of_full()
    tnodes = [v for v in g.nodes if v not in full]
    if not tnodes:
        raise InsufficientSnapshots("no tradeable node remains")
    chain = [tnodes[0]]
    while True:
        preds = g.in_edges(chain[-1])
        p = preds[0]
        if p in chain:
            idx = chain.index(p)
            return [p] + chain[:idx:-1]
        if p in full:
            # the chain start accepts p, closing the loop through it
            return [p] + chain[::-1]
        chain.append(p)


def exchange_along_cycle(ctx, g, cycle, working):
    """Rotate class ownership along the cycle in every snapshot of the
    working set: each node takes the class of the node it points to,
    and incoming edges follow the classes.  Every agent's value for his
    holding in every snapshot is provably unchanged; this is asserted
    exactly after the move."""
    m = len(cycle)
    before = None
    if m > 1:
        before = [snap.realized_shares(ctx) for snap in working]
        new_class = {cycle[t]: g.node_class[cycle[(t + 1) % m]]
                     for t in range(m)}
        taker_of = {cycle[(t + 1) % m]: cycle[t] for t in range(m)}
        rewrites = []
        cycset = set(cycle)
        for w in g.nodes:
            for v in g.edges[w]:
                if v in cycset:
                    rewrites.append((w, v, taker_of[v]))
        for w, v, _ in rewrites:
            g.edges[w].discard(v)
        for w, _, nv in rewrites:
            g.edges[w].add(nv)
        g.node_class.update(new_class)
        for agent, cls in new_class.items():
            for snap in working:
                snap.holder[cls] = agent
                snap.history[cls].add(agent)
    ctx.stats.exchanges += 1
    if before is not None:
        for snap, old in zip(working, before):
            new = snap.realized_shares(ctx)
            for agent in set(old) | set(new):
                va = ctx.oracles[agent].valuation
                if va.value(old.get(agent, EMPTY)) != va.value(
                        new.get(agent, EMPTY)):
                    raise FailStopError(
                        "exchange changed the value of agent %s in "
                        "snapshot %s" % (agent, snap.sid))


def attach_next(ctx, state, g, working, holder, params, main_recursion):
    """One attachment event on the class the holder node owns.

    Two rounds of snapshot discards pay for the attachment: agents not
    yet covered by the attachments each bank their best remaining
    surplus snapshots, and agents already covered each bank the
    snapshots where the incoming piece is most valuable; the banked
    incoming pieces are divided among the covered agents by a nested
    run.  The piece then counts as attached in every surviving
    snapshot, and the graph gains an edge from its extractor to the
    holder.  Returns the surviving working set."""
    k = g.node_class[holder]
    snap0 = working[0]
    l = snap0.attached[k]
    for snap in working:
        if snap.attached[k] != l:
            raise FailStopError("working set lost attachment uniformity")
        if len(snap.extractions[k]) <= l:
            raise FailStopError("working set lost extraction uniformity")
    agents = sorted(state.agents, key=ctx.agent_pos.get)
    n = len(agents)
    order = sorted(agents, key=lambda a: snap0.position(ctx, k, a))
    working = list(working)

    def attached_value(agent, snap):
        v = ZERO
        for entry in snap.extractions[k][:l]:
            if entry["state"] == "out":
                v += ctx.oracles[agent].eval(entry["piece"])
        return v

    counts1 = []
    phase1 = order[l:]
    for idx, o in enumerate(phase1):
        c = len(phase1) - idx
        q = _ceil_div(len(working), c + 1)
        ranked = sorted(
            working,
            key=lambda snap: bonus(ctx, snap, o, k) - attached_value(o, snap),
            reverse=True)
        for snap in ranked[:q]:
            working.remove(snap)
            state.finalize_snapshot(snap)
        counts1.append(q)
        if not working:
            raise InsufficientSnapshots("working set emptied mid-discard")
    ctx.stats.quota_events.append(("surplus", tuple(counts1), len(working)))
    if counts1 and min(counts1) < len(working):
        raise FailStopError("discard quota fell below the survivors")

    phase2 = order[:l]
    if phase2:
        counts2 = []
        banked = []
        for idx, r in enumerate(phase2):
            c = len(phase2) - idx
            q = _ceil_div(n * len(working), n * c + 1)
            ranked = sorted(
                working,
                key=lambda snap: ctx.oracles[r].eval(
                    snap.extractions[k][l]["piece"]),
                reverse=True)
            for snap in ranked[:q]:
                working.remove(snap)
                banked.append(snap)
            counts2.append(q)
            if not working:
                raise InsufficientSnapshots("working set emptied mid-bank")
        ctx.stats.quota_events.append(("bank", tuple(counts2), len(working)))
        if min(counts2) < n * len(working):
            raise FailStopError("bank quota fell below n times the survivors")
        pool = EMPTY
        for snap in banked:
            entry = snap.extractions[k][l]
            if entry["state"] == "out":
                entry["state"] = "aggregated"
                pool = piece_union(pool, entry["piece"])
        for snap in banked:
            state.finalize_snapshot(snap)
        if not pool.is_empty:
            sub = main_recursion(ctx, phase2, pool, params)
            state.absorb(sub.shares)

    for snap in working:
        snap.attached[k] = l + 1
    extractor = snap0.extractions[k][l]["agent"]
    g.edges[holder].discard(holder)
    g.edges[extractor].add(holder)
    if snap0.attached[k] == n - 1 and len(snap0.extractions[k]) == n - 1:
        g.full_classes.add(k)
        for u in g.nodes:
            g.edges[u].add(holder)
    ctx.stats.attachments += 1
    return working


def goleft(ctx, state, params, main_recursion):
    """Run exchanges and attachments on a working set of isomorphic
    snapshots until some held class has nothing left to attach; return
    the set of agents who ever held that class."""
    working = find_isomorphic_subset(ctx, state.snapshots,
                                     params.working_set)
    if working is None:
        raise InsufficientSnapshots(
            "no isomorphism class of size %d" % params.working_set)
    agents = sorted(state.agents, key=ctx.agent_pos.get)
    n = len(agents)
    g = PermutationGraph(agents)
    limit = len(working) + n * n + 4
    for _ in range(limit):
        cycle = find_cycle_with_T_node(g)
        exchange_along_cycle(ctx, g, cycle, working)
        state.check_point("exchange")
        full = g.holders_of_full()
        tradeable = [v for v in cycle if v not in full]
        if not tradeable:
            raise FailStopError("exchange cycle lost its tradeable node")
        i = tradeable[0]
        k = g.node_class[i]
        snap0 = working[0]
        if snap0.attached[k] >= len(snap0.extractions[k]):
            ctx.stats.separations += 1
            A = set()
            for snap in working:
                A |= snap.history[k]
            A = sorted(A, key=ctx.agent_pos.get)
            if len(A) >= n:
                raise FailStopError("every agent held the separating class")
            return A
        working = attach_next(ctx, state, g, working, i, params,
                              main_recursion)
        state.check_point("attachment")
    raise FailStopError("exchange loop exceeded its event bound")
