"""Command line front end: instance I/O, protocol runs, trace logging,
standalone verification, and the brute-force oracle suites.

Exit codes: 0 all verdicts pass, 1 a verdict fails, 2 parse or
configuration error, 3 query budget exhausted (an envy-free partial
allocation is still reported), 4 internal fail-stop.
"""

import argparse
import sys

from gmpy2 import mpq

from .bruteforce import (all_simple_cycles, dominated_set_naive,
                         enumerate_valid_graphs, neat_benchmark_feasible)
from .cake import (EMPTY, WHOLE, format_piece, piece_subtract, piece_union)
from .core import core
from .errors import (BudgetExhausted, FailStopError, FairsliceError,
                     ParseError)
from .goleft import find_cycle_with_T_node
from .orchestrator import (assemble_partial, divide_and_choose, main as
                           run_main, selfridge_conway)
from .partial import connected_pieces, proportional_ef_partial
from .runtime import ProtocolContext, zero_benchmark
from .snapshots import Params
from .subcore import subcore
from .valuation import (QueryCounter, Valuation, make_oracles,
                        piece_from_pairs, random_instance)
from .verify import (Allocation, conservation, is_connected, is_envy_free,
                     is_neat, is_proportional, find_dominated_set)


# file formats ---------------------------------------------------------------

def _frac(tok, line_no):
    try:
        return mpq(tok)
    except (ValueError, ZeroDivisionError):
        raise ParseError("bad fraction %r" % tok, line_no)


def parse_valuation_text(text):
    """agent/seg line format -> {agent id: Valuation}."""
    blocks = {}
    order = []
    current = None
    start_line = {}
    for line_no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] == "agent":
            if len(parts) != 2:
                raise ParseError("agent line needs exactly one id", line_no)
            name = parts[1]
            current = int(name) if name.lstrip("-").isdigit() else name
            if current in blocks:
                raise ParseError("duplicate agent %s" % name, line_no)
            blocks[current] = []
            order.append(current)
            start_line[current] = line_no
        elif parts[0] == "seg":
            if current is None:
                raise ParseError("seg before any agent line", line_no)
            if len(parts) != 4:
                raise ParseError("seg needs left right density", line_no)
            l, r, d = (_frac(p, line_no) for p in parts[1:])
            if not (0 <= l < r <= 1):
                raise ParseError("segment [%s,%s] not inside [0,1]" % (l, r),
                                 line_no)
            if d < 0:
                raise ParseError("negative density", line_no)
            blocks[current].append((l, r, d))
        else:
            raise ParseError("unknown directive %r" % parts[0], line_no)
    if not blocks:
        raise ParseError("no agents in valuation file", 1)
    out = {}
    for agent in order:
        segs = sorted(blocks[agent])
        if not segs or segs[0][0] != 0 or segs[-1][1] != 1 or any(
                a[1] != b[0] for a, b in zip(segs, segs[1:])):
            raise ParseError("segments of agent %s do not partition [0,1]"
                             % agent, start_line[agent])
        out[agent] = Valuation(segs)
    return out


def parse_allocation_text(text, agents):
    """share line format -> {agent id: Piece}; unlisted agents get the
    empty piece."""
    pairs = {a: [] for a in agents}
    for line_no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] != "share":
            raise ParseError("unknown directive %r" % parts[0], line_no)
        if len(parts) != 4:
            raise ParseError("share needs agent left right", line_no)
        name = parts[1]
        agent = int(name) if name.lstrip("-").isdigit() else name
        if agent not in pairs:
            raise ParseError("unknown agent %s" % name, line_no)
        l, r = _frac(parts[2], line_no), _frac(parts[3], line_no)
        if not (0 <= l <= r <= 1):
            raise ParseError("interval [%s,%s] not inside [0,1]" % (l, r),
                             line_no)
        pairs[agent].append((l, r))
    return {a: piece_from_pairs(ps) if ps else EMPTY
            for a, ps in pairs.items()}


class TraceWriter:
    """Machine-readable query log: exact fractions, one line per query,
    plus state-transition lines."""

    def __init__(self, fh):
        self.fh = fh

    def query_cut(self, agent, x, target, y):
        self.fh.write("Q %s CUT %s %s -> %s\n" % (agent, x, target, y))

    def query_eval(self, agent, piece, v):
        self.fh.write("Q %s EVAL %s -> %s\n" % (agent, format_piece(piece), v))

    def state(self, label):
        self.fh.write("S %s\n" % label)


# reporting ------------------------------------------------------------------

def print_report(out, alloc, valuations, counter, stats=None,
                 check_connected=False):
    """Human-readable run report; every verdict recomputed from the
    final allocation, nothing copied from the engine."""
    agents = sorted(alloc.shares)
    out.write("== allocation ==\n")
    for a in agents:
        out.write("share %s: %s\n" % (a, format_piece(alloc.shares[a])))
    out.write("residue: %s\n" % format_piece(alloc.residue))
    out.write("== valuations of shares ==\n")
    for a in agents:
        row = " ".join(str(valuations[a].value(alloc.shares[b]))
                       for b in agents)
        out.write("agent %s: %s (residue %s)\n"
                  % (a, row, valuations[a].value(alloc.residue)))
    out.write("== queries ==\n")
    for a in agents:
        out.write("agent %s: cut %d eval %d\n"
                  % (a, counter.cut.get(a, 0), counter.eval.get(a, 0)))
    out.write("total queries: %d\n" % counter.total)
    if stats is not None:
        out.write("== protocol events ==\n")
        out.write("core runs %d, resets %d, exchanges %d, attachments %d, "
                  "separations %d, phase checks %d\n"
                  % (stats.core_runs, stats.resets, stats.exchanges,
                     stats.attachments, stats.separations,
                     stats.phase_checks))
    out.write("== verdicts ==\n")
    ef, witness = is_envy_free(alloc, valuations)
    verdicts = [("envy-free", ef)]
    if alloc.residue.is_empty:
        verdicts.append(("proportional", is_proportional(alloc, valuations)))
    verdicts.append(("conservation", conservation(alloc)))
    if check_connected:
        verdicts.append(("connected", all(is_connected(alloc.shares[a])
                                          for a in agents)))
    ok = True
    for name, verdict in verdicts:
        out.write("%s: %s\n" % (name, "pass" if verdict else "FAIL"))
        ok = ok and verdict
    if not ef and witness is not None:
        out.write("envy witness: %r\n" % (witness,))
    return ok


# run ------------------------------------------------------------------------

def _load_valuations(args):
    if args.input:
        with open(args.input, "r", encoding="utf-8") as fh:
            return parse_valuation_text(fh.read())
    if args.random:
        n, k = args.random
        return dict(enumerate(random_instance(n, k, args.seed)))
    raise ParseError("either --input or --random is required")


def cmd_run(args, out):
    valuations = _load_valuations(args)
    agents = sorted(valuations)
    n = len(agents)
    counter = QueryCounter(max_queries=args.max_queries)
    oracles = make_oracles(valuations, counter)
    trace_fh = open(args.trace, "w", encoding="utf-8") if args.trace else None
    trace = TraceWriter(trace_fh) if trace_fh else None
    if trace:
        for o in oracles.values():
            o.trace = trace
    ctx = ProtocolContext(agents, oracles, counter)
    ctx.trace = trace
    if args.mode == "strict":
        if args.sig_threshold:
            sys.stderr.write(
                "warning: --sig-threshold only applies in adaptive mode; "
                "ignored\n")
        params = Params.strict(n, B=args.strict_B)
    else:
        params = Params.adaptive(
            n, sig_threshold=mpq(args.sig_threshold)
            if args.sig_threshold else None)
    try:
        if trace:
            trace.state("begin %s n=%d" % (args.protocol, n))
        alloc, check_connected = _dispatch(args, ctx, agents, params)
        if trace:
            trace.state("end %s" % args.protocol)
    except BudgetExhausted:
        alloc = assemble_partial(ctx, agents, WHOLE)
        if trace:
            trace.state("budget exhausted")
        out.write("query budget exhausted; reporting the partial "
                  "allocation reached\n")
        ok = print_report(out, alloc, valuations, counter, ctx.stats)
        ef, _ = is_envy_free(alloc, valuations)
        if not ef or not conservation(alloc):
            raise FailStopError("partial allocation failed verification")
        return 3
    finally:
        if trace_fh:
            trace_fh.close()
    ok = print_report(out, alloc, valuations, counter, ctx.stats,
                      check_connected=check_connected)
    return 0 if ok else 1


def _dispatch(args, ctx, agents, params):
    protocol = args.protocol
    if protocol == "divide-choose":
        if len(agents) != 2:
            raise ParseError("divide-choose needs exactly 2 agents")
        return divide_and_choose(ctx, agents, WHOLE), False
    if protocol == "selfridge-conway":
        if len(agents) != 3:
            raise ParseError("selfridge-conway needs exactly 3 agents")
        return selfridge_conway(ctx, agents, WHOLE), False
    if protocol == "core":
        cutter = agents[0]
        if args.cutter is not None:
            cutter = int(args.cutter) if args.cutter.lstrip("-").isdigit() \
                else args.cutter
            if cutter not in agents:
                raise ParseError("unknown cutter %r" % args.cutter)
        outcome = core(ctx, cutter, agents, WHOLE)
        return outcome.allocation(origin=WHOLE), False
    if protocol == "prop-ef":
        return proportional_ef_partial(ctx, agents, WHOLE), False
    if protocol == "connected":
        return connected_pieces(ctx, agents, WHOLE), True
    if protocol == "main":
        return run_main(ctx, agents, WHOLE, params), False
    raise ParseError("unknown protocol %r" % protocol)


# verify ---------------------------------------------------------------------

def cmd_verify(args, out):
    with open(args.valuations, "r", encoding="utf-8") as fh:
        valuations = parse_valuation_text(fh.read())
    with open(args.allocation, "r", encoding="utf-8") as fh:
        shares = parse_allocation_text(fh.read(), sorted(valuations))
    used = EMPTY
    for piece in shares.values():
        used = piece_union(used, piece)
    alloc = Allocation(shares, piece_subtract(WHOLE, used), WHOLE)
    counter = QueryCounter()
    ok = print_report(out, alloc, valuations, counter)
    return 0 if ok else 1


# oracle suites ----------------------------------------------------------------

def _suite_subcore(out, cases):
    from .cake import Interval, Piece
    agree = 0
    for seed in range(cases):
        valuations = dict(enumerate(random_instance(3, 2, seed=seed)))
        counter = QueryCounter()
        oracles = make_oracles(valuations, counter)
        ctx = ProtocolContext(sorted(valuations), oracles, counter)
        pieces = []
        for j in range(4):
            p = Piece((Interval(mpq(j, 4), mpq(j + 1, 4)),))
            pid, _ = ctx.new_piece(p)
            pieces.append((pid, p))
        agents = [0, 1, 2]
        benchmarks = {a: zero_benchmark() for a in agents}
        margins = {pid: ctx.holding_margin[pid] for pid, _ in pieces}
        res = subcore(ctx, agents, [pid for pid, _ in pieces], benchmarks,
                      margins)
        assignment = {a: (pid, ctx.remainder(pid, m))
                      for a, (pid, m) in res.items()}
        neat = is_neat(pieces, assignment, valuations)
        feasible = neat_benchmark_feasible(
            pieces, agents, valuations, {a: mpq(0) for a in agents})
        if neat and feasible:
            agree += 1
    out.write("subcore vs enumerator: %d/%d agree\n" % (agree, cases))
    return agree == cases


def _suite_domination(out, cases):
    agree = 0
    for seed in range(cases):
        n = 3 + seed % 4
        valuations = dict(enumerate(random_instance(n, 3, seed=seed)))
        counter = QueryCounter()
        oracles = make_oracles(valuations, counter)
        ctx = ProtocolContext(sorted(valuations), oracles, counter)
        outcome = core(ctx, 0, sorted(valuations), WHOLE)
        alloc = outcome.allocation(origin=WHOLE)
        a = find_dominated_set(alloc, valuations)
        b = dominated_set_naive(alloc.shares, alloc.residue, valuations)
        if a == b:
            agree += 1
    out.write("dominated set vs naive search: %d/%d agree\n"
              % (agree, cases))
    return agree == cases


def _suite_cycles(out):
    checked = 0
    bad = 0
    for n in (1, 2, 3, 4):
        for g in enumerate_valid_graphs(n):
            cycle = find_cycle_with_T_node(g)
            full = g.holders_of_full()
            valid = all_simple_cycles(g.edges)
            m = min(range(len(cycle)), key=lambda i: cycle[i])
            rotated = tuple(cycle[m:] + cycle[:m])
            checked += 1
            if rotated not in valid or all(v in full for v in cycle):
                bad += 1
    out.write("cycle finder vs exhaustive search: %d graphs, %d disagree\n"
              % (checked, bad))
    return bad == 0


def cmd_oracle(args, out):
    ok = True
    suites = args.suites or ["subcore", "domination", "cycles"]
    if "subcore" in suites:
        ok = _suite_subcore(out, args.cases) and ok
    if "domination" in suites:
        ok = _suite_domination(out, args.cases) and ok
    if "cycles" in suites:
        ok = _suite_cycles(out) and ok
    out.write("oracle suites: %s\n" % ("pass" if ok else "FAIL"))
    return 0 if ok else 1


# entry point ------------------------------------------------------------------

def build_parser():
    ap = argparse.ArgumentParser(
        prog="fairslice",
        description="Exact envy-free cake cutting protocols and verifiers")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a protocol")
    run.add_argument("--protocol", required=True,
                     choices=["main", "core", "prop-ef", "connected",
                              "divide-choose", "selfridge-conway"])
    run.add_argument("--input", help="valuation file")
    run.add_argument("--random", nargs=2, type=int, metavar=("N", "K"),
                     help="random instance: N agents, K segments")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--mode", choices=["strict", "adaptive"],
                     default="adaptive")
    run.add_argument("--sig-threshold", help="adaptive threshold p/q")
    run.add_argument("--strict-B",
                     dest="strict_B", type=int,
                     help="explicit round bound making strict mode runnable")
    run.add_argument("--max-queries", type=int)
    run.add_argument("--trace", help="machine-readable trace file")
    run.add_argument("--cutter", help="cutter id (core protocol only)")

    ver = sub.add_parser("verify", help="verify a third-party allocation")
    ver.add_argument("allocation")
    ver.add_argument("valuations")

    orc = sub.add_parser("oracle", help="run the brute-force oracle suites")
    orc.add_argument("--cases", type=int, default=100)
    orc.add_argument("--suites", nargs="*",
                     choices=["subcore", "domination", "cycles"])
    return ap


def main(argv=None, out=None):
    out = out if out is not None else sys.stdout
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args, out)
        if args.command == "verify":
            return cmd_verify(args, out)
        return cmd_oracle(args, out)
    except ParseError as e:
        sys.stderr.write("parse error: %s\n" % e)
        return 2
    except BudgetExhausted as e:
        sys.stderr.write("%s\n" % e)
        return 3
    except FailStopError as e:
        sys.stderr.write("fail-stop: %s\n" % e)
        return 4
    except FairsliceError as e:
        sys.stderr.write("error: %s\n" % e)
        return 4


if __name__ == "__main__":
    sys.exit(main())
