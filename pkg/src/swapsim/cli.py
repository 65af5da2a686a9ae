"""Command-line driver: ``swapsim run | explore | tpc | metrics``.

Exit codes: 0 success, 2 malformed input, 3 a compliant party ended in LOSS
(``tpc`` exits 1 when agreement fails).
"""
from __future__ import annotations

import argparse
import itertools
import json
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from .core import SimError
from .ledger import InvariantError
from .explorer import evaluate, explore, net_value, transfer_metrics
from .protocols import DEFAULT_MAX_ROUNDS, NaiveTransfer, run_protocol
from .scenario import Scenario, ScenarioError, load_scenario
from .tpc import (DEFAULT_COORDINATOR, DEFAULT_PARTICIPANTS, FaultScheduleError,
                  enumerate_fault_schedules, parse_faults, tpc_run)

EXIT_OK = 0
EXIT_DISAGREE = 1
EXIT_BAD_INPUT = 2
EXIT_LOSS = 3


def _emit(fmt: str, doc: dict, table: str) -> None:
    if fmt == "json":
        print(json.dumps(doc, indent=2, sort_keys=True))
    else:
        print(table)


def _write_trace(path: Optional[str], jsonl: str) -> None:
    if path:
        Path(path).write_text(jsonl)


# -- run ---------------------------------------------------------------------

def _run_table(sc: Scenario, rv) -> str:
    lines = [f"protocol {sc.protocol}"]
    for s in rv.strategies:
        lines.append(f"strategy {s.label()}")
    chains = sorted({c for d in rv.payoff.values() for c in d})
    head = f"{'party':<10}" + "".join(f"{c:>10}" for c in chains)
    if sc.valuation:
        head += f"{'net':>8}"
    lines.append(head + "  verdict")
    for party, deltas in rv.payoff.items():
        row = f"{party:<10}" + "".join(f"{deltas[c]:>+10d}" for c in chains)
        if sc.valuation:
            row += f"{net_value(deltas, sc.valuation):>+8d}"
        v = rv.verdicts.get(party)
        lines.append(row + "  " + (str(v) if v else "deviating"))
    return "\n".join(lines)


def cmd_run(args) -> int:
    sc = load_scenario(args.scenario)
    if sc.protocol == "tpc":
        return _tpc(sc.participants, sc.coordinator, sc.votes, sc.faults, args)
    proto = sc.build(args.seed)
    rv, _ = evaluate(proto, sc.strategies, sc.valuation or None, args.max_rounds, keep_trace=True)
    _write_trace(args.trace, rv.trace_jsonl)
    doc = rv.to_dict()
    doc["protocol"] = sc.protocol
    if sc.valuation:
        doc["net"] = {p: net_value(d, sc.valuation) for p, d in rv.payoff.items()}
    _emit(args.format, doc, _run_table(sc, rv))
    return EXIT_LOSS if rv.has_loss else EXIT_OK


# -- explore -----------------------------------------------------------------

def _explore_tpc(sc: Scenario, args) -> int:
    nodes = (sc.coordinator,) + tuple(sc.participants)
    schedules = enumerate_fault_schedules(nodes, horizon=10, max_events=2)
    runs = divergent = 0
    bad = []
    for sched in schedules:
        for combo in itertools.product(("yes", "no"), repeat=len(sc.participants)):
            votes = dict(zip(sc.participants, combo))
            out = tpc_run(sc.participants, sched, votes, sc.coordinator)
            runs += 1
            if not out.agreement:
                divergent += 1
                bad.append({"faults": [f.__dict__ for f in sched], "votes": votes,
                            "decisions": out.decisions})
    doc = {"protocol": "tpc", "schedules": len(schedules), "runs": runs,
           "divergent": divergent, "counterexamples": bad}
    _emit(args.format, doc, f"tpc  schedules {len(schedules)}  runs {runs}  divergent {divergent}")
    return EXIT_OK if divergent == 0 else EXIT_LOSS


def cmd_explore(args) -> int:
    sc = load_scenario(args.scenario)
    if sc.protocol == "tpc":
        return _explore_tpc(sc, args)
    proto = sc.build(args.seed)
    deviating = [p.strip() for p in (args.deviating or "").split(",") if p.strip()]
    if not deviating:
        raise ScenarioError("--deviating needs at least one party")
    unknown = set(deviating) - set(proto.parties)
    if unknown:
        raise ScenarioError(f"unknown deviating parties {sorted(unknown)}")
    report = explore(proto, deviating, sc.valuation or None, args.max_rounds)
    if args.counterexamples:
        out_dir = Path(args.counterexamples)
        out_dir.mkdir(parents=True, exist_ok=True)
        for i, cx in enumerate(report.counterexamples):
            doc = replace(sc, strategies=[]).to_dict()
            doc["strategies"] = cx["strategies"]
            if args.seed:
                doc["seed"] = args.seed
            (out_dir / f"counterexample-{i:04d}.json").write_text(json.dumps(doc, indent=2) + "\n")
    _emit(args.format, report.to_dict(), report.table())
    return EXIT_LOSS if report.loss_count else EXIT_OK


# -- tpc ---------------------------------------------------------------------

def _tpc(participants, coordinator, votes, faults, args) -> int:
    out = tpc_run(participants, faults, votes, coordinator)
    _write_trace(args.trace, out.trace_jsonl())
    blocked = {r: list(v) for r, v in out.blocked_rounds.items() if v}
    doc = {"decisions": out.decisions, "decided_round": out.decided_round,
           "status": out.status, "blocked_rounds": blocked, "agreement": out.agreement}
    lines = [f"{'node':<10}{'status':>10}{'round':>8}"]
    for n, st in out.status.items():
        r = out.decided_round[n]
        lines.append(f"{n:<10}{st:>10}{'-' if r is None else r:>8}")
    lines.append("blocked: " + (", ".join(f"r{r}:{'+'.join(v)}" for r, v in blocked.items()) or "none"))
    lines.append(f"agreement: {'yes' if out.agreement else 'NO'}")
    _emit(args.format, doc, "\n".join(lines))
    return EXIT_OK if out.agreement else EXIT_DISAGREE


def cmd_tpc(args) -> int:
    participants = tuple(p.strip() for p in args.participants.split(",") if p.strip())
    faults = parse_faults(args.faults or "", coordinator=args.coordinator)
    votes = [v.strip() for v in args.votes.split(",")] if args.votes else ["yes"] * len(participants)
    if len(votes) != len(participants):
        raise ScenarioError(f"{len(votes)} votes for {len(participants)} participants")
    return _tpc(participants, args.coordinator, dict(zip(participants, votes)), faults, args)


# -- metrics -----------------------------------------------------------------

def cmd_metrics(args) -> int:
    sc = load_scenario(args.scenario)
    if sc.protocol != "transfer":
        raise ScenarioError("metrics applies to transfer scenarios only")
    proto = sc.build(args.seed)
    alone = NaiveTransfer(replace(proto.params, carol_participates=False))
    alone.custom_balances = proto.custom_balances
    m = transfer_metrics(run_protocol(proto, max_rounds=args.max_rounds),
                         run_protocol(alone, max_rounds=args.max_rounds), proto)
    doc = m.to_dict()
    _emit(args.format, doc, "\n".join(f"{k:<26}{v}" for k, v in doc.items()))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="swapsim", description="Cross-chain swap and 2PC simulator")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, trace=True):
        p.add_argument("--format", choices=("json", "table"), default="table")
        p.add_argument("--seed", default=None, help="seed string for secret generation")
        p.add_argument("--max-rounds", type=int, default=DEFAULT_MAX_ROUNDS)
        if trace:
            p.add_argument("--trace", metavar="PATH", help="write the JSONL trace here")

    p = sub.add_parser("run", help="execute one scenario")
    p.add_argument("scenario", help="scenario file or bundled name (htlc, premium, transfer, tpc)")
    common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("explore", help="sweep the deviation catalog")
    p.add_argument("scenario")
    p.add_argument("--deviating", help="comma-separated parties")
    p.add_argument("--counterexamples", metavar="DIR", help="write replayable LOSS scenarios here")
    common(p, trace=False)
    p.set_defaults(func=cmd_explore)

    p = sub.add_parser("tpc", help="run two-phase commit under a fault schedule")
    p.add_argument("--faults", default="", help='e.g. "coordinator@after-prepare" or "alice@2:crash,alice@5:recover"')
    p.add_argument("--votes", default="", help="e.g. yes,no")
    p.add_argument("--participants", default=",".join(DEFAULT_PARTICIPANTS))
    p.add_argument("--coordinator", default=DEFAULT_COORDINATOR)
    common(p)
    p.set_defaults(func=cmd_tpc)

    p = sub.add_parser("metrics", help="transfer-protocol cost metrics")
    p.add_argument("scenario")
    common(p, trace=False)
    p.set_defaults(func=cmd_metrics)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_BAD_INPUT if exc.code else EXIT_OK
    if getattr(args, "max_rounds", 1) < 1:
        print("swapsim: --max-rounds must be positive", file=sys.stderr)
        return EXIT_BAD_INPUT
    try:
        return args.func(args)
    except InvariantError:
        raise  # a simulator bug, not bad input
    except (ScenarioError, FaultScheduleError, SimError, ValueError) as exc:
        print(f"swapsim: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
