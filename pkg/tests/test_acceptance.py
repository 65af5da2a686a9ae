"""Acceptance suite: one check per criterion, each printing a PASS/FAIL line.

Run under pytest (lines appear in the terminal summary) or directly with
``python3 tests/test_acceptance.py``.
"""
import itertools
import time
from fractions import Fraction

import pytest

from swapsim.adversary import Omit, Strategy, enumerate_strategies
from swapsim.explorer import (COMPENSATED, LOSS, MADE_WHOLE, SWAP_COMPLETED, evaluate, explore,
                              nonempty_subsets, transfer_metrics)
from swapsim.protocols import (HtlcParams, HtlcSwap, NaiveTransfer, PremiumParams, PremiumSwap,
                               TransferParams, run_protocol)
from swapsim.tpc import ABORT, COMMIT, enumerate_fault_schedules, tpc_run

RESULTS: list[str] = []


def record(num, name, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {num}: {name} ({detail})"
    RESULTS.append(line)
    print(line)
    return ok


def crit1_htlc_safety():
    proto = HtlcSwap()
    t0 = time.perf_counter()
    losses, runs = 0, 0
    for subset in nonempty_subsets(proto.parties):
        rep = explore(proto, subset)
        losses += rep.loss_count
        runs += rep.runs
    dt = time.perf_counter() - t0
    return record(1, "HTLC safety over all deviating subsets", losses == 0 and dt < 10,
                  f"{runs} runs, {losses} LOSS, {dt:.2f}s < 10s")


def crit2_bob_asleep():
    proto = HtlcSwap()
    rv, _ = evaluate(proto, [Strategy("bob", (Omit("forward"),))])
    p = proto.params.bob_amount
    want = {"alice": {"guilder": 0, "florin": p}, "bob": {"guilder": 0, "florin": -p}}
    return record(2, "Bob-asleep payoff", rv.payoff == want, f"payoff {rv.payoff}")


def crit3_timeout_criticality():
    bad = explore(HtlcSwap(HtlcParams(deadlines={"alice_escrow": 2, "bob_escrow": 2})), ["alice"])
    good = explore(HtlcSwap(), ["alice"])
    bob_bad = bad.classifications["bob"][LOSS]
    bob_good = good.classifications["bob"][LOSS]
    return record(3, "timeout criticality", bob_bad >= 1 and good.loss_count == 0,
                  f"Bob LOSS with deadlines (2,2): {bob_bad}; with (2,1): {bob_good}")


def _premium_table(params):
    proto = PremiumSwap(params)
    p_a, p_b = params.premium_a, params.premium_b
    entitled = {"alice": p_b, "bob": p_a}
    bad, comp_seen, max_dev = [], {"alice": 0, "bob": 0}, None
    for deviator in proto.parties:
        victim = next(p for p in proto.parties if p != deviator)
        for s in enumerate_strategies(proto, deviator)[1:]:
            rv, _ = evaluate(proto, [s])
            v = rv.verdicts[victim]
            if v.kind == COMPENSATED:
                comp_seen[victim] += 1
                if v.amount != entitled[victim]:
                    bad.append((s.label(), str(v)))
            elif v.kind not in (SWAP_COMPLETED, MADE_WHOLE):
                bad.append((s.label(), str(v)))
            gain = sum(rv.payoff[deviator].values())
            max_dev = gain if max_dev is None else max(max_dev, gain)
            if gain > 0:
                bad.append((s.label(), f"deviator gain {gain}"))
    return bad, comp_seen, max_dev


def crit4_premium_compensation():
    details, ok = [], True
    # asymmetric premiums so that p_a and p_b cannot be confused; principals stay
    # equal so a completed swap is worth zero at unit valuation
    for params in (PremiumParams(), PremiumParams(alice_amount=300, bob_amount=300, p_a=7, p_b=3)):
        bad, comp, max_dev = _premium_table(params)
        ok &= not bad and comp["alice"] > 0 and comp["bob"] > 0
        details.append(f"p_a={params.premium_a} p_b={params.premium_b}: {len(bad)} violations, "
                       f"compensated alice x{comp['alice']} bob x{comp['bob']}, max deviator gain {max_dev}")
    return record(4, "premium compensation table", ok, "; ".join(details))


def crit5_premium_default():
    wrong = []
    for principal in range(50, 50 * 200 + 1, 50):
        params = PremiumParams(alice_amount=principal, bob_amount=principal)
        exact = Fraction(2, 100) * principal
        if params.premium_a != exact or params.premium_b != exact:
            wrong.append(principal)
    proto = PremiumSwap(PremiumParams(alice_amount=250, bob_amount=150))
    res = run_protocol(proto)
    deposits = {ev.chain: -ev.deltas[ev.actor] for ev in res.trace
                if ev.action.get("type") == "premium_premium"}
    ok = not wrong and deposits == {"florin": 3 + 5, "guilder": 5}
    return record(5, "2% default premium", ok,
                  f"200 principals checked, {len(wrong)} inexact; deposits {deposits}")


def crit6_transfer_metrics():
    proto = NaiveTransfer()
    p = proto.params
    m = transfer_metrics(run_protocol(proto),
                         run_protocol(NaiveTransfer(TransferParams(carol_participates=False))), proto)
    ok = (m.extra_rounds == 3 and m.alice_peak_with == p.ab_amount + p.ac_amount
          and set(m.alice_rounds_after_entry) == {3, 5, 7})
    return record(6, "transfer deficiencies", ok,
                  f"extra {m.extra_rounds}, peak {m.alice_peak_with}, rounds {list(m.alice_rounds_after_entry)}")


def crit7_tpc():
    t0 = time.perf_counter()
    nodes = ("carol", "alice", "bob")
    scheds = enumerate_fault_schedules(nodes, horizon=10, max_events=2)
    divergent = invalid = 0
    for sched, votes in itertools.product(scheds, itertools.product(("yes", "no"), repeat=2)):
        out = tpc_run(("alice", "bob"), sched, dict(zip(("alice", "bob"), votes)))
        divergent += not out.agreement
        if "no" in votes and COMMIT in out.decisions.values():
            invalid += 1
    clean = tpc_run(votes={"alice": "yes", "bob": "yes"})
    commit_ok = set(clean.decisions.values()) == {COMMIT}
    abort_ok = all(set(tpc_run(votes=dict(zip(("alice", "bob"), v))).decisions.values()) == {ABORT}
                   for v in (("yes", "no"), ("no", "yes"), ("no", "no")))
    dt = time.perf_counter() - t0
    ok = divergent == 0 and invalid == 0 and commit_ok and abort_ok and dt < 5
    return record(7, "2PC agreement and validity", ok,
                  f"{len(scheds)} schedules x 4 votes, {divergent} divergent, {invalid} invalid commits, "
                  f"{dt:.2f}s < 5s")


def _swap_runs():
    protos = [HtlcSwap(), HtlcSwap(HtlcParams(deadlines={"alice_escrow": 2, "bob_escrow": 2})),
              PremiumSwap(), PremiumSwap(PremiumParams(alice_amount=300, bob_amount=300, p_a=7, p_b=3)),
              PremiumSwap(PremiumParams(alice_amount=250, bob_amount=150)),
              NaiveTransfer(), NaiveTransfer(TransferParams(carol_participates=False)),
              HtlcSwap(HtlcParams(seed="other-seed"))]
    for proto in protos:
        for party in proto.parties:
            for s in enumerate_strategies(proto, party):
                yield proto, (s,)
    htlc = HtlcSwap()
    for a, b in itertools.product(enumerate_strategies(htlc, "alice"), enumerate_strategies(htlc, "bob")):
        yield htlc, (a, b)


def crit8_conservation_determinism():
    runs = mismatched = leaks = 0
    for proto, strategies in _swap_runs():
        rv1, res1 = evaluate(proto, strategies, keep_trace=True)
        rv2, _ = evaluate(proto, strategies, keep_trace=True)
        runs += 1
        mismatched += rv1.trace_jsonl != rv2.trace_jsonl
        for chain in res1.initial.chains:
            if res1.initial.supply(chain) != res1.final.supply(chain):
                leaks += 1
    scheds = enumerate_fault_schedules(("carol", "alice", "bob"), horizon=10, max_events=2)
    for sched, votes in itertools.product(scheds, itertools.product(("yes", "no"), repeat=2)):
        v = dict(zip(("alice", "bob"), votes))
        a, b = tpc_run(faults=sched, votes=v), tpc_run(faults=sched, votes=v)
        runs += 1
        mismatched += a.trace_jsonl() != b.trace_jsonl()
    ok = mismatched == 0 and leaks == 0
    return record(8, "conservation and determinism", ok,
                  f"{runs} runs executed twice, {mismatched} trace mismatches, {leaks} supply changes")


CRITERIA = [crit1_htlc_safety, crit2_bob_asleep, crit3_timeout_criticality, crit4_premium_compensation,
            crit5_premium_default, crit6_transfer_metrics, crit7_tpc, crit8_conservation_determinism]


@pytest.mark.parametrize("check", CRITERIA, ids=[c.__name__ for c in CRITERIA])
def test_criterion(check):
    assert check()


if __name__ == "__main__":
    results = [c() for c in CRITERIA]
    raise SystemExit(0 if all(results) else 1)
