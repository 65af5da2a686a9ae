"""Exhaustive strategy sweeps, payoffs and safety/compensation verdicts."""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from .adversary import Strategy, agents_for, enumerate_strategies
from .core import SimError
from .ledger import World
from .protocols import (CAROL_ENTRY_ROUND, DEFAULT_MAX_ROUNDS, HtlcParams, HtlcSwap, NaiveTransfer,
                        Protocol, Role, RunResult, run_protocol)

SWAP_COMPLETED = "SwapCompleted"
MADE_WHOLE = "MadeWholeRefund"
COMPENSATED = "CompensatedAsVictim"
LOSS = "LOSS"
CLASSES = (SWAP_COMPLETED, MADE_WHOLE, COMPENSATED, LOSS)

Payoff = dict[str, dict[str, int]]


def payoffs(initial: World, final: World) -> Payoff:
    """Per-(party, chain) balance change; every contract must be terminal."""
    live = final.live_contracts()
    if live:
        raise SimError(f"contracts still live: {[c.id for c in live]}")
    out: Payoff = {}
    for party in initial.parties:
        out[party] = {chain: final.chains[chain].balances.get(party, 0) - led.balances.get(party, 0)
                      for chain, led in initial.chains.items()}
    return out


def net_value(deltas: Mapping[str, int], valuation: Optional[Mapping[str, int]] = None) -> int:
    valuation = valuation or {}
    return sum(d * valuation.get(chain, 1) for chain, d in deltas.items())


@dataclass(frozen=True)
class Verdict:
    kind: str
    amount: int = 0
    details: str = ""

    def to_dict(self) -> dict:
        d: dict = {"kind": self.kind}
        if self.kind == COMPENSATED:
            d["amount"] = self.amount
        if self.details:
            d["details"] = self.details
        return d

    def __str__(self) -> str:
        if self.kind == COMPENSATED:
            return f"{COMPENSATED}({self.amount})"
        if self.kind == LOSS:
            return f"{LOSS}({self.details})"
        return self.kind


def classify_party(deltas: Mapping[str, int], role: Role,
                   valuation: Optional[Mapping[str, int]] = None) -> Verdict:
    """Match one party's final deltas against the outcome patterns, in order."""
    d_own = deltas.get(role.own_chain, 0)
    d_ctr = deltas.get(role.counter_chain, 0)
    if d_ctr >= role.counter_amount and d_own >= -role.own_amount:
        return Verdict(SWAP_COMPLETED)
    if all(v == 0 for v in deltas.values()):
        return Verdict(MADE_WHOLE)
    gain = net_value(deltas, valuation)
    if d_own >= 0 and gain > 0 and gain in role.entitlements:
        return Verdict(COMPENSATED, gain)
    detail = ", ".join(f"{c}:{v:+d}" for c, v in sorted(deltas.items()))
    return Verdict(LOSS, details=detail)


def classify(payoff: Payoff, roles: Mapping[str, Role], compliant: Iterable[str],
             valuation: Optional[Mapping[str, int]] = None) -> dict[str, Verdict]:
    return {p: classify_party(payoff[p], roles[p], valuation) for p in compliant}


@dataclass
class RunVerdict:
    strategies: tuple[Strategy, ...]
    payoff: Payoff
    verdicts: dict[str, Verdict]
    resolution: dict[str, int]
    lockup: dict[str, int]
    trace_jsonl: str = ""

    @property
    def has_loss(self) -> bool:
        return any(v.kind == LOSS for v in self.verdicts.values())

    def to_dict(self) -> dict:
        return {
            "strategies": [s.to_dict() for s in self.strategies],
            "labels": [s.label() for s in self.strategies],
            "payoff": self.payoff,
            "verdicts": {p: v.to_dict() for p, v in self.verdicts.items()},
            "resolution": self.resolution,
            "lockup": self.lockup,
        }


def resolution_rounds(world: World) -> dict[str, int]:
    """Round at which each party's last involved contract reached a terminal state."""
    out = {p: 0 for p in world.parties}
    for led in world.chains.values():
        for c in led.contracts.values():
            involved = _involved(c)
            for p in involved:
                if p in out and c.closed_round is not None:
                    out[p] = max(out[p], c.closed_round)
    return out


def _involved(c) -> set[str]:
    if hasattr(c, "depositor"):
        return {c.depositor, c.beneficiary}
    return {c.terms.premium_payer, c.terms.principal_payer}


def principal_lockup(world: World) -> dict[str, int]:
    """Per party, the longest stretch (in rounds) its principal sat in a contract."""
    out = {p: 0 for p in world.parties}
    for led in world.chains.values():
        for c in led.contracts.values():
            if c.closed_round is None:
                continue
            if hasattr(c, "depositor"):
                owner, start = c.depositor, c.opened_round
            elif c.principal_round is not None:
                owner, start = c.terms.principal_payer, c.principal_round
            else:
                continue
            out[owner] = max(out[owner], c.closed_round - start)
    return out


def principal_release_round(world: World) -> dict[str, int]:
    out = {p: 0 for p in world.parties}
    for led in world.chains.values():
        for c in led.contracts.values():
            if c.closed_round is None:
                continue
            if hasattr(c, "depositor"):
                owner = c.depositor
            elif c.principal_round is not None:
                owner = c.terms.principal_payer
            else:
                continue
            out[owner] = max(out[owner], c.closed_round)
    return out


def evaluate(proto: Protocol, strategies: Sequence[Strategy],
             valuation: Optional[Mapping[str, int]] = None,
             max_rounds: int = DEFAULT_MAX_ROUNDS, keep_trace: bool = False) -> tuple[RunVerdict, RunResult]:
    res = run_protocol(proto, agents_for(proto, strategies), max_rounds=max_rounds)
    pay = payoffs(res.initial, res.final)
    deviating = {s.party for s in strategies if not s.compliant}
    compliant = [p for p in proto.parties if p not in deviating]
    verdicts = classify(pay, proto.roles(), compliant, valuation)
    rv = RunVerdict(tuple(strategies), pay, verdicts, resolution_rounds(res.final),
                    principal_lockup(res.final), res.final.trace_jsonl() if keep_trace else "")
    return rv, res


@dataclass
class SafetyReport:
    protocol: str
    deviating: tuple[str, ...]
    catalog_size: dict[str, int]
    runs: int = 0
    classifications: dict[str, dict[str, int]] = field(default_factory=dict)
    unverdicted: int = 0
    lockup: dict[str, dict[str, int]] = field(default_factory=dict)
    counterexamples: list[dict] = field(default_factory=list)
    deviator_max_gain: dict[str, int] = field(default_factory=dict)

    @property
    def loss_count(self) -> int:
        return sum(c.get(LOSS, 0) for c in self.classifications.values())

    def to_dict(self) -> dict:
        return {
            "protocol": self.protocol,
            "deviating": list(self.deviating),
            "catalog_size": self.catalog_size,
            "runs": self.runs,
            "classifications": self.classifications,
            "unverdicted": self.unverdicted,
            "lockup": self.lockup,
            "deviator_max_gain": self.deviator_max_gain,
            "counterexamples": self.counterexamples,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def table(self) -> str:
        lines = [f"protocol {self.protocol}  deviating {','.join(self.deviating)}  runs {self.runs}",
                 "catalog " + "  ".join(f"{p}={n}" for p, n in self.catalog_size.items())]
        header = f"{'party':<10}" + "".join(f"{c:>22}" for c in CLASSES) + f"{'max lockup':>12}"
        lines.append(header)
        for party, counts in self.classifications.items():
            row = f"{party:<10}" + "".join(f"{counts.get(c, 0):>22}" for c in CLASSES)
            row += f"{self.lockup.get(party, {}).get('max_rounds', 0):>12}"
            lines.append(row)
        if self.unverdicted:
            lines.append(f"unverdicted runs (no compliant party): {self.unverdicted}")
        lines.append(f"LOSS counterexamples: {len(self.counterexamples)}")
        for cx in self.counterexamples[:10]:
            lines.append("  " + " | ".join(cx["labels"]) + "  -> " +
                         ", ".join(f"{p}={v['kind']}" for p, v in cx["verdicts"].items()))
        return "\n".join(lines)


def explore(proto: Protocol, deviating: Iterable[str], valuation: Optional[Mapping[str, int]] = None,
            max_rounds: int = DEFAULT_MAX_ROUNDS) -> SafetyReport:
    """Run every combination of catalog strategies for the deviating parties."""
    deviating = tuple(p for p in proto.parties if p in set(deviating))
    unknown = set(deviating) - set(proto.parties)
    if unknown:
        raise SimError(f"unknown parties {sorted(unknown)}")
    catalogs = {p: enumerate_strategies(proto, p) for p in deviating}
    report = SafetyReport(proto.name, deviating, {p: len(c) for p, c in catalogs.items()})
    # a deviating party playing the identity strategy is compliant in that run
    for p in proto.parties:
        report.classifications[p] = {c: 0 for c in CLASSES}
        report.lockup[p] = {"max_rounds": 0, "max_release_round": 0}
    for combo in itertools.product(*(catalogs[p] for p in deviating)):
        rv, res = evaluate(proto, combo, valuation, max_rounds)
        report.runs += 1
        if not rv.verdicts:
            report.unverdicted += 1
        for p, v in rv.verdicts.items():
            report.classifications[p][v.kind] += 1
            lock = report.lockup[p]
            lock["max_rounds"] = max(lock["max_rounds"], rv.lockup[p])
            lock["max_release_round"] = max(lock["max_release_round"],
                                            principal_release_round(res.final)[p])
        for s in combo:
            if not s.compliant:
                gain = net_value(rv.payoff[s.party], valuation)
                prev = report.deviator_max_gain.get(s.party)
                report.deviator_max_gain[s.party] = gain if prev is None else max(prev, gain)
        if rv.has_loss:
            report.counterexamples.append(rv.to_dict())
    return report


def nonempty_subsets(parties: Sequence[str]) -> list[tuple[str, ...]]:
    return [c for k in range(1, len(parties) + 1) for c in itertools.combinations(parties, k)]


# ---------------------------------------------------------------------------
# Transfer protocol deficiency metrics
# ---------------------------------------------------------------------------

@dataclass
class TransferMetrics:
    resolution_with: int
    resolution_without: int
    extra_rounds: int
    plain_swap_resolution: int
    plain_swap_horizon: int
    transfer_horizon: int
    alice_peak_with: int
    alice_peak_without: int
    plain_swap_peak: int
    alice_rounds_after_entry: tuple[int, ...]
    alice_rounds_without: tuple[int, ...]

    @property
    def horizon_extra(self) -> int:
        return self.transfer_horizon - self.plain_swap_horizon

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["alice_rounds_after_entry"] = list(self.alice_rounds_after_entry)
        d["alice_rounds_without"] = list(self.alice_rounds_without)
        d["horizon_extra"] = self.horizon_extra
        return d


def _last_terminal_round(world: World) -> int:
    return max((c.closed_round or 0) for led in world.chains.values() for c in led.contracts.values())


def _accepted_rounds(world: World, party: str) -> list[int]:
    return sorted({ev.round for ev in world.trace
                   if ev.actor == party and ev.result.get("status") == "accepted"
                   and ev.action.get("type") != "make_secret"})


def transfer_metrics(with_carol: RunResult, without_carol: RunResult,
                     proto: Optional[NaiveTransfer] = None) -> TransferMetrics:
    proto = proto or NaiveTransfer()
    p = proto.params
    baseline_proto = HtlcSwap(HtlcParams(alice=p.alice, bob=p.bob, guilder=p.guilder, florin=p.florin,
                                         alice_amount=p.ab_amount, bob_amount=p.ba_amount))
    baseline = run_protocol(baseline_proto)
    entry = min((ev.round for ev in with_carol.final.trace
                 if ev.actor == p.carol and ev.action.get("type") == "deploy_escrow"),
                default=CAROL_ENTRY_ROUND)
    res_with = _last_terminal_round(with_carol.final)
    res_without = _last_terminal_round(without_carol.final)
    d = p.deadlines
    return TransferMetrics(
        resolution_with=res_with,
        resolution_without=res_without,
        extra_rounds=res_with - res_without,
        plain_swap_resolution=_last_terminal_round(baseline.final),
        plain_swap_horizon=baseline_proto.horizon(),
        transfer_horizon=max(d["AB"], d["BA"]),
        alice_peak_with=max(r[p.alice] for r in with_carol.escrowed),
        alice_peak_without=max(r[p.alice] for r in without_carol.escrowed),
        plain_swap_peak=max(r[p.alice] for r in baseline.escrowed),
        alice_rounds_after_entry=tuple(r for r in _accepted_rounds(with_carol.final, p.alice) if r > entry),
        alice_rounds_without=tuple(_accepted_rounds(without_carol.final, p.alice)),
    )
