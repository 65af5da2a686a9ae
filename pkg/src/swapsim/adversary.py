"""Deviation strategies: edits applied on top of a party's compliant script."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

from . import contracts as ct
from .core import SimError, from_hex, hashlock
from .ledger import PublicView, TraceEvent
from .protocols import Intent, Protocol, Script, run_protocol

CLAIM_STEP_WORDS = ("claim", "redeem", "forward")


@dataclass(frozen=True)
class Omit:
    step: str

    def to_dict(self) -> dict:
        return {"omit": self.step}


@dataclass(frozen=True)
class DelayTo:
    step: str
    round: int

    def to_dict(self) -> dict:
        return {"delay": self.step, "round": self.round}


EXTRA_KINDS = ("claim_own", "claim_public", "refund", "add_clause")


@dataclass(frozen=True)
class Extra:
    round: int
    kind: str
    chain: str
    contract: str

    def __post_init__(self) -> None:
        if self.kind not in EXTRA_KINDS:
            raise ValueError(f"unknown extra action {self.kind!r}")

    def to_dict(self) -> dict:
        return {"extra": self.kind, "round": self.round, "chain": self.chain, "contract": self.contract}


Edit = Union[Omit, DelayTo, Extra]


def edit_from_dict(d: dict) -> Edit:
    if "omit" in d:
        return Omit(str(d["omit"]))
    if "delay" in d:
        return DelayTo(str(d["delay"]), int(d["round"]))
    if "extra" in d:
        return Extra(int(d["round"]), str(d["extra"]), str(d["chain"]), str(d["contract"]))
    raise SimError(f"unrecognized edit {d!r}")


@dataclass(frozen=True)
class Strategy:
    party: str
    edits: tuple[Edit, ...] = ()

    @property
    def compliant(self) -> bool:
        return not self.edits

    def label(self) -> str:
        if not self.edits:
            return f"{self.party}:compliant"
        parts = []
        for e in self.edits:
            if isinstance(e, Omit):
                parts.append(f"omit({e.step})")
            elif isinstance(e, DelayTo):
                parts.append(f"delay({e.step}->{e.round})")
            else:
                parts.append(f"{e.kind}({e.contract}@{e.round})")
        return f"{self.party}:" + "+".join(parts)

    def to_dict(self) -> dict:
        return {"party": self.party, "edits": [e.to_dict() for e in self.edits]}

    @classmethod
    def from_dict(cls, d: dict) -> "Strategy":
        return cls(str(d["party"]), tuple(edit_from_dict(e) for e in d.get("edits", ())))


class StrategyAgent(Script):
    """Wraps a compliant script and applies a strategy's edits to its output."""

    def __init__(self, script: Script, strategy: Strategy):
        super().__init__(script.party, script.secrets)
        if strategy.party != script.party:
            raise SimError(f"strategy for {strategy.party} applied to {script.party}'s script")
        self.script = script
        self.strategy = strategy
        self.steps = script.steps
        self.omitted = {e.step for e in strategy.edits if isinstance(e, Omit)}
        self.delays = {e.step: e.round for e in strategy.edits if isinstance(e, DelayTo)}
        self.extras = [e for e in strategy.edits if isinstance(e, Extra)]
        self.buffer: list[tuple[int, Intent]] = []
        rounds = [e.round for e in self.extras] + list(self.delays.values())
        self.horizon = max(rounds, default=0)

    def act(self, round: int, view: PublicView) -> list[Intent]:
        out = [it for t, it in self.buffer if t == round]
        self.buffer = [(t, it) for t, it in self.buffer if t != round]
        for it in self.script.act(round, view):
            if it.step in self.omitted:
                continue
            target = self.delays.get(it.step)
            if target is not None and round < target:
                self.buffer.append((target, it))
                continue
            out.append(it)
        for e in self.extras:
            if e.round == round:
                it = self._resolve(e, view)
                if it is not None:
                    out.append(it)
        return out

    def _resolve(self, e: Extra, view: PublicView) -> Optional[Intent]:
        if e.kind == "refund":
            return Intent("extra", e.chain, ct.Refund(e.contract))
        if e.kind == "claim_own":
            if not self.secrets:
                return None
            return Intent("extra", e.chain, ct.Claim(e.contract, self.secrets[0]))
        contract = view.contract(e.chain, e.contract)
        if contract is None:
            return None
        if e.kind == "claim_public":
            for s in view.public_secrets:
                if hashlock(s) in contract.locks():
                    return Intent("extra", e.chain, ct.Claim(e.contract, s))
            return None
        # add_clause: widen the contract with the party's own lock, or its first lock
        if not isinstance(contract, ct.EscrowContract):
            return None
        lock = hashlock(self.secrets[0]) if self.secrets else contract.clauses[0].lock
        clause = ct.Clause(self.party, lock, contract.refund_deadline + 1)
        return Intent("extra", e.chain, ct.AddClause(e.contract, clause))


def agents_for(proto: Protocol, strategies: Iterable[Strategy]) -> dict[str, Script]:
    scripts = proto.scripts()
    for s in strategies:
        if s.party not in scripts:
            raise SimError(f"unknown party {s.party!r} for protocol {proto.name}")
        scripts[s.party] = StrategyAgent(scripts[s.party], s)
    return scripts


def compliant_rounds(proto: Protocol) -> dict[tuple[str, str], int]:
    """Round each (party, step) is submitted in the all-compliant run."""
    res = run_protocol(proto)
    rounds: dict[tuple[str, str], int] = {}
    for r, party, step in res.submissions:
        rounds.setdefault((party, step), r)
    return rounds


def enumerate_strategies(proto: Protocol, party: str) -> list[Strategy]:
    """Finite deviation catalog for ``party``; the first entry is the compliant identity."""
    scripts = proto.scripts()
    if party not in scripts:
        raise SimError(f"unknown party {party!r} for protocol {proto.name}")
    steps = scripts[party].steps
    horizon = proto.horizon()
    base = compliant_rounds(proto)
    out = [Strategy(party)]
    for step in steps:
        out.append(Strategy(party, (Omit(step),)))
    # walk away at step i: omit it and everything after
    for i in range(len(steps) - 1):
        out.append(Strategy(party, tuple(Omit(s) for s in steps[i:])))
    for step in steps:
        r0 = base.get((party, step))
        if r0 is None:
            continue
        for r in range(r0 + 1, horizon + 1):
            out.append(Strategy(party, (DelayTo(step, r),)))
    has_secret = bool(scripts[party].secrets)
    for r in range(horizon + 1):
        for chain, cid in proto.contract_ids():
            if has_secret:
                out.append(Strategy(party, (Extra(r, "claim_own", chain, cid),)))
            else:
                out.append(Strategy(party, (Extra(r, "claim_public", chain, cid),)))
            out.append(Strategy(party, (Extra(r, "refund", chain, cid),)))
            out.append(Strategy(party, (Extra(r, "add_clause", chain, cid),)))
    return out


def is_claim_step(step: str) -> bool:
    return any(w in step for w in CLAIM_STEP_WORDS)


def no_clairvoyance_check(strategy: Strategy, trace: Sequence[TraceEvent]) -> bool:
    """True iff every secret ``strategy.party`` submitted was its own or already public."""
    own = {ev.action["hashlock"] for ev in trace
           if ev.actor == strategy.party and ev.action.get("type") == "make_secret"}
    first_seen: dict[str, int] = {}
    for ev in trace:
        s = ev.action.get("secret")
        if s is not None:
            first_seen.setdefault(s, ev.round)
            first_seen[s] = min(first_seen[s], ev.round)
    for ev in trace:
        s = ev.action.get("secret")
        if ev.actor != strategy.party or s is None:
            continue
        if hashlock(from_hex(s)).hex() in own:
            continue
        if first_seen[s] >= ev.round:
            return False
    return True
