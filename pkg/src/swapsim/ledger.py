"""Simulated multi-chain world with a round clock and one-round inclusion delay.

An action submitted during round ``r`` is applied at the ``r -> r+1``
boundary and is visible to every party from round ``r+1``. It is timely for
a deadline ``d`` iff ``r < d``. Contract timeouts fire at the boundary that
enters their deadline round, after that boundary's submitted actions.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, Optional, Sequence, Union

from . import contracts as ct
from .core import SimError, check_amount, hashlock, to_hex

SYSTEM = "system"


class InvariantError(SimError, AssertionError):
    """A ledger invariant (conservation, non-negativity) was violated."""


@dataclass(frozen=True)
class SubmittedAction:
    actor: str
    chain: str
    action: ct.Action
    submit_round: int


@dataclass(frozen=True)
class TraceEvent:
    round: int
    actor: str
    chain: str
    action: dict
    result: dict
    deltas: dict

    def to_dict(self) -> dict:
        return {"round": self.round, "actor": self.actor, "chain": self.chain,
                "action": self.action, "result": self.result, "deltas": self.deltas}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))


@dataclass
class Ledger:
    balances: dict[str, int]
    contracts: dict[str, ct.Contract] = field(default_factory=dict)

    def supply(self) -> int:
        return sum(self.balances.values()) + sum(c.held() for c in self.contracts.values())


@dataclass(frozen=True)
class LedgerView:
    """Finalized state of one chain as of the start of a round."""

    chain: str
    round: int
    balances: Mapping[str, int]
    contracts: Mapping[str, ct.Contract]

    def contract(self, cid: str) -> Optional[ct.Contract]:
        return self.contracts.get(cid)


@dataclass(frozen=True)
class PublicView:
    """Everything a party may base a decision on: finalized chain state only."""

    round: int
    chains: Mapping[str, LedgerView]
    public_secrets: tuple[bytes, ...]

    def contract(self, chain: str, cid: str) -> Optional[ct.Contract]:
        view = self.chains.get(chain)
        return None if view is None else view.contract(cid)

    def secret_for(self, lock: bytes) -> Optional[bytes]:
        for s in self.public_secrets:
            if hashlock(s) == lock:
                return s
        return None


BalanceSpec = Union[Mapping[str, int], Sequence[tuple[str, int]]]


class World:
    def __init__(self, balances: Mapping[str, BalanceSpec], parties: Optional[Sequence[str]] = None):
        if not balances:
            raise SimError("scenario must list at least one chain")
        chains: dict[str, Ledger] = {}
        seen_parties: list[str] = list(parties or [])
        if len(set(seen_parties)) != len(seen_parties):
            raise SimError(f"duplicate party names in {seen_parties}")
        for chain, spec in balances.items():
            pairs = list(spec.items()) if isinstance(spec, Mapping) else list(spec)
            names = [p for p, _ in pairs]
            if len(set(names)) != len(names):
                raise SimError(f"duplicate party on chain {chain}: {names}")
            bal = {}
            for party, amount in pairs:
                try:
                    bal[party] = check_amount(amount)
                except SimError as exc:
                    raise SimError(f"bad balance for {party} on {chain}: {exc}") from None
                if party not in seen_parties:
                    if parties is not None:
                        raise SimError(f"unknown party {party} on chain {chain}")
                    seen_parties.append(party)
            chains[chain] = Ledger(bal)
        for ledger in chains.values():
            for p in seen_parties:
                ledger.balances.setdefault(p, 0)
        self.round = 0
        self.chains = chains
        self.parties: tuple[str, ...] = tuple(seen_parties)
        self.pending: list[SubmittedAction] = []
        self.trace: list[TraceEvent] = []
        self.published: dict[bytes, int] = {}
        self._supply = {name: led.supply() for name, led in chains.items()}
        self._ids = 0

    # -- construction helpers -------------------------------------------------

    def copy(self) -> "World":
        other = object.__new__(World)
        other.round = self.round
        other.chains = {n: Ledger(dict(l.balances), dict(l.contracts)) for n, l in self.chains.items()}
        other.parties = self.parties
        other.pending = list(self.pending)
        other.trace = list(self.trace)
        other.published = dict(self.published)
        other._supply = dict(self._supply)
        other._ids = self._ids
        return other

    def fresh_contract_id(self, chain: str, party: str) -> str:
        self._ids += 1
        return f"{chain}/{party}/{self._ids}"

    def register_secret(self, party: str, secret: bytes) -> None:
        """Record (publicly, by hashlock only) that ``party`` created a secret."""
        self._check_party(party)
        self.trace.append(TraceEvent(self.round, party, "", {"type": "make_secret",
                                     "hashlock": to_hex(hashlock(secret))},
                                     {"status": "accepted"}, {}))

    # -- submission and reading ----------------------------------------------

    def _check_party(self, party: str) -> None:
        if party not in self.parties:
            raise SimError(f"unknown party {party!r}")

    def _check_chain(self, chain: str) -> None:
        if chain not in self.chains:
            raise SimError(f"unknown chain {chain!r}")

    def submit(self, actor: str, chain: str, action: ct.Action) -> "World":
        self._check_party(actor)
        self._check_chain(chain)
        self.pending.append(SubmittedAction(actor, chain, action, self.round))
        return self

    def read(self, chain: str) -> LedgerView:
        self._check_chain(chain)
        led = self.chains[chain]
        return LedgerView(chain, self.round, MappingProxyType(dict(led.balances)),
                          MappingProxyType(dict(led.contracts)))

    def view(self) -> PublicView:
        return PublicView(self.round, MappingProxyType({c: self.read(c) for c in self.chains}),
                          tuple(self.published))

    def supply(self, chain: str) -> int:
        return self.chains[chain].supply()

    def live_contracts(self) -> list[ct.Contract]:
        return [c for led in self.chains.values() for c in led.contracts.values() if c.live]

    def escrowed_by(self, party: str) -> int:
        """Amount ``party`` currently has locked in live contracts, all chains summed."""
        total = 0
        for led in self.chains.values():
            for c in led.contracts.values():
                if isinstance(c, ct.EscrowContract):
                    if c.live and c.depositor == party:
                        total += c.amount
                elif c.live:
                    t = c.terms
                    if t.premium_payer == party and c.held():
                        total += t.premium_amount
                    if t.principal_payer == party and c.phase_ is ct.PremiumPhase.AWAIT_REDEEM:
                        total += t.principal_amount
        return total

    # -- the round boundary ---------------------------------------------------

    def _apply(self, sub: SubmittedAction) -> TraceEvent:
        led = self.chains[sub.chain]
        secret = ct.revealed_secret(sub.action)
        if secret is not None and secret not in self.published:
            self.published[secret] = sub.submit_round
        try:
            contract, deltas = ct.apply_action(led.contracts, sub.chain, sub.actor,
                                               sub.action, sub.submit_round)
            for party, d in deltas.items():
                if party not in led.balances:
                    raise ct.Rejected(f"unknown party {party}")
                if led.balances[party] + d < 0:
                    raise ct.Rejected(f"insufficient balance for {party}")
        except (ct.Rejected, SimError) as exc:
            return TraceEvent(sub.submit_round, sub.actor, sub.chain, sub.action.to_dict(),
                              {"status": "rejected", "reason": str(exc)}, {})
        for party, d in deltas.items():
            led.balances[party] += d
        result = {"status": "accepted"}
        if contract is not None:
            led.contracts[contract.id] = contract
            result["state"] = contract.phase
        return TraceEvent(sub.submit_round, sub.actor, sub.chain, sub.action.to_dict(),
                          result, {p: d for p, d in deltas.items() if d})

    def advance_round(self) -> "World":
        pending, self.pending = self.pending, []
        for sub in pending:
            self.trace.append(self._apply(sub))
        new_round = self.round + 1
        for name, led in self.chains.items():
            for cid, c in list(led.contracts.items()):
                if not c.live:
                    continue
                done, deltas = c.expire(new_round)
                if done is c:
                    continue
                led.contracts[cid] = done
                for party, d in deltas.items():
                    led.balances[party] += d
                self.trace.append(TraceEvent(new_round, SYSTEM, name,
                                             {"type": "timeout", "contract": cid},
                                             {"status": "accepted", "state": done.phase},
                                             {p: d for p, d in deltas.items() if d}))
        self.round = new_round
        self._check_invariants()
        return self

    def _check_invariants(self) -> None:
        for name, led in self.chains.items():
            if any(v < 0 for v in led.balances.values()):
                raise InvariantError(f"negative balance on {name}: {led.balances}")
            if led.supply() != self._supply[name]:
                raise InvariantError(f"supply on {name} changed: {self._supply[name]} -> {led.supply()}")

    # -- serialization ----------------------------------------------------------

    def trace_jsonl(self) -> str:
        return "".join(ev.to_json() + "\n" for ev in self.trace)


def world_new(balances: Mapping[str, BalanceSpec], parties: Optional[Iterable[str]] = None) -> World:
    return World(balances, None if parties is None else list(parties))


def submit(world: World, actor: str, chain: str, action: ct.Action) -> World:
    return world.submit(actor, chain, action)


def advance_round(world: World) -> World:
    return world.advance_round()


def read(world: World, chain: str) -> LedgerView:
    return world.read(chain)
