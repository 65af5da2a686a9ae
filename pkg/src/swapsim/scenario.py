"""Scenario files: JSON documents selecting a protocol, its parameters and strategies."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path
from typing import Any, Optional

from .adversary import Strategy
from .core import SimError
from .protocols import (HTLC_DEADLINES, PREMIUM_DEADLINES, TRANSFER_DEADLINES, HtlcParams, HtlcSwap,
                        NaiveTransfer, PremiumParams, PremiumSwap, Protocol, TransferParams)
from .tpc import DEFAULT_COORDINATOR, DEFAULT_PARTICIPANTS, FaultEvent, parse_votes

SCENARIO_VERSION = 1
PROTOCOL_IDS = ("tpc", "htlc", "premium", "transfer")

_PARAMS = {
    "htlc": (HtlcParams, HtlcSwap, HTLC_DEADLINES),
    "premium": (PremiumParams, PremiumSwap, PREMIUM_DEADLINES),
    "transfer": (TransferParams, NaiveTransfer, TRANSFER_DEADLINES),
}


class ScenarioError(SimError, ValueError):
    pass


def _no_duplicates(pairs):
    out = {}
    for k, v in pairs:
        if k in out:
            raise ScenarioError(f"duplicate key {k!r}")
        out[k] = v
    return out


@dataclass
class Scenario:
    protocol: str
    params: dict = field(default_factory=dict)
    chains: Optional[dict[str, dict[str, int]]] = None
    strategies: list[Strategy] = field(default_factory=list)
    valuation: dict[str, int] = field(default_factory=dict)
    seed: Optional[str] = None
    # two-phase commit only
    participants: tuple[str, ...] = DEFAULT_PARTICIPANTS
    coordinator: str = DEFAULT_COORDINATOR
    votes: dict[str, str] = field(default_factory=dict)
    faults: list[FaultEvent] = field(default_factory=list)

    def build(self, seed: Optional[str] = None) -> Protocol:
        if self.protocol not in _PARAMS:
            raise ScenarioError(f"protocol {self.protocol!r} has no swap parameters")
        params_cls, proto_cls, default_deadlines = _PARAMS[self.protocol]
        kwargs = dict(self.params)
        allowed = {f.name for f in fields(params_cls)}
        unknown = set(kwargs) - allowed
        if unknown:
            raise ScenarioError(f"unknown {self.protocol} params: {sorted(unknown)}")
        if "deadlines" in kwargs:
            extra = set(kwargs["deadlines"]) - set(default_deadlines)
            if extra:
                raise ScenarioError(f"unknown deadline keys {sorted(extra)}")
            kwargs["deadlines"] = {**default_deadlines, **kwargs["deadlines"]}
        chosen = seed or self.seed
        if chosen:
            kwargs["seed"] = chosen
        try:
            proto = proto_cls(params_cls(**kwargs))
        except (TypeError, ValueError) as exc:
            raise ScenarioError(f"bad {self.protocol} params: {exc}") from None
        if self.chains is not None:
            missing = set(proto.balances()) - set(self.chains)
            if missing:
                raise ScenarioError(f"chains missing {sorted(missing)}")
            proto.custom_balances = self.chains
        names = set(proto.parties)
        for s in self.strategies:
            if s.party not in names:
                raise ScenarioError(f"strategy for unknown party {s.party!r}")
        return proto

    def to_dict(self) -> dict:
        d: dict[str, Any] = {"version": SCENARIO_VERSION, "protocol": self.protocol}
        if self.protocol == "tpc":
            d.update(participants=list(self.participants), coordinator=self.coordinator,
                     votes=self.votes,
                     faults=[{"round": f.round, "node": f.node, "kind": f.kind} for f in self.faults])
            return d
        d["params"] = self.params
        if self.chains is not None:
            d["chains"] = self.chains
        if self.strategies:
            d["strategies"] = [s.to_dict() for s in self.strategies]
        if self.valuation:
            d["valuation"] = self.valuation
        if self.seed:
            d["seed"] = self.seed
        return d


def scenario_from_dict(doc: dict) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError("scenario must be a JSON object")
    if doc.get("version") != SCENARIO_VERSION:
        raise ScenarioError(f"unsupported scenario version {doc.get('version')!r}")
    protocol = doc.get("protocol")
    if protocol not in PROTOCOL_IDS:
        raise ScenarioError(f"protocol must be one of {PROTOCOL_IDS}, got {protocol!r}")
    try:
        if protocol == "tpc":
            participants = tuple(doc.get("participants", DEFAULT_PARTICIPANTS))
            votes = doc.get("votes") or {p: "yes" for p in participants}
            if isinstance(votes, list):
                votes = dict(zip(participants, votes))
            faults = [FaultEvent(int(f["round"]), str(f["node"]), str(f["kind"]))
                      for f in doc.get("faults", [])]
            return Scenario("tpc", participants=participants,
                            coordinator=str(doc.get("coordinator", DEFAULT_COORDINATOR)),
                            votes=parse_votes(votes), faults=faults)
        chains = doc.get("chains")
        if chains is not None:
            if not isinstance(chains, dict) or not chains:
                raise ScenarioError("chains must be a non-empty object")
            chains = {str(c): {str(p): int(a) for p, a in bal.items()} for c, bal in chains.items()}
        sc = Scenario(
            protocol,
            params=dict(doc.get("params", {})),
            chains=chains,
            strategies=[Strategy.from_dict(s) for s in doc.get("strategies", [])],
            valuation={str(k): int(v) for k, v in doc.get("valuation", {}).items()},
            seed=doc.get("seed"),
        )
    except (KeyError, TypeError, AttributeError) as exc:
        raise ScenarioError(f"malformed scenario: {exc!r}") from None
    try:
        sc.build().new_world()  # referential integrity: parties, chains, balances
    except ScenarioError:
        raise
    except SimError as exc:
        raise ScenarioError(f"bad chains: {exc}") from None
    return sc


def bundled_names() -> list[str]:
    pkg = resources.files("swapsim") / "scenarios"
    return sorted(p.name[:-5] for p in pkg.iterdir() if p.name.endswith(".json"))


def load_scenario(path: str) -> Scenario:
    """Load a scenario from a file path or a bundled name such as ``htlc``."""
    p = Path(path)
    if p.exists():
        text = p.read_text()
    elif path in bundled_names():
        text = (resources.files("swapsim") / "scenarios" / f"{path}.json").read_text()
    else:
        raise ScenarioError(f"no scenario file or bundled scenario named {path!r}")
    try:
        doc = json.loads(text, object_pairs_hook=_no_duplicates)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON: {exc}") from None
    return scenario_from_dict(doc)
