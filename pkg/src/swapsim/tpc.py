"""Two-phase commit on the round clock, with crash/recover faults.

Messages sent in round ``r`` arrive at the start of round ``r+1`` and are lost
if the receiver is down. Fault events take effect at the start of their round,
before message delivery.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from .core import SimError
from .ledger import TraceEvent

COMMIT = "commit"
ABORT = "abort"
VOTE_TIMEOUT = 2  # rounds: request out, vote back
DEFAULT_COORDINATOR = "carol"
DEFAULT_PARTICIPANTS = ("alice", "bob")


class FaultScheduleError(SimError, ValueError):
    pass


@dataclass(frozen=True)
class FaultEvent:
    round: int
    node: str
    kind: str  # "crash" | "recover"

    def __post_init__(self) -> None:
        if self.kind not in ("crash", "recover"):
            raise FaultScheduleError(f"fault kind must be crash or recover, got {self.kind!r}")
        if self.round < 0:
            raise FaultScheduleError(f"negative fault round {self.round}")


@dataclass(frozen=True)
class TpcMessage:
    src: str
    dst: str
    kind: str  # prepare | vote | decision | query | reply
    value: Optional[str] = None


@dataclass
class TpcNode:
    id: str
    role: str
    up: bool = True
    # stable memory survives crashes
    prepared: bool = False
    vote: Optional[str] = None
    decision: Optional[str] = None
    decided_round: Optional[int] = None
    # volatile memory
    volatile: dict = field(default_factory=dict)

    def crash(self) -> None:
        self.up = False
        self.volatile = {}


@dataclass
class TpcOutcome:
    decisions: dict[str, Optional[str]]
    decided_round: dict[str, Optional[int]]
    status: dict[str, str]  # decision, "blocked" or "undecided"
    blocked_rounds: dict[int, tuple[str, ...]]
    trace: list[TraceEvent]

    @property
    def agreement(self) -> bool:
        return len({d for d in self.decisions.values() if d is not None}) <= 1

    def blocked_after(self, round: int) -> int:
        return sum(len(v) for r, v in self.blocked_rounds.items() if r > round)

    def trace_jsonl(self) -> str:
        return "".join(ev.to_json() + "\n" for ev in self.trace)


def validate_schedule(faults: Sequence[FaultEvent], nodes: Iterable[str]) -> list[FaultEvent]:
    nodes = list(nodes)
    up = {n: True for n in nodes}
    ordered = sorted(enumerate(faults), key=lambda ie: (ie[1].round, ie[0]))
    for _, ev in ordered:
        if ev.node not in up:
            raise FaultScheduleError(f"unknown node {ev.node!r}")
        if ev.kind == "crash" and not up[ev.node]:
            raise FaultScheduleError(f"{ev.node} crashes at round {ev.round} while already down")
        if ev.kind == "recover" and up[ev.node]:
            raise FaultScheduleError(f"{ev.node} recovers at round {ev.round} while up")
        up[ev.node] = ev.kind == "recover"
    return [ev for _, ev in ordered]


class _Sim:
    def __init__(self, coordinator: str, participants: Sequence[str], votes: Mapping[str, str]):
        self.coord = TpcNode(coordinator, "coordinator")
        self.parts = {p: TpcNode(p, "participant") for p in participants}
        self.nodes = {coordinator: self.coord, **self.parts}
        self.votes = votes
        self.inflight: list[tuple[int, TpcMessage]] = []
        self.trace: list[TraceEvent] = []
        self.round = 0

    def log(self, actor: str, action: dict, status: str = "accepted") -> None:
        self.trace.append(TraceEvent(self.round, actor, "tpc", action, {"status": status}, {}))

    def send(self, src: str, dst: str, kind: str, value: Optional[str] = None) -> None:
        self.inflight.append((self.round + 1, TpcMessage(src, dst, kind, value)))
        self.log(src, {"type": "send", "to": dst, "kind": kind, "value": value})

    def decide(self, node: TpcNode, decision: str) -> None:
        if node.decision is not None:
            if node.decision != decision:
                raise AssertionError(f"{node.id} logged {node.decision} and then {decision}")
            return
        node.decision = decision
        node.decided_round = self.round
        self.log(node.id, {"type": "log_decision", "value": decision})

    def coord_decide(self, decision: str) -> None:
        self.decide(self.coord, decision)
        for p in self.parts:
            self.send(self.coord.id, p, "decision", decision)

    # -- per-round behaviour ------------------------------------------------

    def fault(self, ev: FaultEvent) -> None:
        node = self.nodes[ev.node]
        self.log(node.id, {"type": ev.kind})
        if ev.kind == "crash":
            node.crash()
            return
        node.up = True
        if node is self.coord:
            if node.decision is not None:
                for p in self.parts:
                    self.send(node.id, p, "decision", node.decision)
            else:
                # no logged decision survives: abort is the only safe choice
                self.coord_decide(ABORT)
        elif node.decision is None:
            if node.prepared:
                node.volatile["querying"] = True
                node.volatile["next_query"] = 0
            else:
                # never voted yes, so the coordinator cannot have committed
                self.decide(node, ABORT)

    def deliver(self, msg: TpcMessage) -> None:
        node = self.nodes[msg.dst]
        if not node.up:
            self.log(msg.dst, {"type": "lost", "from": msg.src, "kind": msg.kind}, "rejected")
            return
        if node is self.coord:
            if msg.kind == "vote" and node.decision is None:
                node.volatile.setdefault("votes", {})[msg.src] = msg.value
            elif msg.kind == "query" and node.decision is not None:
                self.send(node.id, msg.src, "reply", node.decision)
            return
        if msg.kind == "prepare":
            if node.prepared:
                self.send(node.id, msg.src, "vote", "yes")
            elif node.decision is not None:
                self.send(node.id, msg.src, "vote", "no")
            elif self.votes.get(node.id) == "yes":
                node.prepared = True
                node.vote = "yes"
                self.log(node.id, {"type": "log_prepared"})
                self.send(node.id, msg.src, "vote", "yes")
            else:
                node.vote = "no"
                self.decide(node, ABORT)
                self.send(node.id, msg.src, "vote", "no")
        elif msg.kind in ("decision", "reply") and msg.value is not None:
            self.decide(node, msg.value)
            node.volatile.pop("querying", None)
        elif msg.kind == "query" and node.decision is not None:
            self.send(node.id, msg.src, "reply", node.decision)

    def step(self, node: TpcNode) -> None:
        if node is self.coord:
            v = node.volatile
            if node.decision is not None:
                return
            if not v.get("started") and self.round == 0:
                v["started"] = True
                v["deadline"] = self.round + VOTE_TIMEOUT
                for p in self.parts:
                    self.send(node.id, p, "prepare")
                return
            if not v.get("started"):
                return
            votes = v.get("votes", {})
            if any(x == "no" for x in votes.values()):
                self.coord_decide(ABORT)
            elif len(votes) == len(self.parts):
                self.coord_decide(COMMIT)
            elif self.round >= v["deadline"]:
                self.coord_decide(ABORT)
            return
        if node.volatile.get("querying") and node.decision is None:
            targets = [self.coord.id] + [p for p in self.parts if p != node.id]
            i = node.volatile["next_query"]
            node.volatile["next_query"] = i + 1
            self.send(node.id, targets[i % len(targets)], "query")

    def run_round(self, faults: Sequence[FaultEvent]) -> None:
        for ev in faults:
            self.fault(ev)
        arriving = [m for r, m in self.inflight if r == self.round]
        self.inflight = [(r, m) for r, m in self.inflight if r != self.round]
        for m in arriving:
            self.deliver(m)
        for node in self.nodes.values():
            if node.up:
                self.step(node)


def parse_votes(votes) -> dict[str, str]:
    if isinstance(votes, Mapping):
        return {k: str(v) for k, v in votes.items()}
    return {p: v for p, v in zip(DEFAULT_PARTICIPANTS, votes)}


def tpc_run(participants: Sequence[str] = DEFAULT_PARTICIPANTS,
            faults: Sequence[FaultEvent] = (),
            votes: Optional[Mapping[str, str]] = None,
            coordinator: str = DEFAULT_COORDINATOR,
            horizon: int = 24) -> TpcOutcome:
    """Run one 2PC instance for ``horizon`` rounds under a fault schedule."""
    participants = tuple(participants)
    if not participants:
        raise SimError("two-phase commit needs at least one participant")
    votes = dict(votes or {p: "yes" for p in participants})
    if set(votes) != set(participants):
        raise SimError(f"votes must cover exactly {participants}, got {sorted(votes)}")
    for p, v in votes.items():
        if v not in ("yes", "no"):
            raise SimError(f"vote for {p} must be yes or no, got {v!r}")
    schedule = validate_schedule(faults, (coordinator,) + participants)
    sim = _Sim(coordinator, participants, votes)
    blocked: dict[int, tuple[str, ...]] = {}
    for r in range(horizon):
        sim.round = r
        sim.run_round([ev for ev in schedule if ev.round == r])
        blocked[r] = tuple(p for p, n in sim.parts.items() if n.prepared and n.decision is None)
    status = {}
    for n in sim.nodes.values():
        if n.decision is not None:
            status[n.id] = n.decision
        elif n.prepared:
            status[n.id] = "blocked"
        else:
            status[n.id] = "undecided"
    return TpcOutcome(
        decisions={n.id: n.decision for n in sim.nodes.values()},
        decided_round={n.id: n.decided_round for n in sim.nodes.values()},
        status=status,
        blocked_rounds=blocked,
        trace=sim.trace,
    )


@dataclass
class BlockingReport:
    outcome: TpcOutcome
    decision_round: Optional[int]  # coordinator's logging round

    @property
    def per_round(self) -> dict[int, tuple[str, ...]]:
        return {r: v for r, v in self.outcome.blocked_rounds.items() if v}

    @property
    def blocked_after_decision(self) -> int:
        if self.decision_round is None:
            return sum(len(v) for v in self.outcome.blocked_rounds.values())
        return self.outcome.blocked_after(self.decision_round)


AFTER_PREPARE_ROUND = VOTE_TIMEOUT  # votes are in flight, no decision logged yet


def tpc_blocking_probe(participants: Sequence[str] = DEFAULT_PARTICIPANTS,
                       crash_coordinator_after_prepare: bool = True,
                       recover_at: Optional[int] = 6,
                       coordinator: str = DEFAULT_COORDINATOR,
                       horizon: int = 16) -> BlockingReport:
    faults: list[FaultEvent] = []
    if crash_coordinator_after_prepare:
        faults.append(FaultEvent(AFTER_PREPARE_ROUND, coordinator, "crash"))
        if recover_at is not None:
            faults.append(FaultEvent(recover_at, coordinator, "recover"))
    out = tpc_run(participants, faults, None, coordinator, horizon)
    return BlockingReport(out, out.decided_round[coordinator])


def enumerate_fault_schedules(nodes: Sequence[str], horizon: int = 10,
                              max_events: int = 2) -> list[tuple[FaultEvent, ...]]:
    """Every valid schedule of at most ``max_events`` crash/recover events."""
    singles = [FaultEvent(r, n, k) for r in range(horizon) for n in nodes for k in ("crash", "recover")]
    out: list[tuple[FaultEvent, ...]] = [()]
    seen = set()
    for k in range(1, max_events + 1):
        for combo in itertools.product(singles, repeat=k):
            if any(a.round > b.round for a, b in zip(combo, combo[1:])):
                continue
            key = tuple(sorted(combo, key=lambda e: (e.round, e.node, e.kind)))
            # events on different nodes in the same round commute
            if key in seen and len({e.node for e in combo}) == len(combo):
                continue
            try:
                validate_schedule(combo, nodes)
            except FaultScheduleError:
                continue
            seen.add(key)
            out.append(tuple(combo))
    return out


def parse_faults(text: str, coordinator: str = DEFAULT_COORDINATOR,
                 recover_at: int = 6) -> list[FaultEvent]:
    """Parse ``node@round:kind`` items separated by commas.

    ``node@after-prepare`` is shorthand for a crash at the round the votes are
    in flight, followed by a recovery at ``recover_at``. The name
    ``coordinator`` refers to the coordinator node.
    """
    events: list[FaultEvent] = []
    for item in filter(None, (s.strip() for s in text.split(","))):
        if "@" not in item:
            raise FaultScheduleError(f"fault {item!r} is not node@round:kind")
        node, rest = item.split("@", 1)
        node = coordinator if node == "coordinator" else node
        if rest == "after-prepare":
            events.append(FaultEvent(AFTER_PREPARE_ROUND, node, "crash"))
            events.append(FaultEvent(recover_at, node, "recover"))
            continue
        if ":" not in rest:
            raise FaultScheduleError(f"fault {item!r} is not node@round:kind")
        r, kind = rest.split(":", 1)
        try:
            rnd = int(r)
        except ValueError:
            raise FaultScheduleError(f"bad round in fault {item!r}") from None
        events.append(FaultEvent(rnd, node, kind))
    return events
