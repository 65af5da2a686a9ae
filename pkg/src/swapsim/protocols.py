"""Compliant per-party scripts for each protocol and the deterministic runner.

Scripts are small stateful objects. On each round they receive a
:class:`~swapsim.ledger.PublicView` (finalized chain state only) and return the
intents they want to submit, each tagged with the protocol step it belongs to.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Optional, Sequence

from . import contracts as ct
from .core import hashlock, make_secret
from .ledger import PublicView, World

DEFAULT_MAX_ROUNDS = 16
PREMIUM_RATE_PERCENT = 2


@dataclass(frozen=True)
class Intent:
    step: str
    chain: str
    action: ct.Action


class Script:
    """Base class: a party's compliant decision rule."""

    party: str
    steps: tuple[str, ...] = ()

    def __init__(self, party: str, secrets: Sequence[bytes] = ()):
        self.party = party
        self.secrets = tuple(secrets)
        self.done: set[str] = set()

    def act(self, round: int, view: PublicView) -> list[Intent]:
        raise NotImplementedError

    def _once(self, step: str, intents: list[Intent], out: list[Intent]) -> None:
        if step not in self.done:
            self.done.add(step)
            out.extend(intents)


class Idle(Script):
    def act(self, round, view):
        return []


@dataclass
class Role:
    """What a party stakes and expects, used to classify outcomes."""

    own_chain: str
    own_amount: int
    counter_chain: str
    counter_amount: int
    entitlements: tuple[int, ...] = ()


class Protocol:
    """A protocol instance: parties, initial world, scripts and outcome roles."""

    name: str = ""
    parties: tuple[str, ...] = ()
    custom_balances: Optional[Mapping[str, Mapping[str, int]]] = None  # replaces balances() if set

    def balances(self) -> dict[str, dict[str, int]]:
        raise NotImplementedError

    def scripts(self) -> dict[str, Script]:
        raise NotImplementedError

    def roles(self) -> dict[str, Role]:
        raise NotImplementedError

    def contract_ids(self) -> list[tuple[str, str]]:
        """(chain, contract id) of every contract the protocol may create."""
        raise NotImplementedError

    def horizon(self) -> int:
        """Last deadline of any protocol contract."""
        raise NotImplementedError

    def secret_owners(self) -> dict[str, tuple[bytes, ...]]:
        raise NotImplementedError

    def new_world(self) -> World:
        bal = self.balances() if self.custom_balances is None else self.custom_balances
        world = World({c: dict(b) for c, b in bal.items()}, list(self.parties))
        for party, secrets in self.secret_owners().items():
            for s in secrets:
                world.register_secret(party, s)
        return world


def _escrow_matches(c, depositor, beneficiary, amount, clauses) -> bool:
    return (isinstance(c, ct.EscrowContract) and c.live and c.depositor == depositor
            and c.beneficiary == beneficiary and c.amount == amount
            and tuple(c.clauses[:len(clauses)]) == tuple(clauses))


# ---------------------------------------------------------------------------
# Hashed timelock swap
# ---------------------------------------------------------------------------

HTLC_DEADLINES = {"alice_escrow": 2, "bob_escrow": 1}


@dataclass(frozen=True)
class HtlcParams:
    alice: str = "alice"
    bob: str = "bob"
    guilder: str = "guilder"
    florin: str = "florin"
    alice_amount: int = 100
    bob_amount: int = 100
    # timeouts in rounds, counted from the first round both escrows can be visible
    deadlines: Mapping[str, int] = field(default_factory=lambda: dict(HTLC_DEADLINES))
    commit_start: int = 2
    seed: str = "swapsim"

    def __post_init__(self) -> None:
        d = self.deadlines
        if set(d) != set(HTLC_DEADLINES):
            raise ValueError(f"htlc deadlines need keys {sorted(HTLC_DEADLINES)}, got {sorted(d)}")
        if min(d.values()) <= 0:
            raise ValueError("htlc deadlines must be positive")

    @property
    def alice_deadline(self) -> int:
        return self.commit_start + self.deadlines["alice_escrow"]

    @property
    def bob_deadline(self) -> int:
        return self.commit_start + self.deadlines["bob_escrow"]


class HtlcSwap(Protocol):
    name = "htlc"

    def __init__(self, params: Optional[HtlcParams] = None):
        self.params = p = params or HtlcParams()
        self.parties = (p.alice, p.bob)
        self.secret = make_secret(f"{p.seed}/{p.alice}/htlc")
        self.lock = hashlock(self.secret)
        self.alice_cid = f"{p.guilder}/htlc/{p.alice}"
        self.bob_cid = f"{p.florin}/htlc/{p.bob}"

    def balances(self):
        p = self.params
        return {p.guilder: {p.alice: p.alice_amount, p.bob: 0},
                p.florin: {p.alice: 0, p.bob: p.bob_amount}}

    def alice_clause(self) -> ct.Clause:
        return ct.Clause(self.params.alice, self.lock, self.params.alice_deadline)

    def bob_clause(self) -> ct.Clause:
        return ct.Clause(self.params.alice, self.lock, self.params.bob_deadline)

    def scripts(self):
        p = self.params
        return {p.alice: HtlcAlice(self), p.bob: HtlcBob(self)}

    def roles(self):
        p = self.params
        return {p.alice: Role(p.guilder, p.alice_amount, p.florin, p.bob_amount),
                p.bob: Role(p.florin, p.bob_amount, p.guilder, p.alice_amount)}

    def contract_ids(self):
        return [(self.params.guilder, self.alice_cid), (self.params.florin, self.bob_cid)]

    def horizon(self):
        return max(self.params.alice_deadline, self.params.bob_deadline)

    def secret_owners(self):
        return {self.params.alice: (self.secret,)}


class HtlcAlice(Script):
    steps = ("escrow", "claim")

    def __init__(self, proto: HtlcSwap):
        super().__init__(proto.params.alice, (proto.secret,))
        self.proto = proto

    def act(self, round, view):
        pr, p, out = self.proto, self.proto.params, []
        if round == 0:
            self._once("escrow", [Intent("escrow", p.guilder, ct.DeployEscrow(
                pr.alice_cid, p.bob, p.alice_amount, (pr.alice_clause(),)))], out)
        bob_escrow = view.contract(p.florin, pr.bob_cid)
        if (_escrow_matches(bob_escrow, p.bob, p.alice, p.bob_amount, (pr.bob_clause(),))
                and round < p.bob_deadline):
            self._once("claim", [Intent("claim", p.florin, ct.Claim(pr.bob_cid, pr.secret))], out)
        return out


class HtlcBob(Script):
    steps = ("escrow", "forward")

    def __init__(self, proto: HtlcSwap):
        super().__init__(proto.params.bob)
        self.proto = proto

    def act(self, round, view):
        pr, p, out = self.proto, self.proto.params, []
        alice_escrow = view.contract(p.guilder, pr.alice_cid)
        ok = _escrow_matches(alice_escrow, p.alice, p.bob, p.alice_amount, (pr.alice_clause(),))
        # escrow only while Alice can still see it and claim in time
        if ok and round + 1 < p.bob_deadline:
            self._once("escrow", [Intent("escrow", p.florin, ct.DeployEscrow(
                pr.bob_cid, p.alice, p.bob_amount, (pr.bob_clause(),)))], out)
        secret = view.secret_for(pr.lock)
        if ok and secret is not None and round < p.alice_deadline:
            self._once("forward", [Intent("forward", p.guilder, ct.Claim(pr.alice_cid, secret))], out)
        return out


def script_htlc_swap(params: Optional[HtlcParams] = None) -> dict[str, Script]:
    return HtlcSwap(params).scripts()


# ---------------------------------------------------------------------------
# Two-party swap with premiums
# ---------------------------------------------------------------------------

PREMIUM_DEADLINES = {
    "alice_premium": 1, "bob_premium": 2, "alice_principal": 3,
    "bob_principal": 4, "alice_redeem": 5, "bob_redeem": 6,
}


def default_premium(principal: int) -> int:
    return principal * PREMIUM_RATE_PERCENT // 100


@dataclass(frozen=True)
class PremiumParams:
    alice: str = "alice"
    bob: str = "bob"
    guilder: str = "guilder"
    florin: str = "florin"
    alice_amount: int = 100  # Alice's principal, guilders
    bob_amount: int = 100    # Bob's principal, florins
    p_a: Optional[int] = None  # owed by Alice if Bob is the victim
    p_b: Optional[int] = None  # owed by Bob if Alice is the victim
    deadlines: Mapping[str, int] = field(default_factory=lambda: dict(PREMIUM_DEADLINES))
    seed: str = "swapsim"

    def __post_init__(self) -> None:
        d = self.deadlines
        if set(d) != set(PREMIUM_DEADLINES):
            raise ValueError(f"premium deadlines need keys {sorted(PREMIUM_DEADLINES)}")
        order = [d[k] for k in PREMIUM_DEADLINES]
        if any(a >= b for a, b in zip(order, order[1:])) or order[0] <= 0:
            raise ValueError(f"premium deadlines must be strictly increasing, got {order}")

    @property
    def premium_a(self) -> int:
        return default_premium(self.bob_amount) if self.p_a is None else self.p_a

    @property
    def premium_b(self) -> int:
        return default_premium(self.alice_amount) if self.p_b is None else self.p_b


class PremiumSwap(Protocol):
    name = "premium"

    def __init__(self, params: Optional[PremiumParams] = None):
        self.params = p = params or PremiumParams()
        self.parties = (p.alice, p.bob)
        self.secret = make_secret(f"{p.seed}/{p.alice}/premium")
        self.lock = hashlock(self.secret)
        self.florin_cid = f"{p.florin}/premium"
        self.guilder_cid = f"{p.guilder}/premium"
        d = p.deadlines
        self.florin_terms = ct.PremiumTerms(
            premium_payer=p.alice, premium_amount=p.premium_a + p.premium_b,
            principal_payer=p.bob, principal_amount=p.bob_amount, lock=self.lock,
            premium_deadline=d["alice_premium"], principal_deadline=d["bob_principal"],
            redeem_deadline=d["alice_redeem"])
        self.guilder_terms = ct.PremiumTerms(
            premium_payer=p.bob, premium_amount=p.premium_b,
            principal_payer=p.alice, principal_amount=p.alice_amount, lock=self.lock,
            premium_deadline=d["bob_premium"], principal_deadline=d["alice_principal"],
            redeem_deadline=d["bob_redeem"])

    def balances(self):
        p = self.params
        return {p.guilder: {p.alice: p.alice_amount, p.bob: p.premium_b},
                p.florin: {p.alice: p.premium_a + p.premium_b, p.bob: p.bob_amount}}

    def scripts(self):
        p = self.params
        return {p.alice: PremiumAlice(self), p.bob: PremiumBob(self)}

    def roles(self):
        p = self.params
        return {p.alice: Role(p.guilder, p.alice_amount, p.florin, p.bob_amount, (p.premium_b,)),
                p.bob: Role(p.florin, p.bob_amount, p.guilder, p.alice_amount, (p.premium_a,))}

    def contract_ids(self):
        return [(self.params.florin, self.florin_cid), (self.params.guilder, self.guilder_cid)]

    def horizon(self):
        return max(self.params.deadlines.values())

    def secret_owners(self):
        return {self.params.alice: (self.secret,)}


def _premium_ok(c, terms, phase) -> bool:
    return isinstance(c, ct.PremiumSwapContract) and c.terms == terms and c.phase_ is phase


class PremiumAlice(Script):
    steps = ("premium", "principal", "redeem")

    def __init__(self, proto: PremiumSwap):
        super().__init__(proto.params.alice, (proto.secret,))
        self.proto = proto

    def act(self, round, view):
        pr, p, out = self.proto, self.proto.params, []
        if round == 0:
            self._once("premium", [
                Intent("premium", p.florin, ct.PremiumStep(pr.florin_cid, "deploy", terms=pr.florin_terms)),
                Intent("premium", p.florin, ct.PremiumStep(pr.florin_cid, "premium")),
            ], out)
        guilder = view.contract(p.guilder, pr.guilder_cid)
        if (_premium_ok(guilder, pr.guilder_terms, ct.PremiumPhase.AWAIT_PRINCIPAL)
                and round < pr.guilder_terms.principal_deadline):
            self._once("principal", [Intent("principal", p.guilder,
                                            ct.PremiumStep(pr.guilder_cid, "principal"))], out)
        florin = view.contract(p.florin, pr.florin_cid)
        if (_premium_ok(florin, pr.florin_terms, ct.PremiumPhase.AWAIT_REDEEM)
                and round < pr.florin_terms.redeem_deadline):
            self._once("redeem", [Intent("redeem", p.florin,
                                         ct.PremiumStep(pr.florin_cid, "redeem", secret=pr.secret))], out)
        return out


class PremiumBob(Script):
    steps = ("premium", "principal", "redeem")

    def __init__(self, proto: PremiumSwap):
        super().__init__(proto.params.bob)
        self.proto = proto

    def act(self, round, view):
        pr, p, out = self.proto, self.proto.params, []
        florin = view.contract(p.florin, pr.florin_cid)
        if (_premium_ok(florin, pr.florin_terms, ct.PremiumPhase.AWAIT_PRINCIPAL)
                and round < pr.guilder_terms.premium_deadline):
            self._once("premium", [
                Intent("premium", p.guilder, ct.PremiumStep(pr.guilder_cid, "deploy", terms=pr.guilder_terms)),
                Intent("premium", p.guilder, ct.PremiumStep(pr.guilder_cid, "premium")),
            ], out)
        guilder = view.contract(p.guilder, pr.guilder_cid)
        if (_premium_ok(guilder, pr.guilder_terms, ct.PremiumPhase.AWAIT_REDEEM)
                and _premium_ok(florin, pr.florin_terms, ct.PremiumPhase.AWAIT_PRINCIPAL)
                and round < pr.florin_terms.principal_deadline):
            self._once("principal", [Intent("principal", p.florin,
                                            ct.PremiumStep(pr.florin_cid, "principal"))], out)
        secret = view.secret_for(pr.lock)
        if (secret is not None
                and _premium_ok(guilder, pr.guilder_terms, ct.PremiumPhase.AWAIT_REDEEM)
                and round < pr.guilder_terms.redeem_deadline):
            self._once("redeem", [Intent("redeem", p.guilder,
                                         ct.PremiumStep(pr.guilder_cid, "redeem", secret=secret))], out)
        return out


def script_premium_swap(params: Optional[PremiumParams] = None) -> dict[str, Script]:
    return PremiumSwap(params).scripts()


# ---------------------------------------------------------------------------
# Naive transfer of Alice's swap position to Carol
# ---------------------------------------------------------------------------

# edge -> deadline; "AB_C" and "BA_C" are the clauses added once Carol joins
TRANSFER_DEADLINES = {"AB": 7, "BA": 6, "CA": 9, "AB_C": 8, "BA_C": 7, "AC": 7}
CAROL_ENTRY_ROUND = 2


@dataclass(frozen=True)
class TransferParams:
    alice: str = "alice"
    bob: str = "bob"
    carol: str = "carol"
    guilder: str = "guilder"
    florin: str = "florin"
    ab_amount: int = 100  # guilders, Alice -> Bob
    ba_amount: int = 100  # florins, Bob -> Alice
    ca_amount: int = 100  # guilders, Carol -> Alice
    ac_amount: int = 100  # florins, Alice -> Carol
    carol_participates: bool = True
    deadlines: Mapping[str, int] = field(default_factory=lambda: dict(TRANSFER_DEADLINES))
    seed: str = "swapsim"

    def __post_init__(self) -> None:
        if set(self.deadlines) != set(TRANSFER_DEADLINES):
            raise ValueError(f"transfer deadlines need keys {sorted(TRANSFER_DEADLINES)}")
        d = self.deadlines
        if d["AB_C"] < d["AB"] or d["BA_C"] < d["BA"]:
            raise ValueError("added clauses may not shorten an edge's deadline")


class NaiveTransfer(Protocol):
    name = "transfer"

    def __init__(self, params: Optional[TransferParams] = None):
        self.params = p = params or TransferParams()
        self.parties = (p.alice, p.bob, p.carol)
        self.secret_a = make_secret(f"{p.seed}/{p.alice}/transfer")
        self.secret_c = make_secret(f"{p.seed}/{p.carol}/transfer")
        self.lock_a = hashlock(self.secret_a)
        self.lock_c = hashlock(self.secret_c)
        d = p.deadlines
        self.cid = {
            "AB": f"{p.guilder}/AB", "BA": f"{p.florin}/BA",
            "CA": f"{p.guilder}/CA", "AC": f"{p.florin}/AC",
        }
        self.clause = {
            "AB": ct.Clause(p.alice, self.lock_a, d["AB"]),
            "BA": ct.Clause(p.alice, self.lock_a, d["BA"]),
            "CA": ct.Clause(p.carol, self.lock_c, d["CA"]),
            "AB_C": ct.Clause(p.carol, self.lock_c, d["AB_C"]),
            "BA_C": ct.Clause(p.carol, self.lock_c, d["BA_C"]),
            "AC": ct.Clause(p.carol, self.lock_c, d["AC"]),
        }

    def balances(self):
        p = self.params
        return {p.guilder: {p.alice: p.ab_amount, p.bob: 0, p.carol: p.ca_amount},
                p.florin: {p.alice: p.ac_amount, p.bob: p.ba_amount, p.carol: 0}}

    def scripts(self):
        p = self.params
        carol = TransferCarol(self) if p.carol_participates else Idle(p.carol)
        return {p.alice: TransferAlice(self), p.bob: TransferBob(self), p.carol: carol}

    def roles(self):
        p = self.params
        return {p.alice: Role(p.guilder, p.ab_amount, p.florin, p.ba_amount),
                p.bob: Role(p.florin, p.ba_amount, p.guilder, p.ab_amount),
                p.carol: Role(p.guilder, p.ca_amount, p.florin, p.ac_amount)}

    def contract_ids(self):
        p = self.params
        return [(p.guilder, self.cid["AB"]), (p.florin, self.cid["BA"]),
                (p.guilder, self.cid["CA"]), (p.florin, self.cid["AC"])]

    def horizon(self):
        return max(self.params.deadlines.values())

    def secret_owners(self):
        p = self.params
        return {p.alice: (self.secret_a,), p.carol: (self.secret_c,)}

    def edge_ok(self, view, edge, extra=()) -> bool:
        p = self.params
        spec = {
            "AB": (p.guilder, p.alice, p.bob, p.ab_amount),
            "BA": (p.florin, p.bob, p.alice, p.ba_amount),
            "CA": (p.guilder, p.carol, p.alice, p.ca_amount),
            "AC": (p.florin, p.alice, p.carol, p.ac_amount),
        }[edge]
        chain, dep, ben, amount = spec
        clauses = (self.clause[edge],) + tuple(self.clause[e] for e in extra)
        return _escrow_matches(view.contract(chain, self.cid[edge]), dep, ben, amount, clauses)


class TransferAlice(Script):
    steps = ("create_AB", "claim_BA_A", "modify_AB", "create_AC", "claim_CA", "claim_BA_C")

    def __init__(self, proto: NaiveTransfer):
        super().__init__(proto.params.alice, (proto.secret_a,))
        self.proto = proto
        self.path: Optional[str] = None  # "plain" or "transfer"

    def act(self, round, view):
        pr, p, out = self.proto, self.proto.params, []
        d = p.deadlines
        if round == 0:
            self._once("create_AB", [Intent("create_AB", p.guilder, ct.DeployEscrow(
                pr.cid["AB"], p.bob, p.ab_amount, (pr.clause["AB"],)))], out)
        ba_ok = pr.edge_ok(view, "BA")
        # Carol's entry round has to be observable before Alice picks a path
        if self.path is None and round > CAROL_ENTRY_ROUND and ba_ok:
            self.path = "transfer" if pr.edge_ok(view, "CA") else "plain"
        if self.path == "transfer":
            if round < d["AB"]:
                self._once("modify_AB", [Intent("modify_AB", p.guilder,
                                                ct.AddClause(pr.cid["AB"], pr.clause["AB_C"]))], out)
            if "modify_AB" in self.done and ba_ok and pr.edge_ok(view, "BA", ("BA_C",)):
                if round < d["AC"]:
                    self._once("create_AC", [Intent("create_AC", p.florin, ct.DeployEscrow(
                        pr.cid["AC"], p.carol, p.ac_amount, (pr.clause["AC"],)))], out)
            elif "modify_AB" in self.done and ba_ok and round >= CAROL_ENTRY_ROUND + 3:
                # Bob never widened BA: fall back to the plain swap
                self.path = "plain"
        if self.path == "plain" and ba_ok and round < d["BA"]:
            self._once("claim_BA_A", [Intent("claim_BA_A", p.florin,
                                             ct.Claim(pr.cid["BA"], pr.secret_a))], out)
        c = view.secret_for(pr.lock_c)
        if c is not None and self.path == "transfer":
            if pr.edge_ok(view, "CA") and round < d["CA"]:
                self._once("claim_CA", [Intent("claim_CA", p.guilder, ct.Claim(pr.cid["CA"], c))], out)
            if pr.edge_ok(view, "BA", ("BA_C",)) and round < d["BA_C"]:
                self._once("claim_BA_C", [Intent("claim_BA_C", p.florin, ct.Claim(pr.cid["BA"], c))], out)
        return out


class TransferBob(Script):
    steps = ("create_BA", "modify_BA", "claim_AB")

    def __init__(self, proto: NaiveTransfer):
        super().__init__(proto.params.bob)
        self.proto = proto

    def act(self, round, view):
        pr, p, out = self.proto, self.proto.params, []
        d = p.deadlines
        if pr.edge_ok(view, "AB") and round < d["BA"]:
            self._once("create_BA", [Intent("create_BA", p.florin, ct.DeployEscrow(
                pr.cid["BA"], p.alice, p.ba_amount, (pr.clause["BA"],)))], out)
        if pr.edge_ok(view, "AB", ("AB_C",)) and "create_BA" in self.done and round < d["BA_C"]:
            self._once("modify_BA", [Intent("modify_BA", p.florin,
                                            ct.AddClause(pr.cid["BA"], pr.clause["BA_C"]))], out)
        ab = view.contract(p.guilder, pr.cid["AB"])
        if pr.edge_ok(view, "AB") and "claim_AB" not in self.done:
            for s in view.public_secrets:
                if ab.claimable_with(s, round) is not None:
                    self._once("claim_AB", [Intent("claim_AB", p.guilder, ct.Claim(pr.cid["AB"], s))], out)
                    break
        return out


class TransferCarol(Script):
    steps = ("create_CA", "claim_BA", "claim_AC")

    def __init__(self, proto: NaiveTransfer):
        super().__init__(proto.params.carol, (proto.secret_c,))
        self.proto = proto

    def act(self, round, view):
        pr, p, out = self.proto, self.proto.params, []
        d = p.deadlines
        if round == CAROL_ENTRY_ROUND and pr.edge_ok(view, "AB") and pr.edge_ok(view, "BA"):
            self._once("create_CA", [Intent("create_CA", p.guilder, ct.DeployEscrow(
                pr.cid["CA"], p.alice, p.ca_amount, (pr.clause["CA"],)))], out)
        if ("create_CA" in self.done and pr.edge_ok(view, "AC")
                and pr.edge_ok(view, "BA", ("BA_C",)) and round < min(d["AC"], d["BA_C"])):
            self._once("claim_BA", [Intent("claim_BA", p.florin, ct.Claim(pr.cid["BA"], pr.secret_c))], out)
            self._once("claim_AC", [Intent("claim_AC", p.florin, ct.Claim(pr.cid["AC"], pr.secret_c))], out)
        return out


def script_naive_transfer(params: Optional[TransferParams] = None,
                          carol_participates: Optional[bool] = None) -> dict[str, Script]:
    params = params or TransferParams()
    if carol_participates is not None and carol_participates != params.carol_participates:
        params = replace(params, carol_participates=carol_participates)
    return NaiveTransfer(params).scripts()


PROTOCOLS: dict[str, Callable[..., Protocol]] = {
    "htlc": HtlcSwap,
    "premium": PremiumSwap,
    "transfer": NaiveTransfer,
}


# ---------------------------------------------------------------------------
# Runner
# ---------------------------------------------------------------------------

@dataclass
class RunResult:
    initial: World
    final: World
    escrowed: list[dict[str, int]]  # per round, per party amount locked in live contracts
    submissions: list[tuple[int, str, str]]  # (round, party, step)

    @property
    def trace(self):
        return self.final.trace


def run(world: World, agents: Mapping[str, Script], max_rounds: int = DEFAULT_MAX_ROUNDS,
        horizon: int = 0) -> RunResult:
    """Drive ``world`` until every contract is terminal and ``horizon`` has passed.

    Parties act in ``world.parties`` order each round. ``horizon`` is the last
    round any agent may still act in; the cap ``max_rounds`` guards stalls.
    """
    initial = world.copy()
    escrowed = [{p: world.escrowed_by(p) for p in world.parties}]
    submissions = []
    while world.round < max_rounds:
        if world.round > horizon and not world.pending and not world.live_contracts():
            break
        view = world.view()
        for party in world.parties:
            agent = agents.get(party)
            if agent is None:
                continue
            for intent in agent.act(world.round, view):
                world.submit(party, intent.chain, intent.action)
                submissions.append((world.round, party, intent.step))
        world.advance_round()
        escrowed.append({p: world.escrowed_by(p) for p in world.parties})
    return RunResult(initial, world, escrowed, submissions)


def run_protocol(proto: Protocol, agents: Optional[Mapping[str, Script]] = None,
                 max_rounds: int = DEFAULT_MAX_ROUNDS) -> RunResult:
    agents = dict(proto.scripts() if agents is None else agents)
    horizon = max([proto.horizon()] + [getattr(a, "horizon", 0) for a in agents.values()])
    return run(proto.new_world(), agents, max_rounds=max_rounds, horizon=horizon)
