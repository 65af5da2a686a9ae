"""On-chain state machines: hashlocked escrow edges and the premium swap contract.

Contract values are immutable. Every transition is a pure function
``(state, action, round) -> (state, balance deltas)`` and raises
:class:`Rejected` when the chain would refuse the transaction.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Mapping, Optional, Union

from .core import SimError, check_amount, to_hex, verify


class Rejected(SimError):
    """The chain refused an action; the ledger traces it as a no-op."""


@dataclass(frozen=True)
class Clause:
    owner_label: str
    lock: bytes
    deadline: int

    def __post_init__(self) -> None:
        if self.deadline <= 0:
            raise ValueError(f"clause deadline must be positive, got {self.deadline}")

    def to_dict(self) -> dict:
        return {"owner": self.owner_label, "lock": to_hex(self.lock), "deadline": self.deadline}


class EscrowState(str, Enum):
    LIVE = "Live"
    CLAIMED = "Claimed"
    REFUNDED = "Refunded"


@dataclass(frozen=True)
class EscrowContract:
    id: str
    chain: str
    depositor: str
    beneficiary: str
    amount: int
    clauses: tuple[Clause, ...]
    state: EscrowState = EscrowState.LIVE
    claimed_by: Optional[int] = None  # index into clauses
    opened_round: int = 0
    closed_round: Optional[int] = None

    @property
    def refund_deadline(self) -> int:
        return max(c.deadline for c in self.clauses)

    @property
    def live(self) -> bool:
        return self.state is EscrowState.LIVE

    @property
    def phase(self) -> str:
        return self.state.value

    def held(self) -> int:
        return self.amount if self.live else 0

    def locks(self) -> tuple[bytes, ...]:
        return tuple(c.lock for c in self.clauses)

    def claimable_with(self, secret: bytes, submit_round: int) -> Optional[int]:
        for i, c in enumerate(self.clauses):
            if submit_round < c.deadline and verify(c.lock, secret):
                return i
        return None

    def claim(self, secret: bytes, submit_round: int):
        if not self.live:
            raise Rejected(f"contract is {self.phase}")
        matching = [i for i, c in enumerate(self.clauses) if verify(c.lock, secret)]
        if not matching:
            raise Rejected("secret matches no clause")
        idx = self.claimable_with(secret, submit_round)
        if idx is None:
            raise Rejected("late: every matching clause has expired")
        done = replace(self, state=EscrowState.CLAIMED, claimed_by=idx,
                       closed_round=submit_round + 1)
        return done, {self.beneficiary: self.amount}

    def refund(self, submit_round: int):
        if not self.live:
            raise Rejected(f"contract is {self.phase}")
        if submit_round < self.refund_deadline:
            raise Rejected(f"refund before deadline {self.refund_deadline}")
        done = replace(self, state=EscrowState.REFUNDED, closed_round=submit_round + 1)
        return done, {self.depositor: self.amount}

    def add_clause(self, caller: str, clause: Clause):
        if caller != self.depositor:
            raise Rejected(f"{caller} is not the depositor")
        if not self.live:
            raise Rejected(f"contract is {self.phase}")
        if clause.deadline < self.refund_deadline:
            raise Rejected("new clause would shorten the refund deadline")
        return replace(self, clauses=self.clauses + (clause,)), {}

    def expire(self, new_round: int):
        """Automatic refund when the boundary reaches the refund deadline."""
        if self.live and new_round >= self.refund_deadline:
            done = replace(self, state=EscrowState.REFUNDED, closed_round=new_round)
            return done, {self.depositor: self.amount}
        return self, {}

    def to_dict(self) -> dict:
        return {
            "kind": "escrow",
            "id": self.id,
            "depositor": self.depositor,
            "beneficiary": self.beneficiary,
            "amount": self.amount,
            "clauses": [c.to_dict() for c in self.clauses],
            "state": self.phase,
        }


class PremiumPhase(str, Enum):
    AWAIT_PREMIUM = "AwaitPremium"
    AWAIT_PRINCIPAL = "AwaitPrincipal"
    AWAIT_REDEEM = "AwaitRedeem"
    COMPLETE = "SettledComplete"
    FORFEIT = "SettledPrincipalRefund+PremiumForfeit"
    PREMIUM_REFUND = "SettledPremiumRefund"
    # premium never arrived; nothing was ever held
    NO_PREMIUM = "SettledNoPremium"


TERMINAL_PREMIUM = frozenset({
    PremiumPhase.COMPLETE, PremiumPhase.FORFEIT,
    PremiumPhase.PREMIUM_REFUND, PremiumPhase.NO_PREMIUM,
})


@dataclass(frozen=True)
class PremiumTerms:
    premium_payer: str
    premium_amount: int
    principal_payer: str
    principal_amount: int
    lock: bytes
    premium_deadline: int
    principal_deadline: int
    redeem_deadline: int

    def __post_init__(self) -> None:
        check_amount(self.premium_amount)
        check_amount(self.principal_amount)
        if not (0 < self.premium_deadline < self.principal_deadline < self.redeem_deadline):
            raise ValueError(
                "premium terms need 0 < premium_deadline < principal_deadline < redeem_deadline, got "
                f"{self.premium_deadline}, {self.principal_deadline}, {self.redeem_deadline}"
            )

    def to_dict(self) -> dict:
        return {
            "premium_payer": self.premium_payer,
            "premium_amount": self.premium_amount,
            "principal_payer": self.principal_payer,
            "principal_amount": self.principal_amount,
            "lock": to_hex(self.lock),
            "premium_deadline": self.premium_deadline,
            "principal_deadline": self.principal_deadline,
            "redeem_deadline": self.redeem_deadline,
        }


@dataclass(frozen=True)
class PremiumSwapContract:
    """Premium plus principal on one chain, redeemed by a hashlock.

    The redeemed principal and the refunded premium both go to the premium
    payer, whoever submits the secret.
    """

    id: str
    chain: str
    terms: PremiumTerms
    phase_: PremiumPhase = PremiumPhase.AWAIT_PREMIUM
    opened_round: int = 0
    principal_round: Optional[int] = None
    closed_round: Optional[int] = None

    @property
    def phase(self) -> str:
        return self.phase_.value

    @property
    def live(self) -> bool:
        return self.phase_ not in TERMINAL_PREMIUM

    @property
    def refund_deadline(self) -> int:
        return self.terms.redeem_deadline

    def held(self) -> int:
        t = self.terms
        if self.phase_ is PremiumPhase.AWAIT_PRINCIPAL:
            return t.premium_amount
        if self.phase_ is PremiumPhase.AWAIT_REDEEM:
            return t.premium_amount + t.principal_amount
        return 0

    def locks(self) -> tuple[bytes, ...]:
        return (self.terms.lock,)

    def deposit_premium(self, payer: str, submit_round: int):
        t = self.terms
        if self.phase_ is not PremiumPhase.AWAIT_PREMIUM:
            raise Rejected(f"premium not accepted in phase {self.phase}")
        if payer != t.premium_payer:
            raise Rejected(f"{payer} is not the premium payer")
        if submit_round >= t.premium_deadline:
            raise Rejected(f"late: premium deadline {t.premium_deadline}")
        return replace(self, phase_=PremiumPhase.AWAIT_PRINCIPAL), {payer: -t.premium_amount}

    def deposit_principal(self, payer: str, submit_round: int):
        t = self.terms
        if self.phase_ is not PremiumPhase.AWAIT_PRINCIPAL:
            raise Rejected(f"principal not accepted in phase {self.phase}")
        if payer != t.principal_payer:
            raise Rejected(f"{payer} is not the principal payer")
        if submit_round >= t.principal_deadline:
            raise Rejected(f"late: principal deadline {t.principal_deadline}")
        nxt = replace(self, phase_=PremiumPhase.AWAIT_REDEEM, principal_round=submit_round + 1)
        return nxt, {payer: -t.principal_amount}

    def redeem(self, secret: bytes, submit_round: int):
        t = self.terms
        if self.phase_ is not PremiumPhase.AWAIT_REDEEM:
            raise Rejected(f"nothing to redeem in phase {self.phase}")
        if not verify(t.lock, secret):
            raise Rejected("secret does not match hashlock")
        if submit_round >= t.redeem_deadline:
            raise Rejected(f"late: redeem deadline {t.redeem_deadline}")
        done = replace(self, phase_=PremiumPhase.COMPLETE, closed_round=submit_round + 1)
        return done, {t.premium_payer: t.principal_amount + t.premium_amount}

    def expire(self, new_round: int):
        t = self.terms
        ph = self.phase_
        if ph is PremiumPhase.AWAIT_PREMIUM and new_round >= t.premium_deadline:
            return replace(self, phase_=PremiumPhase.NO_PREMIUM, closed_round=new_round), {}
        if ph is PremiumPhase.AWAIT_PRINCIPAL and new_round >= t.principal_deadline:
            done = replace(self, phase_=PremiumPhase.PREMIUM_REFUND, closed_round=new_round)
            return done, {t.premium_payer: t.premium_amount}
        if ph is PremiumPhase.AWAIT_REDEEM and new_round >= t.redeem_deadline:
            done = replace(self, phase_=PremiumPhase.FORFEIT, closed_round=new_round)
            return done, {t.principal_payer: t.principal_amount + t.premium_amount}
        return self, {}

    def to_dict(self) -> dict:
        return {"kind": "premium", "id": self.id, "terms": self.terms.to_dict(), "state": self.phase}


Contract = Union[EscrowContract, PremiumSwapContract]


# Actions submitted to a chain. Each carries the contract id it targets.

@dataclass(frozen=True)
class DeployEscrow:
    contract_id: str
    beneficiary: str
    amount: int
    clauses: tuple[Clause, ...]

    def to_dict(self) -> dict:
        return {"type": "deploy_escrow", "contract": self.contract_id, "beneficiary": self.beneficiary,
                "amount": self.amount, "clauses": [c.to_dict() for c in self.clauses]}


@dataclass(frozen=True)
class Claim:
    contract_id: str
    secret: bytes

    def to_dict(self) -> dict:
        return {"type": "claim", "contract": self.contract_id, "secret": to_hex(self.secret)}


@dataclass(frozen=True)
class Refund:
    contract_id: str

    def to_dict(self) -> dict:
        return {"type": "refund", "contract": self.contract_id}


@dataclass(frozen=True)
class AddClause:
    contract_id: str
    clause: Clause

    def to_dict(self) -> dict:
        return {"type": "add_clause", "contract": self.contract_id, "clause": self.clause.to_dict()}


PREMIUM_KINDS = ("deploy", "premium", "principal", "redeem")


@dataclass(frozen=True)
class PremiumStep:
    contract_id: str
    kind: str
    terms: Optional[PremiumTerms] = None
    secret: Optional[bytes] = None

    def __post_init__(self) -> None:
        if self.kind not in PREMIUM_KINDS:
            raise ValueError(f"unknown premium step {self.kind!r}")
        if self.kind == "deploy" and self.terms is None:
            raise ValueError("premium deploy needs terms")
        if self.kind == "redeem" and self.secret is None:
            raise ValueError("premium redeem needs a secret")

    def to_dict(self) -> dict:
        d: dict = {"type": f"premium_{self.kind}", "contract": self.contract_id}
        if self.terms is not None:
            d["terms"] = self.terms.to_dict()
        if self.secret is not None:
            d["secret"] = to_hex(self.secret)
        return d


@dataclass(frozen=True)
class Noop:
    contract_id: str = ""

    def to_dict(self) -> dict:
        return {"type": "noop"}


Action = Union[DeployEscrow, Claim, Refund, AddClause, PremiumStep, Noop]


def revealed_secret(action: Action) -> Optional[bytes]:
    """Secret carried in the transaction body, public once included in a block."""
    if isinstance(action, Claim):
        return action.secret
    if isinstance(action, PremiumStep) and action.kind == "redeem":
        return action.secret
    return None


def apply_action(contracts: Mapping[str, Contract], chain: str, actor: str,
                 action: Action, submit_round: int):
    """Run one action against a chain's contracts.

    Returns ``(contract_or_None, deltas)``; ``deltas`` maps party to a signed
    balance change. Balance sufficiency is checked by the ledger.
    """
    if isinstance(action, Noop):
        return None, {}
    cid = action.contract_id
    if isinstance(action, DeployEscrow):
        if cid in contracts:
            raise Rejected(f"contract id {cid} already exists")
        if not action.clauses:
            raise Rejected("escrow needs at least one clause")
        check_amount(action.amount)
        c = EscrowContract(id=cid, chain=chain, depositor=actor, beneficiary=action.beneficiary,
                           amount=action.amount, clauses=tuple(action.clauses),
                           opened_round=submit_round + 1)
        return c, {actor: -action.amount}
    if isinstance(action, PremiumStep) and action.kind == "deploy":
        if cid in contracts:
            raise Rejected(f"contract id {cid} already exists")
        if submit_round >= action.terms.premium_deadline:
            raise Rejected(f"late: deploy after premium deadline {action.terms.premium_deadline}")
        return PremiumSwapContract(id=cid, chain=chain, terms=action.terms,
                                   opened_round=submit_round + 1), {}

    contract = contracts.get(cid)
    if contract is None:
        raise Rejected(f"no contract {cid} on {chain}")
    if isinstance(contract, EscrowContract):
        if isinstance(action, Claim):
            return contract.claim(action.secret, submit_round)
        if isinstance(action, Refund):
            return contract.refund(submit_round)
        if isinstance(action, AddClause):
            return contract.add_clause(actor, action.clause)
        raise Rejected(f"{type(action).__name__} not supported by escrow contracts")
    if isinstance(action, PremiumStep):
        if action.kind == "premium":
            return contract.deposit_premium(actor, submit_round)
        if action.kind == "principal":
            return contract.deposit_principal(actor, submit_round)
        return contract.redeem(action.secret, submit_round)
    if isinstance(action, Claim):
        return contract.redeem(action.secret, submit_round)
    raise Rejected(f"{type(action).__name__} not supported by premium contracts")


# World-level helpers. Each submits through the ledger; effects apply at the
# next round boundary.

def escrow_deploy(world, depositor: str, chain: str, beneficiary: str, amount: int,
                  clauses, contract_id: Optional[str] = None):
    clauses = tuple(clauses)
    if not clauses:
        raise SimError("escrow needs at least one clause")
    view = world.read(chain)
    if view.balances.get(depositor, 0) < amount:
        raise SimError(f"{depositor} has {view.balances.get(depositor, 0)} on {chain}, needs {amount}")
    cid = contract_id or world.fresh_contract_id(chain, depositor)
    world.submit(depositor, chain, DeployEscrow(cid, beneficiary, amount, clauses))
    return world, cid


def escrow_claim(world, submitter: str, chain: str, contract_id: str, secret: bytes):
    return world.submit(submitter, chain, Claim(contract_id, secret))


def escrow_refund(world, submitter: str, chain: str, contract_id: str):
    return world.submit(submitter, chain, Refund(contract_id))


def escrow_add_clause(world, caller: str, chain: str, contract_id: str, clause: Clause):
    return world.submit(caller, chain, AddClause(contract_id, clause))


def premium_deploy(world, deployer: str, chain: str, terms: PremiumTerms,
                   contract_id: Optional[str] = None):
    cid = contract_id or world.fresh_contract_id(chain, deployer)
    world.submit(deployer, chain, PremiumStep(cid, "deploy", terms=terms))
    return world, cid


def premium_deposit_premium(world, payer: str, chain: str, contract_id: str):
    return world.submit(payer, chain, PremiumStep(contract_id, "premium"))


def premium_deposit_principal(world, payer: str, chain: str, contract_id: str):
    return world.submit(payer, chain, PremiumStep(contract_id, "principal"))


def premium_redeem(world, submitter: str, chain: str, contract_id: str, secret: bytes):
    return world.submit(submitter, chain, PremiumStep(contract_id, "redeem", secret=secret))
