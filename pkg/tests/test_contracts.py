import itertools

import pytest

from swapsim import contracts as ct
from swapsim.core import hashlock, make_secret

S = make_secret("contracts-test")
L = hashlock(S)
OTHER = make_secret("someone-else")


def escrow(deadlines=(3,)):
    clauses = tuple(ct.Clause("alice", L if i == 0 else hashlock(OTHER), d)
                    for i, d in enumerate(deadlines))
    return ct.EscrowContract("c", "guilder", "alice", "bob", 50, clauses)


class TestEscrow:
    def test_timely_claim_pays_beneficiary(self):
        done, deltas = escrow().claim(S, 2)
        assert done.state is ct.EscrowState.CLAIMED
        assert deltas == {"bob": 50}
        assert done.closed_round == 3

    def test_claim_at_deadline_is_late(self):
        with pytest.raises(ct.Rejected, match="late"):
            escrow().claim(S, 3)

    def test_wrong_secret(self):
        with pytest.raises(ct.Rejected, match="no clause"):
            escrow().claim(OTHER, 0)

    def test_second_clause_extends_a_different_secret(self):
        c = escrow((3, 5))
        assert c.claimable_with(OTHER, 4) == 1
        assert c.claimable_with(S, 4) is None
        assert c.refund_deadline == 5

    def test_refund_only_after_deadline(self):
        with pytest.raises(ct.Rejected):
            escrow().refund(2)
        done, deltas = escrow().refund(3)
        assert deltas == {"alice": 50} and done.state is ct.EscrowState.REFUNDED

    def test_expire_refunds_at_deadline_boundary(self):
        c = escrow()
        assert c.expire(2) == (c, {})
        done, deltas = c.expire(3)
        assert done.closed_round == 3 and deltas == {"alice": 50}

    def test_terminal_is_absorbing(self):
        done, _ = escrow().claim(S, 0)
        for op in (lambda: done.claim(S, 1), lambda: done.refund(10),
                   lambda: done.add_clause("alice", ct.Clause("x", L, 9))):
            with pytest.raises(ct.Rejected):
                op()
        assert done.expire(99) == (done, {})

    def test_add_clause_rules(self):
        c = escrow()
        with pytest.raises(ct.Rejected, match="depositor"):
            c.add_clause("bob", ct.Clause("bob", L, 9))
        with pytest.raises(ct.Rejected, match="shorten"):
            c.add_clause("alice", ct.Clause("alice", L, 2))
        wider, deltas = c.add_clause("alice", ct.Clause("carol", hashlock(OTHER), 4))
        assert deltas == {} and len(wider.clauses) == 2
        assert c.clauses != wider.clauses  # original untouched

    def test_clause_deadline_positive(self):
        with pytest.raises(ValueError):
            ct.Clause("a", L, 0)


def terms(**kw):
    base = dict(premium_payer="alice", premium_amount=4, principal_payer="bob", principal_amount=100,
                lock=L, premium_deadline=1, principal_deadline=4, redeem_deadline=5)
    base.update(kw)
    return ct.PremiumTerms(**base)


class TestPremiumContract:
    def test_terms_ordering_enforced(self):
        with pytest.raises(ValueError):
            terms(principal_deadline=1)

    def test_happy_path(self):
        c = ct.PremiumSwapContract("p", "florin", terms())
        c, d1 = c.deposit_premium("alice", 0)
        c, d2 = c.deposit_principal("bob", 3)
        c, d3 = c.redeem(S, 4)
        assert c.phase_ is ct.PremiumPhase.COMPLETE
        assert (d1, d2, d3) == ({"alice": -4}, {"bob": -100}, {"alice": 104})

    def test_missing_principal_refunds_premium(self):
        c, _ = ct.PremiumSwapContract("p", "florin", terms()).deposit_premium("alice", 0)
        done, d = c.expire(4)
        assert done.phase_ is ct.PremiumPhase.PREMIUM_REFUND and d == {"alice": 4}

    def test_missing_redeem_forfeits_premium(self):
        c, _ = ct.PremiumSwapContract("p", "florin", terms()).deposit_premium("alice", 0)
        c, _ = c.deposit_principal("bob", 1)
        done, d = c.expire(5)
        assert done.phase_ is ct.PremiumPhase.FORFEIT and d == {"bob": 104}

    def test_no_premium_settles_empty(self):
        done, d = ct.PremiumSwapContract("p", "florin", terms()).expire(1)
        assert done.phase_ is ct.PremiumPhase.NO_PREMIUM and d == {}

    def test_wrong_payers(self):
        c = ct.PremiumSwapContract("p", "florin", terms())
        with pytest.raises(ct.Rejected):
            c.deposit_premium("bob", 0)
        c, _ = c.deposit_premium("alice", 0)
        with pytest.raises(ct.Rejected):
            c.deposit_principal("alice", 1)


# Brute force over the whole (phase, action, round) table: every cell is either
# a rejection or a transition that conserves value between contract and parties.
ACTIONS = [("premium", "alice"), ("premium", "bob"), ("principal", "bob"), ("principal", "alice"),
           ("redeem", S), ("redeem", OTHER), ("expire", None)]


def reachable_premium_states():
    t = terms()
    start = ct.PremiumSwapContract("p", "florin", t)
    seen, frontier = {start}, [start]
    while frontier:
        c = frontier.pop()
        for (kind, arg), r in itertools.product(ACTIONS, range(8)):
            try:
                nxt, _ = step(c, kind, arg, r)
            except ct.Rejected:
                continue
            if nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    return seen


def step(c, kind, arg, r):
    if kind == "premium":
        return c.deposit_premium(arg, r)
    if kind == "principal":
        return c.deposit_principal(arg, r)
    if kind == "redeem":
        return c.redeem(arg, r)
    return c.expire(r)


def test_premium_rule_table_is_total_and_conserving():
    states = reachable_premium_states()
    phases = {c.phase_ for c in states}
    assert phases == set(ct.PremiumPhase)
    for c in states:
        for (kind, arg), r in itertools.product(ACTIONS, range(8)):
            try:
                nxt, deltas = step(c, kind, arg, r)
            except ct.Rejected:
                continue
            assert c.held() - nxt.held() == sum(deltas.values())
            if c.phase_ in ct.TERMINAL_PREMIUM:
                assert nxt == c and deltas == {}


def test_apply_action_routes_and_rejects():
    contracts = {}
    c, d = ct.apply_action(contracts, "guilder", "alice",
                           ct.DeployEscrow("e", "bob", 10, (ct.Clause("alice", L, 3),)), 0)
    assert d == {"alice": -10} and c.opened_round == 1
    with pytest.raises(ct.Rejected, match="exists"):
        ct.apply_action({"e": c}, "guilder", "alice",
                        ct.DeployEscrow("e", "bob", 10, (ct.Clause("alice", L, 3),)), 0)
    with pytest.raises(ct.Rejected, match="no contract"):
        ct.apply_action({}, "guilder", "bob", ct.Claim("nope", S), 0)
    with pytest.raises(ct.Rejected, match="late"):
        ct.apply_action({}, "florin", "alice", ct.PremiumStep("p", "deploy", terms=terms()), 1)
    # a plain claim on a premium contract behaves as redeem
    p = ct.PremiumSwapContract("p", "florin", terms(), phase_=ct.PremiumPhase.AWAIT_REDEEM)
    done, _ = ct.apply_action({"p": p}, "florin", "carol", ct.Claim("p", S), 2)
    assert done.phase_ is ct.PremiumPhase.COMPLETE


def test_revealed_secret():
    assert ct.revealed_secret(ct.Claim("x", S)) == S
    assert ct.revealed_secret(ct.PremiumStep("x", "redeem", secret=S)) == S
    assert ct.revealed_secret(ct.Refund("x")) is None
