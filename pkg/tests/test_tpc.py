import pytest

from swapsim.tpc import (ABORT, COMMIT, FaultEvent, FaultScheduleError, enumerate_fault_schedules,
                         parse_faults, tpc_blocking_probe, tpc_run, validate_schedule)

NODES = ("carol", "alice", "bob")


def test_all_yes_commits():
    out = tpc_run(votes={"alice": "yes", "bob": "yes"})
    assert set(out.decisions.values()) == {COMMIT}
    assert out.decided_round == {"carol": 2, "alice": 3, "bob": 3}


def test_one_no_aborts():
    out = tpc_run(votes={"alice": "yes", "bob": "no"})
    assert set(out.decisions.values()) == {ABORT}


def test_coordinator_crash_blocks_prepared_participants():
    rep = tpc_blocking_probe()
    assert rep.per_round  # non-empty
    assert set(rep.per_round) == set(range(1, 7))
    assert all(v == ("alice", "bob") for v in rep.per_round.values())
    assert set(rep.outcome.decisions.values()) == {ABORT}


def test_no_crash_no_blocking_after_decision():
    rep = tpc_blocking_probe(crash_coordinator_after_prepare=False)
    assert rep.blocked_after_decision == 0


def test_never_recovering_coordinator_blocks_forever():
    out = tpc_run(faults=[FaultEvent(2, "carol", "crash")], horizon=12)
    assert out.status["alice"] == out.status["bob"] == "blocked"
    assert out.agreement


def test_participant_recovers_via_query():
    out = tpc_run(faults=[FaultEvent(2, "alice", "crash"), FaultEvent(5, "alice", "recover")])
    assert out.decisions["alice"] == COMMIT
    assert out.decided_round["alice"] == 7


def test_crashed_unprepared_participant_aborts_on_recovery():
    out = tpc_run(faults=[FaultEvent(0, "alice", "crash"), FaultEvent(4, "alice", "recover")])
    assert set(out.decisions.values()) == {ABORT}


def test_schedule_validation():
    with pytest.raises(FaultScheduleError):
        validate_schedule([FaultEvent(1, "alice", "recover")], NODES)
    with pytest.raises(FaultScheduleError):
        validate_schedule([FaultEvent(1, "alice", "crash"), FaultEvent(2, "alice", "crash")], NODES)
    with pytest.raises(FaultScheduleError):
        validate_schedule([FaultEvent(1, "dave", "crash")], NODES)
    with pytest.raises(FaultScheduleError):
        FaultEvent(1, "alice", "explode")
    with pytest.raises(FaultScheduleError):
        FaultEvent(-1, "alice", "crash")


def test_parse_faults():
    assert parse_faults("coordinator@after-prepare") == [FaultEvent(2, "carol", "crash"),
                                                         FaultEvent(6, "carol", "recover")]
    assert parse_faults("alice@2:crash, alice@5:recover") == [FaultEvent(2, "alice", "crash"),
                                                              FaultEvent(5, "alice", "recover")]
    for bad in ("alice", "alice@x:crash", "alice@2", "alice@2:boom"):
        with pytest.raises(FaultScheduleError):
            parse_faults(bad)


def test_fault_schedule_enumeration():
    scheds = enumerate_fault_schedules(NODES, horizon=10, max_events=2)
    assert len(scheds) == 496
    assert len(set(scheds)) == len(scheds)
    for s in scheds:
        validate_schedule(s, NODES)


def test_vote_validation():
    from swapsim.core import SimError
    with pytest.raises(SimError):
        tpc_run(votes={"alice": "maybe", "bob": "yes"})
    with pytest.raises(SimError):
        tpc_run(votes={"alice": "yes"})
