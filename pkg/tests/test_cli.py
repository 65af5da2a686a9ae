import json
from pathlib import Path

import pytest

from swapsim.cli import main
from swapsim.scenario import ScenarioError, bundled_names, load_scenario, scenario_from_dict

GOLDEN = Path(__file__).parent / "golden"


def write(tmp_path, doc, name="s.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc) if not isinstance(doc, str) else doc)
    return str(p)


def test_bundled_scenarios_present():
    assert bundled_names() == ["htlc", "premium", "tpc", "transfer"]


@pytest.mark.parametrize("name", ["htlc", "premium", "transfer", "tpc"])
def test_golden_traces(tmp_path, name):
    out = tmp_path / "t.jsonl"
    assert main(["run", name, "--trace", str(out)]) == 0
    assert out.read_text() == (GOLDEN / f"{name}.jsonl").read_text()


def test_htlc_trace_ends_claimed(tmp_path):
    out = tmp_path / "t.jsonl"
    main(["run", "htlc", "--trace", str(out)])
    events = [json.loads(line) for line in out.read_text().splitlines()]
    assert [e["result"]["state"] for e in events[-2:]] == ["Claimed", "Claimed"]


def test_premium_alice_omits_redeem(tmp_path, capsys):
    doc = json.loads(json.dumps(load_scenario("premium").to_dict()))
    doc["strategies"] = [{"party": "alice", "edits": [{"omit": "redeem"}]}]
    assert main(["run", write(tmp_path, doc), "--format", "json"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["net"]["bob"] == 2
    assert rep["verdicts"]["bob"] == {"kind": "CompensatedAsVictim", "amount": 2}


def test_misconfigured_htlc_run_exits_3(tmp_path):
    doc = {"version": 1, "protocol": "htlc", "params": {"deadlines": {"bob_escrow": 2}},
           "strategies": [{"party": "alice", "edits": [{"delay": "claim", "round": 3}]}]}
    assert main(["run", write(tmp_path, doc)]) == 3


def test_explore_exit_codes_and_counterexamples(tmp_path, capsys):
    assert main(["explore", "htlc", "--deviating", "bob", "--format", "json"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["catalog_size"] == {"bob": 38}
    mis = write(tmp_path, {"version": 1, "protocol": "htlc",
                           "params": {"deadlines": {"bob_escrow": 2}}})
    cx_dir = tmp_path / "cx"
    assert main(["explore", mis, "--deviating", "alice", "--counterexamples", str(cx_dir)]) == 3
    files = sorted(cx_dir.iterdir())
    assert files
    for f in files:
        assert main(["run", str(f)]) == 3  # each counterexample replays to the same LOSS


def test_explore_collusion_flags_unverdicted(capsys):
    assert main(["explore", "premium", "--deviating", "alice,bob", "--format", "json"]) == 0
    assert json.loads(capsys.readouterr().out)["unverdicted"] > 0


def test_explore_transfer_carol_reports_loss(capsys):
    # the naive transfer is not safe for Alice against a late Carol
    assert main(["explore", "transfer", "--deviating", "carol"]) == 3
    assert "LOSS counterexamples: 4" in capsys.readouterr().out


def test_explore_tpc_scenario(capsys):
    assert main(["explore", "tpc"]) == 0
    assert "divergent 0" in capsys.readouterr().out


@pytest.mark.parametrize("argv,code,needle", [
    (["tpc", "--votes", "yes,yes"], 0, "commit"),
    (["tpc", "--votes", "yes,no"], 0, "abort"),
    (["tpc", "--faults", "coordinator@after-prepare"], 0, "r6:alice+bob"),
])
def test_tpc_command(capsys, argv, code, needle):
    assert main(argv) == code
    assert needle in capsys.readouterr().out


def test_tpc_json(capsys):
    assert main(["tpc", "--votes", "yes,yes", "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["agreement"] is True and set(doc["decisions"].values()) == {"commit"}


def test_metrics(capsys):
    assert main(["metrics", "transfer", "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["extra_rounds"] == 3 and doc["alice_rounds_after_entry"] == [3, 5, 7]


def test_seed_changes_trace_only_in_secrets(tmp_path):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    main(["run", "htlc", "--trace", str(a), "--seed", "other"])
    main(["run", "htlc", "--trace", str(b)])
    assert a.read_text() != b.read_text()
    assert len(a.read_text().splitlines()) == len(b.read_text().splitlines())


@pytest.mark.parametrize("doc", [
    "{not json",
    '{"version": 1, "protocol": "htlc", "protocol": "htlc"}',
    {"version": 2, "protocol": "htlc"},
    {"version": 1, "protocol": "ftl"},
    {"version": 1, "protocol": "htlc", "params": {"warp": 9}},
    {"version": 1, "protocol": "htlc", "params": {"deadlines": {"nope": 1}}},
    {"version": 1, "protocol": "htlc", "strategies": [{"party": "mallory", "edits": []}]},
    {"version": 1, "protocol": "htlc", "strategies": [{"party": "bob", "edits": [{"x": 1}]}]},
    {"version": 1, "protocol": "htlc", "chains": {"guilder": {"alice": -5}, "florin": {}}},
    {"version": 1, "protocol": "htlc", "chains": {"guilder": {"alice": 100}}},
    {"version": 1, "protocol": "htlc", "chains": {"guilder": {"zed": 1}, "florin": {}}},
    {"version": 1, "protocol": "premium", "params": {"alice_amount": "lots"}},
    [1, 2],
])
def test_malformed_scenarios_exit_2(tmp_path, doc):
    assert main(["run", write(tmp_path, doc)]) == 2


@pytest.mark.parametrize("argv", [
    ["run", "no-such-scenario"],
    ["explore", "htlc"],
    ["explore", "htlc", "--deviating", "mallory"],
    ["tpc", "--faults", "alice@2"],
    ["tpc", "--faults", "alice@3:recover"],
    ["tpc", "--votes", "yes"],
    ["tpc", "--votes", "yes,perhaps"],
    ["run", "htlc", "--max-rounds", "0"],
    ["frobnicate"],
])
def test_bad_input_exit_2(argv):
    assert main(argv) == 2


def test_scenario_round_trip():
    for name in ("htlc", "premium", "transfer", "tpc"):
        sc = load_scenario(name)
        assert scenario_from_dict(sc.to_dict()).to_dict() == sc.to_dict()
    with pytest.raises(ScenarioError):
        load_scenario("missing")
