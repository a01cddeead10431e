import json
from importlib import resources

import pytest

from bpcover.cli import main

PIPELINE = str(resources.files("bpcover") / "data" / "telephony_pipeline.bps")


def run_cli(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture(scope="module")
def fsm(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "fsm.json"
    assert main(["explore", PIPELINE, "--depth", "2000", "--accept-quiescent",
                 "--fsm", str(path)]) == 0
    return path


def test_check(capsys, tmp_path):
    code, out, _ = run_cli(capsys, "check", PIPELINE)
    assert code == 0 and "ok" in out
    bad = tmp_path / "bad.bps"
    bad.write_text("Feature: f\n  Scenario: s\n    Frobnicate\n")
    code, _, err = run_cli(capsys, "check", bad)
    assert code == 2 and ":3:5:" in err


def test_explore_writes_dot_and_reports_deadlocks(capsys, tmp_path):
    dot = tmp_path / "g.dot"
    code, out, _ = run_cli(capsys, "explore", "builtin:elevator", "--dot", dot)
    assert code == 0 and "states=9" in out and dot.read_text().startswith("digraph")
    code, out, _ = run_cli(capsys, "explore", "builtin:philosophers", "--accept-quiescent")
    assert code == 1 and "deadlock: state" in out


def test_targets_generate_verify_run(capsys, tmp_path, fsm):
    code, out, _ = run_cli(capsys, "targets", fsm, "-t", "1")
    assert code == 0 and out.split() == ["addUser", "call", "checkBill", "sms", "testBill",
                                         "updateBill"]
    suite = tmp_path / "suite.json"
    code, _, err = run_cli(capsys, "generate", fsm, "-t", "2", "-o", suite)
    assert code == 0 and "word(s)" in err
    code, out, _ = run_cli(capsys, "verify", suite, fsm, "-t", "2")
    assert code == 0 and json.loads(out)["missing"] == []
    report = tmp_path / "report.json"
    code, out, _ = run_cli(capsys, "run", suite, "--fsm", fsm, "-t", "2", "--sut", "telephony",
                           "-o", report)
    assert code == 0 and "fail=0" in out
    doc = json.loads(report.read_text())
    assert doc["schema"] == "bpcover.report/1" and doc["coverage"]["missing"] == []
    code, out, _ = run_cli(capsys, "run", suite, "--sut", "telephony", "--fault",
                           "drop-sms-charge")
    assert code == 1 and "fail:" in out


def test_verify_flags_missing_coverage(capsys, tmp_path, fsm):
    short = tmp_path / "short.json"
    short.write_text(json.dumps({"words": []}))
    code, _, err = run_cli(capsys, "verify", short, fsm, "-t", "1")
    assert code == 1 and "missing:" in err


def test_run_refuses_words_outside_the_language(capsys, tmp_path, fsm):
    bogus = tmp_path / "bogus.json"
    bogus.write_text(json.dumps({"words": [["call(\"u1\",\"u2\",\"domestic\")"]]}))
    code, _, err = run_cli(capsys, "run", bogus, "--fsm", fsm, "--sut", "telephony")
    assert code == 1 and "refusing" in err


def test_generate_exact_budget(capsys, fsm):
    code, _, err = run_cli(capsys, "generate", fsm, "-t", "2", "--exact", "--budget", "3")
    assert code == 1 and "budget" in err


def test_monitor(capsys, monkeypatch):
    code, out, _ = run_cli(capsys, "monitor", "builtin:telephony-online", "--sut", "telephony",
                           "--max-events", "200", "--seed", "1")
    assert code == 0 and "pass=1" in out
    monkeypatch.setenv("BPCOVER_SEED", "3")
    code, out, _ = run_cli(capsys, "monitor", "builtin:telephony-monitor", "--sut", "telephony",
                           "--fault", "double-call-charge", "--max-events", "500")
    assert code == 1 and "fail=1" in out


def test_ponder(capsys, tmp_path):
    out = tmp_path / "perms.json"
    code, _, err = run_cli(capsys, "ponder", "-n", "4", "-t", "2", "-o", out)
    assert code == 0 and "2 permutation(s) cover 12 of 12" in err
    assert json.loads(out.read_text())["source"] == "permutation"
    code, _, _ = run_cli(capsys, "ponder", "-n", "3", "-t", "5")
    assert code == 2


def test_input_errors_exit_two(capsys, tmp_path):
    assert run_cli(capsys, "explore", tmp_path / "nope.bps")[0] == 2
    assert run_cli(capsys, "explore", "builtin:nope")[0] == 2
    junk = tmp_path / "junk.json"
    junk.write_text("{}")
    assert run_cli(capsys, "targets", junk, "-t", "2")[0] == 2
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 2


def test_unresolved_handlers_exit_two(capsys):
    code, _, err = run_cli(capsys, "explore", PIPELINE, "--handlers", "none")
    assert code == 2 and "unresolved handlers" in err
