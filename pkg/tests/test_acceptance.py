"""Exit criteria. Each test prints one PASS/FAIL line; the conftest summary
repeats them at the end of the run."""

import time
from pathlib import Path

import pytest

from dlmcare import cli
from dlmcare import operations as ops
from dlmcare.audit import dump_audit, parse_audit
from dlmcare.errors import AssertionFailure, DivergenceError, NoAccessibleData
from dlmcare.harness import snapshot
from dlmcare.harness.fuzz import ACTORS, HOSPITALS, run_fuzz
from dlmcare.harness.replay import replay
from dlmcare.harness.runner import Options, Runner, run_scenario
from dlmcare.harness.script import parse_script
from dlmcare.labels import DlmLabel, ItemKey, flow_permitted

pytestmark = pytest.mark.acceptance

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"
TRACES, STEPS, SWEEP_EVERY = 100, 1000, 10


def report(n, ok, detail=""):
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}".rstrip())


@pytest.fixture(scope="module")
def fuzz_runs():
    start = time.perf_counter()
    runs = [run_fuzz(seed, STEPS, sweep_every=SWEEP_EVERY, diff=True, check_each=True) for seed in range(TRACES)]
    return runs, time.perf_counter() - start


def test_1_collaborations_replay():
    start = time.perf_counter()
    result = run_scenario((SCENARIOS / "collaborations.scn").read_text(), Options(diff=True))
    elapsed = time.perf_counter() - start
    download = next(line for line in result.trace if "\tDOWNLOAD " in line)
    rebuilt = replay(parse_audit(dump_audit(result.state.audit)))
    ok = (
        result.exit_code == 0
        and "download_ok->drbob" in download
        and "access->alice" in download
        and all(not table for _, table in result.state.tables())
        and snapshot.dumps(rebuilt) == snapshot.dumps(result.state)
        and elapsed < 1.0
    )
    report(1, ok, f"({elapsed * 1000:.1f} ms)")
    assert result.exit_code == 0, result.failure
    assert "download_ok->drbob" in download and "access->alice" in download
    assert all(not table for _, table in result.state.tables())
    assert snapshot.dumps(rebuilt) == snapshot.dumps(result.state)
    assert elapsed < 1.0


def test_2_invariants_hold_on_seeded_fuzz(fuzz_runs):
    runs, elapsed = fuzz_runs
    violations = [r for r in runs if isinstance(r.failure, AssertionFailure)]
    steps = sum(len(r.commands) for r in runs)
    ok = not violations and elapsed < 60 and steps == TRACES * STEPS
    report(2, ok, f"({len(violations)} violations, {steps} commands, {elapsed:.1f} s)")
    assert len(ACTORS) <= 10 and len(HOSPITALS) <= 3
    assert steps == TRACES * STEPS
    assert not violations, violations[0].failure
    for r in runs:
        assert r.runner.invariant_report().ok
    assert elapsed < 60


def test_3_engine_matches_reference(fuzz_runs):
    runs, _ = fuzz_runs
    divergences = [r for r in runs if isinstance(r.failure, DivergenceError)]
    report(3, not divergences, f"({len(divergences)} divergences)")
    assert not divergences, divergences[0].failure
    assert all(r.runner.reference is not None for r in runs)


def _gdpr_run():
    result = run_scenario((SCENARIOS / "gdpr_rights.scn").read_text(), Options(diff=True))
    assert result.exit_code == 0, result.failure
    return result.state


def test_4a_subject_access_matches_full_scan():
    state = _gdpr_run()
    sar = ops.subject_access_request(state, "phone1", "alice")
    expected = {}
    for loc, table in state.tables():
        for key, item in table.items():
            if key.label.owner == "alice":
                expected.setdefault(key, {})[loc] = item.meta
    ok = {e.key for e in sar.entries} == set(expected) and bool(expected)
    for e in sar.entries:
        primary = expected[e.key].get("db") or expected[e.key][sorted(expected[e.key])[0]]
        history = [r for r in state.audit if r.item == e.key]
        ok = ok and e.locations == set(expected[e.key])
        ok = ok and (e.purpose, e.expiry, e.restricted) == (primary.purpose, primary.expiry, primary.restricted)
        ok = ok and list(e.history) == history and any(r.effect == "added" for r in history)
    report("4a", ok)
    assert ok


def test_4b_erasure_and_restriction():
    state = _gdpr_run()
    deleted = ItemKey(DlmLabel.of("alice", ["hosp1", "hosp2"]), "steps=4000")
    gone = all(deleted not in table for _, table in state.tables())

    r = Runner(Options(diff=True, check_each=True))
    for cmd in parse_script("""
        REGISTER-PATIENT alice
        REGISTER-USER hosp1
        ADD-HOSPITAL hosp1 drbob
        BIND-DEVICE phone1 sphone alice 1
        UPLOAD phone1 alice alice hosp1 care 30 a
        UPLOAD phone1 alice alice hosp1 care 30 b
        RESTRICT phone1 alice alice hosp1 a true
        DOWNLOAD hosp1 drbob alice
    """):
        r.step(cmd)
    hosp = set(r.state.hospitals["hosp1"].table)
    restricted_key = ItemKey(DlmLabel.of("alice", ["hosp1"]), "a")
    excluded = restricted_key not in hosp and ItemKey(DlmLabel.of("alice", ["hosp1"]), "b") in hosp
    r.step(parse_script("RESTRICT phone1 alice alice hosp1 b true")[0])
    with pytest.raises(NoAccessibleData):
        ops.download(r.state, "hosp1", "drbob", "alice")
    report("4b", gone and excluded, "(I4 after delete, I10 after restrict)")
    assert gone and excluded
    assert r.invariant_report()["I4"].status == "pass"
    assert r.invariant_report()["I10"].status == "pass"


def test_4c_every_copy_is_label_preserving(fuzz_runs):
    runs, _ = fuzz_runs
    logs = [r.runner.state.audit for r in runs] + [_gdpr_run().audit]
    copies = violations = 0
    for log in logs:
        for rec in parse_audit(dump_audit(log)):
            if rec.effect == "added" and rec.node != "db":
                copies += 1
                if not flow_permitted(rec.item, rec.node):
                    violations += 1
    report("4c", violations == 0 and copies > 0, f"({copies} copies checked)")
    assert copies > 0
    assert violations == 0


def test_5_strict_delete_refuses_and_is_atomic(tmp_path):
    setup = """
        REGISTER-PATIENT alice
        REGISTER-USER hosp1
        REGISTER-USER hosp2
        ADD-HOSPITAL hosp1 drbob
        ADD-HOSPITAL hosp2 drdan
        BIND-DEVICE phone1 sphone alice 1234
        UPLOAD phone1 alice alice hosp1,hosp2 monitoring 50 hr=72
        DOWNLOAD hosp1 drbob alice
    """
    runner = Runner(Options(diff=True, strict_delete=True))
    for cmd in parse_script(setup):
        runner.step(cmd)
    before = snapshot.dumps(runner.state)
    obs = runner.step(parse_script("DELETE phone1 alice alice hosp1,hosp2 hr=72")[0])
    unchanged = snapshot.dumps(runner.state) == before

    script = tmp_path / "strict.scn"
    script.write_text(setup + "EXPECT-ERROR StrictPreconditionFailed\nDELETE phone1 alice alice hosp1,hosp2 hr=72\n"
                      "DOWNLOAD hosp2 drdan alice\nDELETE phone1 alice alice hosp1,hosp2 hr=72\n")
    cli_code = cli.main(["run", str(script), "--strict-delete", "--diff"])
    ok = obs.outcome == "StrictPreconditionFailed" and unchanged and cli_code == 0
    report(5, ok)
    assert obs.outcome == "StrictPreconditionFailed"
    assert unchanged
    assert cli_code == 0


def test_6_determinism(tmp_path):
    files = []
    for run in ("a", "b"):
        snap, log = tmp_path / f"{run}.snap", tmp_path / f"{run}.log"
        fsnap, flog = tmp_path / f"{run}f.snap", tmp_path / f"{run}f.log"
        assert cli.main(["run", str(SCENARIOS / "gdpr_rights.scn"), "--seed", "42", "--sweep-every", "5",
                         "--snapshot", str(snap), "--audit", str(log)]) == 0
        assert cli.main(["fuzz", "--seed", "42", "--steps", "500",
                         "--snapshot", str(fsnap), "--audit", str(flog)]) == 0
        files.append([p.read_bytes() for p in (snap, log, fsnap, flog)])
    ok = files[0] == files[1]
    report(6, ok)
    assert ok
