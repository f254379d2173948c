"""Scenario execution against the engine, optionally mirrored by the
reference model and followed by invariant checks."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from dlmcare import audit, operations, retention
from dlmcare import state as st
from dlmcare.errors import AssertionFailure, DivergenceError, DlmError
from dlmcare.harness.invariants import InvariantChecker, InvariantReport
from dlmcare.harness.reference import Observation, ReferenceModel, bag
from dlmcare.harness.script import Command, parse_script
from dlmcare.labels import DlmLabel, ItemKey, Meta
from dlmcare.state import SystemState

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


@dataclass
class Options:
    diff: bool = False
    strict_delete: bool = False
    sweep_every: int | None = None
    seed: int | None = None
    check: bool = True  # invariants on exit
    check_each: bool = False  # invariants after every command


def _triple(key: ItemKey) -> tuple:
    return (key.label.owner, key.label.readers, key.payload)


def engine_tables(state: SystemState) -> dict:
    return {
        location: frozenset(
            (*_triple(k), it.meta.purpose, it.meta.expiry, it.meta.restricted) for k, it in table.items()
        )
        for location, table in state.tables()
    }


def _emitted(msgs: Iterable[audit.Message]) -> dict:
    return bag((m.kind, m.recipient, [_triple(k) for k in m.items]) for m in msgs)


def execute(state: SystemState, cmd: Command, strict_delete: bool = False) -> Observation:
    """Run one scenario command on the engine; errors become the outcome."""
    v, a = cmd.verb, cmd.args
    value = None
    try:
        if v == "REGISTER-PATIENT":
            st.register_patient(state, a[0])
        elif v == "REGISTER-USER":
            st.register_user(state, a[0])
        elif v == "ADD-HOSPITAL":
            st.add_hospital(state, a[0], a[1])
        elif v == "BIND-DEVICE":
            st.bind_device(state, *a)
        elif v == "UPLOAD":
            dev, claimed, owner, readers, purpose, expiry, payload = a
            res = operations.upload(state, dev, payload, DlmLabel(owner, readers), Meta(purpose, expiry), claimed)
            return Observation("ok", _emitted(res.emitted))
        elif v == "DELETE":
            dev, claimed, owner, readers, payload = a
            mode = "strict" if strict_delete else "lenient"
            res = operations.delete(state, dev, payload, DlmLabel(owner, readers), claimed, mode)
            return Observation("ok", _emitted(res.emitted))
        elif v == "DOWNLOAD":
            res = operations.download(state, *a)
            return Observation("ok", _emitted(res.emitted))
        elif v == "RESTRICT":
            dev, claimed, owner, readers, payload, flag = a
            operations.restrict(state, dev, payload, DlmLabel(owner, readers), claimed, flag)
        elif v == "TICK":
            retention.tick(state, a[0])
        elif v == "SWEEP":
            value = frozenset(_triple(k) for k in retention.sweep(state))
        elif v == "SAR":
            report = operations.subject_access_request(state, a[0], a[1])
            value = {
                _triple(e.key): (e.locations, (e.purpose, e.expiry, e.restricted)) for e in report.entries
            }
        elif v == "DRAIN":
            value = [(m.kind, m.recipient, frozenset(_triple(k) for k in m.items)) for m in audit.drain(state, a[0])]
        else:
            raise ValueError(f"{v} is not an engine command")
    except DlmError as exc:
        return Observation(exc.code)
    return Observation("ok", {}, value)


def _describe(obs: Observation) -> str:
    parts = [obs.outcome]
    for recipient in sorted(obs.messages):
        for (kind, items), n in sorted(obs.messages[recipient].items(), key=lambda kv: (kv[0][0], sorted(kv[0][1], key=str))):
            parts.append(f"{kind}->{recipient}x{n}[{len(items)}]")
    if isinstance(obs.value, list):
        parts.append("delivered=" + ",".join(kind for kind, _, _ in obs.value))
    elif isinstance(obs.value, frozenset):
        parts.append(f"erased={len(obs.value)}")
    elif isinstance(obs.value, dict):
        parts.append(f"entries={len(obs.value)}")
    return " ".join(parts)


@dataclass
class RunResult:
    state: SystemState
    trace: list[str] = field(default_factory=list)
    exit_code: int = EXIT_OK
    failure: DlmError | None = None
    report: InvariantReport | None = None
    steps: int = 0

    def trace_text(self) -> str:
        return "".join(line + "\n" for line in self.trace)


class Runner:
    """Executes commands one at a time.

    With ``diff`` the reference model runs every command too and any
    disagreement raises :class:`DivergenceError`. With ``check_each`` the
    invariant suite runs after every command and raises
    :class:`AssertionFailure` on the first violation.
    """

    def __init__(self, options: Options | None = None) -> None:
        self.options = options or Options()
        self.state = SystemState()
        self.reference = ReferenceModel(self.options.strict_delete) if self.options.diff else None
        self.checker = InvariantChecker()
        self.trace: list[str] = []
        self.steps = 0
        self._last_auto_sweep_bucket = 0

    def step(self, cmd: Command) -> Observation:
        obs = execute(self.state, cmd, self.options.strict_delete)
        self.steps += 1
        self.trace.append(f"{self.steps}\t{cmd.to_line()}\t{_describe(obs)}")
        if self.reference is not None:
            expected = self.reference.apply(cmd.verb, cmd.args)
            self._compare(cmd, obs, expected)
        if self.options.check_each:
            self.assert_invariants(cmd)
        if cmd.verb == "TICK" and obs.outcome == "ok" and self.options.sweep_every:
            bucket = self.state.clock // self.options.sweep_every
            if bucket > self._last_auto_sweep_bucket:
                self._last_auto_sweep_bucket = bucket
                self.step(Command("SWEEP", (), cmd.line))
        return obs

    def _compare(self, cmd: Command, got: Observation, want: Observation) -> None:
        problem = None
        if got.outcome != want.outcome:
            problem = f"outcome {got.outcome} != reference {want.outcome}"
        elif got.messages != want.messages:
            problem = f"messages {got.messages} != reference {want.messages}"
        elif got.value != want.value:
            problem = f"result {got.value!r} != reference {want.value!r}"
        elif self.state.clock != self.reference.clock:
            problem = f"clock {self.state.clock} != reference {self.reference.clock}"
        else:
            mine, theirs = engine_tables(self.state), self.reference.tables()
            if mine != theirs:
                bad = sorted(loc for loc in set(mine) | set(theirs) if mine.get(loc) != theirs.get(loc))
                problem = f"tables differ at {bad}"
        if problem:
            if len(problem) > 400:
                problem = problem[:400] + "..."
            raise DivergenceError(f"step {self.steps} ({cmd.to_line()}): {problem}", self.steps)

    def invariant_report(self) -> InvariantReport:
        return self.checker.check(self.state, oracle_ok=True if self.reference is not None else None)

    def assert_invariants(self, cmd: Command | None = None) -> InvariantReport:
        report = self.invariant_report()
        if not report.ok:
            first = report.failures[0]
            where = f" after step {self.steps} ({cmd.to_line()})" if cmd else ""
            raise AssertionFailure(f"invariant {first.id} ({first.name}) violated{where}", first.id, first.witness)
        return report


def run_commands(commands: list[Command], options: Options | None = None) -> RunResult:
    runner = Runner(options)
    result = RunResult(runner.state)
    expect: Command | None = None
    try:
        for cmd in commands:
            if cmd.verb == "EXPECT-ERROR":
                expect = cmd
                continue
            if cmd.verb == "ASSERT-INVARIANTS":
                runner.trace.append(f"-\t{cmd.to_line()}\tchecked")
                runner.assert_invariants(cmd)
                continue
            obs = runner.step(cmd)
            if expect is not None:
                code = expect.args[0]
                expect = None
                if obs.outcome != code:
                    raise AssertionFailure(
                        f"line {cmd.line}: expected {code}, got {obs.outcome}", "EXPECT-ERROR", cmd.to_line()
                    )
            elif obs.outcome != "ok":
                raise AssertionFailure(f"line {cmd.line}: unexpected {obs.outcome}", "EXPECT-ERROR", cmd.to_line())
        if expect is not None:
            raise AssertionFailure(f"line {expect.line}: EXPECT-ERROR without a following command", "EXPECT-ERROR")
        if runner.options.check:
            result.report = runner.assert_invariants()
    except (AssertionFailure, DivergenceError) as exc:
        result.failure = exc
        result.exit_code = EXIT_FAIL
    result.trace = runner.trace
    result.steps = runner.steps
    return result


def run_scenario(script: str, options: Options | None = None) -> RunResult:
    """Parse and run a scenario; malformed input raises ``ParseError``."""
    return run_commands(parse_script(script), options)

