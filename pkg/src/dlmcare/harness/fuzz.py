"""Seeded random command traces.

The universe has ten actors (four patients, three hospitals, three doctors)
and six devices. About 70% of the generated commands are built to satisfy
their preconditions against the current engine state; the rest draw their
arguments blindly from the universe so that every error path gets hit.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from dlmcare.errors import AssertionFailure, DivergenceError, DlmError
from dlmcare.harness.runner import Options, Runner
from dlmcare.harness.script import Command, parse_script
from dlmcare.state import SystemState, phones_of

PATIENTS = ("pat0", "pat1", "pat2", "pat3")
HOSPITALS = ("hosp0", "hosp1", "hosp2")
DOCTORS = ("doc0", "doc1", "doc2")
ACTORS = PATIENTS + HOSPITALS + DOCTORS
DEVICES = ("ph0", "ph1", "ph2", "ph3", "hub0", "hub1", "ghost")
PURPOSES = ("monitoring", "research", "care")
PAYLOADS = ("hr=60", "hr=72", "bp=120/80", "steps=4000", "wander=1", "sleep=6h")

SETUP = """\
REGISTER-PATIENT pat0
REGISTER-PATIENT pat1
REGISTER-PATIENT pat2
REGISTER-USER hosp0
REGISTER-USER hosp1
REGISTER-USER doc0
ADD-HOSPITAL hosp0 doc0 doc1
ADD-HOSPITAL hosp1 doc1 doc2
ADD-HOSPITAL hosp2 doc2
BIND-DEVICE ph0 sphone pat0 0000
BIND-DEVICE ph1 sphone pat1 1111
BIND-DEVICE ph2 sphone pat2 2222
BIND-DEVICE ph3 sphone pat3 3333
BIND-DEVICE hub0 home pat0 h0
BIND-DEVICE hub1 home pat1 h1
"""

WEIGHTS = {
    "UPLOAD": 26,
    "DOWNLOAD": 18,
    "DELETE": 10,
    "RESTRICT": 10,
    "TICK": 12,
    "SWEEP": 3,
    "SAR": 6,
    "DRAIN": 10,
    "REGISTER": 5,
}


class Generator:
    def __init__(self, seed: int, valid_bias: float = 0.7) -> None:
        self.rng = random.Random(seed)
        self.valid_bias = valid_bias
        self.verbs = list(WEIGHTS)
        self.weights = [WEIGHTS[v] for v in self.verbs]

    def _subset(self, pool) -> frozenset:
        pool = sorted(pool)
        k = self.rng.randint(0, min(3, len(pool)))
        return frozenset(self.rng.sample(pool, k))

    def _phone_of(self, state: SystemState, actor: str) -> str | None:
        phones = phones_of(state, actor)
        return phones[0] if phones else None

    def next_command(self, state: SystemState) -> Command:
        verb = self.rng.choices(self.verbs, self.weights)[0]
        if self.rng.random() < self.valid_bias:
            cmd = getattr(self, "valid_" + verb.lower())(state)
            if cmd is not None:
                return cmd
        return self.blind(verb, state)

    # -- precondition-respecting commands -----------------------------------
    def valid_upload(self, state):
        devs = sorted(d for d, s in state.devices.items() if s.bound_actor in state.auth.patients)
        if not devs:
            return None
        dev = self.rng.choice(devs)
        owner = state.devices[dev].bound_actor
        readers = self._subset(state.auth.reg_usrs)
        expiry = state.clock + self.rng.randint(0, 40)
        return Command("UPLOAD", (dev, owner, owner, readers, self.rng.choice(PURPOSES), expiry,
                                  self.rng.choice(PAYLOADS)))

    def _db_item(self, state):
        keys = sorted(state.db.table, key=lambda k: k.sort_key())
        keys = [k for k in keys if self._phone_of(state, k.label.owner)]
        return self.rng.choice(keys) if keys else None

    def valid_delete(self, state):
        key = self._db_item(state)
        if key is None:
            return None
        o = key.label.owner
        return Command("DELETE", (self._phone_of(state, o), o, o, key.label.readers, key.payload))

    def valid_restrict(self, state):
        key = self._db_item(state)
        if key is None:
            return None
        o = key.label.owner
        flag = self.rng.random() < 0.6
        return Command("RESTRICT", (self._phone_of(state, o), o, o, key.label.readers, key.payload, flag))

    def valid_download(self, state):
        options = sorted(
            {(h, item.label.owner) for item in state.db.table.values() for h in item.label.readers
             if h in state.hospitals and state.hospitals[h].staff}
        )
        if not options:
            return None
        h, owner = self.rng.choice(options)
        doctor = self.rng.choice(sorted(state.hospitals[h].staff))
        return Command("DOWNLOAD", (h, doctor, owner))

    def valid_tick(self, state):
        return Command("TICK", (self.rng.randint(1, 5),))

    def valid_sweep(self, state):
        return Command("SWEEP", ())

    def valid_sar(self, state):
        pats = [p for p in sorted(state.auth.patients) if self._phone_of(state, p)]
        if not pats:
            return None
        p = self.rng.choice(pats)
        return Command("SAR", (self._phone_of(state, p), p))

    def valid_drain(self, state):
        return Command("DRAIN", (self.rng.choice(sorted(state.devices) + list(ACTORS)),))

    def valid_register(self, state):
        missing = [("REGISTER-PATIENT", p) for p in PATIENTS if p not in state.auth.patients]
        missing += [("REGISTER-USER", a) for a in HOSPITALS + DOCTORS if a not in state.auth.reg_usrs]
        if not missing:
            return None
        verb, actor = self.rng.choice(missing)
        return Command(verb, (actor,))

    # -- error probes: one precondition broken on purpose ---------------------
    def blind(self, verb: str, state) -> Command:
        r = self.rng
        base = getattr(self, "valid_" + verb.lower())(state)
        if verb in ("TICK", "SWEEP", "DRAIN"):
            return base
        if verb == "REGISTER":
            return Command(r.choice(("REGISTER-PATIENT", "REGISTER-USER")), (r.choice(ACTORS),))
        if verb == "DOWNLOAD":
            h, doctor, owner = base.args if base else (r.choice(HOSPITALS), r.choice(DOCTORS), r.choice(PATIENTS))
            fault = r.randrange(5)
            if fault == 0:
                h = "hospX"
            elif fault == 1:
                doctor = r.choice(PATIENTS)
            elif fault == 2:
                owner = r.choice(ACTORS)
            elif fault == 3:
                h = r.choice(HOSPITALS)
                doctor = r.choice(DOCTORS)
            return Command("DOWNLOAD", (h, doctor, owner))
        if verb == "SAR":
            dev, claimed = r.choice(DEVICES), r.choice(ACTORS)
            if r.random() < 0.5 and dev in state.devices:
                claimed = state.devices[dev].bound_actor
            return Command("SAR", (dev, claimed))

        # UPLOAD / DELETE / RESTRICT
        dev = r.choice(DEVICES)
        owner = state.devices[dev].bound_actor if dev in state.devices else r.choice(PATIENTS)
        claimed, readers, payload = owner, self._subset(state.auth.reg_usrs), r.choice(PAYLOADS)
        if base is not None and verb != "UPLOAD":
            dev, claimed, owner, readers, payload = base.args[:5]
        fault = r.randrange(5)
        if fault == 0:
            dev = r.choice(DEVICES)
        elif fault == 1:
            claimed = r.choice(ACTORS)
        elif fault == 2:
            owner = r.choice(PATIENTS)
        elif fault == 3:
            readers = readers | {r.choice(ACTORS)}
        else:
            payload = r.choice(PAYLOADS)
        if verb == "UPLOAD":
            return Command("UPLOAD", (dev, claimed, owner, readers, r.choice(PURPOSES),
                                      state.clock + r.randint(0, 40), payload))
        if verb == "DELETE":
            return Command("DELETE", (dev, claimed, owner, readers, payload))
        return Command("RESTRICT", (dev, claimed, owner, readers, payload, r.random() < 0.5))


@dataclass
class FuzzResult:
    seed: int
    commands: list[Command] = field(default_factory=list)
    failure: DlmError | None = None
    runner: Runner | None = None
    outcomes: dict[str, int] = field(default_factory=dict)
    results: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.failure is None

    def script(self) -> str:
        """The trace as a scenario, with ``EXPECT-ERROR`` before each refusal."""
        lines = []
        for cmd, outcome in zip(self.commands, self.results):
            if outcome != "ok":
                lines.append(f"EXPECT-ERROR {outcome}")
            lines.append(cmd.to_line())
        return "".join(line + "\n" for line in lines)


def run_fuzz(seed: int, steps: int = 1000, sweep_every: int | None = 10, diff: bool = True,
             check_each: bool = True, strict_delete: bool = False) -> FuzzResult:
    """Generate and execute ``steps`` commands (setup included).

    Stops at the first divergence or invariant violation; error outcomes of
    the commands themselves are expected and merely counted.
    """
    options = Options(diff=diff, strict_delete=strict_delete, sweep_every=sweep_every, seed=seed,
                      check_each=check_each)
    runner = Runner(options)
    gen = Generator(seed)
    result = FuzzResult(seed, runner=runner)
    setup = parse_script(SETUP)
    try:
        for i in range(steps):
            cmd = setup[i] if i < len(setup) else gen.next_command(runner.state)
            result.commands.append(cmd)
            obs = runner.step(cmd)
            result.outcomes[obs.outcome] = result.outcomes.get(obs.outcome, 0) + 1
            result.results.append(obs.outcome)
    except (AssertionFailure, DivergenceError) as exc:
        result.failure = exc
    return result
