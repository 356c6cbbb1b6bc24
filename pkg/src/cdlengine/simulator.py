"""Contract lifecycle driver: init from form data, advance-time and event
commands, status labeling and replayable traces.

Advancing time injects the ``advance_time`` tick event and runs the
transition engine to quiescence, so one click bills one cycle. Events take
effect immediately the same way. Every command leaves at least one history
record (the injection record, round 0), followed by the engine's rounds.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

from .errors import (
    AmbiguousStatus,
    IncompatibleContract,
    NotAnEvent,
    ReplayDivergence,
    Terminated,
)
from .evaluator import stratified_model
from .parser import LoadedProgram, parse_goal
from .store import ExternalProvider, FactStore, file_provider
from .terms import SYMBOL_RE, Atom, Constant, IntLiteral, PredId
from .transitions import StepRecord, inject_event, run_until_quiescent

STATUSES = ("active", "invoiced", "payment_pending", "overdue", "terminated")

Date = tuple[int, int, int]  # (month, day, year)


def _date_key(d: Date) -> tuple[int, int, int]:
    return (d[2], d[0], d[1])


@dataclass(frozen=True)
class ExternalSpec:
    file: str
    descriptor: str | None = None


@dataclass(frozen=True)
class SimConfig:
    start_date: Date
    monthly_payment: int
    invoice_day: int
    termination_date: Date
    grace_days: int = 10
    account_id: str = "afa"
    externals: tuple[ExternalSpec, ...] = ()
    holidays: tuple[Date, ...] = ()
    display_scale: int = 1

    def validate(self) -> None:
        if not 1 <= self.invoice_day <= 31:
            raise ValueError(f"invoice_day {self.invoice_day} not in 1..31")
        if self.monthly_payment < 1:
            raise ValueError("monthly_payment must be a positive integer")
        if not 0 <= self.grace_days <= 27:
            raise ValueError("grace_days must be in 0..27 so deadlines roll at most one month")
        if _date_key(self.start_date) >= _date_key(self.termination_date):
            raise ValueError("start_date must be strictly before termination_date")
        if not SYMBOL_RE.match(self.account_id):
            raise ValueError(f"account_id {self.account_id!r} is not a symbol")
        if self.display_scale < 1:
            raise ValueError("display_scale must be >= 1")

    @staticmethod
    def from_dict(data: dict) -> "SimConfig":
        externals = tuple(
            ExternalSpec(e["file"], e.get("descriptor")) for e in data.get("externals", [])
        )
        cfg = SimConfig(
            start_date=tuple(data["start_date"]),
            monthly_payment=data["monthly_payment"],
            invoice_day=data["invoice_day"],
            termination_date=tuple(data["termination_date"]),
            grace_days=data.get("grace_days", 10),
            account_id=data.get("account_id", "afa"),
            externals=externals,
            holidays=tuple(tuple(h) for h in data.get("holidays", [])),
            display_scale=data.get("display_scale", 1),
        )
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        return {
            "start_date": list(self.start_date),
            "monthly_payment": self.monthly_payment,
            "invoice_day": self.invoice_day,
            "termination_date": list(self.termination_date),
            "grace_days": self.grace_days,
            "account_id": self.account_id,
            "externals": [
                {"file": e.file, **({"descriptor": e.descriptor} if e.descriptor else {})}
                for e in self.externals
            ],
            "holidays": [list(h) for h in self.holidays],
            "display_scale": self.display_scale,
        }


@dataclass(frozen=True)
class SimState:
    loaded: LoadedProgram
    config: SimConfig
    store: FactStore
    history: tuple[StepRecord, ...] = ()
    status: str = "active"


@dataclass(frozen=True)
class Trace:
    config: SimConfig
    records: tuple[StepRecord, ...]
    final_status: str

    def to_json_lines(self, canonical: bool = False) -> str:
        lines = [json.dumps({"kind": "config", **self.config.to_dict()}, sort_keys=True)]
        for r in self.records:
            lines.append(r.to_json_line(canonical))
        lines.append(json.dumps({"kind": "final", "status": self.final_status}, sort_keys=True))
        return "\n".join(lines) + "\n"


_STATUS_VIEWS: dict[str, PredId] = {name: (f"status_{name}", 0) for name in STATUSES}

_SEEDED: tuple[PredId, ...] = (
    ("today", 3),
    ("monthly_payment", 2),
    ("has_invoice_day", 2),
    ("has_due_day", 2),
    ("has_termination_date", 4),
    ("current_balance", 2),
    ("pending_withdrawal", 2),
    ("grace_period_days", 2),
)


def check_compatibility(loaded: LoadedProgram) -> None:
    """The simulator needs the lifecycle protocol: status views, the
    advance_time event, and base roles for the facts it seeds."""
    missing: list[str] = []
    for name, pred in _STATUS_VIEWS.items():
        if loaded.signature.get(pred) != "view":
            missing.append(f"view {pred[0]}/0")
    if ("advance_time", 0) not in loaded.program.declared_events:
        missing.append("event advance_time/0")
    for pred in _SEEDED:
        role = loaded.signature.get(pred)
        if role is None or role != "base":
            missing.append(f"base predicate {pred[0]}/{pred[1]}")
    if missing:
        raise IncompatibleContract("contract is missing: " + ", ".join(missing))


def status_label(loaded: LoadedProgram, store: FactStore) -> str:
    """The single lifecycle label; zero or several holding is a contract bug."""
    model = stratified_model(loaded, store, only=list(_STATUS_VIEWS.values()))
    holding = [name for name, pred in _STATUS_VIEWS.items() if model.has(Atom(pred[0]))]
    if len(holding) != 1:
        raise AmbiguousStatus(holding)
    return holding[0]


def load_providers(
    config: SimConfig, loaded: LoadedProgram, base_dir: Path | None = None
) -> list[ExternalProvider]:
    providers: list[ExternalProvider] = []
    for spec in config.externals:
        path = Path(spec.file)
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        data = json.loads(path.read_text())
        for pred_id in loaded.program.declared_externals:
            if pred_id[0] in data:
                providers.append(file_provider(path, pred_id, spec.descriptor))
    return providers


def init_simulation(
    loaded: LoadedProgram, config: SimConfig, base_dir: Path | None = None
) -> SimState:
    config.validate()
    check_compatibility(loaded)
    acct = Constant(config.account_id)
    m, d, y = config.start_date
    tm, td, ty = config.termination_date
    seeds = [
        Atom("today", (IntLiteral(m), IntLiteral(d), IntLiteral(y))),
        Atom("monthly_payment", (acct, IntLiteral(config.monthly_payment))),
        Atom("has_invoice_day", (acct, IntLiteral(config.invoice_day))),
        Atom("has_due_day", (acct, IntLiteral(config.invoice_day))),
        Atom("has_termination_date", (acct, IntLiteral(tm), IntLiteral(td), IntLiteral(ty))),
        Atom("current_balance", (acct, IntLiteral(0))),
        Atom("pending_withdrawal", (acct, IntLiteral(0))),
        Atom("grace_period_days", (acct, IntLiteral(config.grace_days))),
    ]
    for hm, hd, hy in config.holidays:
        seeds.append(Atom("holiday", (IntLiteral(hm), IntLiteral(hd), IntLiteral(hy))))
    atoms = [f.atom for f in loaded.program.facts] + seeds
    providers = load_providers(config, loaded, base_dir)
    store = FactStore.from_atoms(atoms, loaded.signature, providers)
    return SimState(loaded, config, store, (), status_label(loaded, store))


def _run_command(sim: SimState, event: Atom, max_rounds: int = 100) -> SimState:
    if sim.status == "terminated":
        raise Terminated(f"contract is terminated; cannot process {event}")
    injected = inject_event(sim.loaded, sim.store, event)
    injection_record = StepRecord(
        round_index=0,
        fired=(),
        pre_version=sim.store.version,
        post_version=injected.version,
        injected_events=(event,),
    )
    final, records = run_until_quiescent(sim.loaded, injected, max_rounds=max_rounds)
    history = sim.history + (injection_record,) + tuple(records)
    return replace(sim, store=final, history=history, status=status_label(sim.loaded, final))


def advance(sim: SimState) -> SimState:
    """One Advance Time click: bill the next cycle and settle consequences."""
    return _run_command(sim, Atom("advance_time"))


def send_event(sim: SimState, event: Atom) -> SimState:
    """Deliver an external event; it takes effect immediately."""
    if event.pred_id == ("payment_received_amount", 1):
        arg = event.args[0]
        if not isinstance(arg, IntLiteral) or arg.value < 1:
            raise NotAnEvent("payment_received_amount requires a positive integer amount")
    return _run_command(sim, event)


def export_trace(sim: SimState) -> Trace:
    return Trace(sim.config, sim.history, sim.status)


def parse_trace(text: str) -> Trace:
    """Read a JSON-lines trace back into a Trace."""
    lines = [l for l in text.splitlines() if l.strip()]
    header = json.loads(lines[0])
    assert header.pop("kind") == "config"
    config = SimConfig.from_dict(header)
    records: list[StepRecord] = []
    final_status = "active"
    for line in lines[1:]:
        data = json.loads(line)
        if data["kind"] == "final":
            final_status = data["status"]
            continue
        records.append(_record_from_dict(data))
    return Trace(config, tuple(records), final_status)


def _atom_from_text(text: str) -> Atom:
    goal, diags = parse_goal(text)
    if goal is None or len(goal) != 1 or goal[0].negated:
        raise ValueError(f"not an atom: {text!r}")
    return goal[0].atom


def _record_from_dict(data: dict) -> StepRecord:
    from .transitions import FiredInstance

    fired = []
    for f in data["fired"]:
        fired.append(
            FiredInstance(
                rule_id=f["rule_id"],
                binding={k: _term_from_json(v) for k, v in f["binding"].items()},
                adds=frozenset(_atom_from_text(a) for a in f["adds"]),
                retracts=frozenset(_atom_from_text(a) for a in f["retracts"]),
            )
        )
    return StepRecord(
        round_index=data["round_index"],
        fired=tuple(fired),
        pre_version=data["pre_version"],
        post_version=data["post_version"],
        injected_events=tuple(_atom_from_text(a) for a in data["injected_events"]),
    )


def _term_from_json(value: object):
    from .terms import StringLiteral

    if isinstance(value, int):
        return IntLiteral(value)
    text = str(value)
    if SYMBOL_RE.match(text):
        return Constant(text)
    if text.isidentifier() and text[0].isupper():
        from .terms import Variable

        return Variable(text)
    return StringLiteral(text)


def replay_trace(
    loaded: LoadedProgram, trace: Trace, base_dir: Path | None = None
) -> SimState:
    """Re-execute a trace's commands; any difference from the recorded rounds
    raises ReplayDivergence with the first differing history index."""
    sim = init_simulation(loaded, trace.config, base_dir)
    # group records into command runs: each run starts at an injection record
    runs: list[tuple[Atom, list[StepRecord]]] = []
    for record in trace.records:
        if record.injected_events:
            if len(record.injected_events) != 1:
                raise ReplayDivergence(record.round_index, "multi-event injection record")
            runs.append((record.injected_events[0], [record]))
        else:
            if not runs:
                raise ReplayDivergence(record.round_index, "trace starts mid-run")
            runs[-1][1].append(record)

    for event, expected in runs:
        before = len(sim.history)
        sim = _run_command(sim, event)
        produced = sim.history[before:]
        for i, (want, got) in enumerate(zip(expected, produced)):
            if want.to_json_line(canonical=True) != got.to_json_line(canonical=True):
                raise ReplayDivergence(want.round_index, f"history entry {before + i} differs")
        if len(expected) != len(produced):
            raise ReplayDivergence(
                expected[-1].round_index, "replay produced a different number of rounds"
            )
    if sim.status != trace.final_status:
        raise ReplayDivergence(-1, f"final status {sim.status} != recorded {trace.final_status}")
    return sim
