"""Forward execution of dynamic rules (``condition ==> effects``).

Firing is batch-synchronous: every applicable instance is computed against
the pre-state's perfect model, then all retractions apply, then all
additions, as one atomic store mutation. Declaration order never affects
the resulting store, only the order of log entries; a round that both adds
and retracts the same ground atom is an error, not an order dependence.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import ConflictingEffects, NonQuiescent, NotAnEvent
from .evaluator import DEFAULT_DERIVED_CAP, _Context, stratified_model
from .parser import LoadedProgram
from .store import Binding, FactStore, substitute
from .terms import Atom, Term, atom_variables


@dataclass(frozen=True)
class FiredInstance:
    rule_id: str
    binding: Binding
    adds: frozenset[Atom]
    retracts: frozenset[Atom]

    def sort_key(self) -> tuple:
        return (self.rule_id, tuple(sorted((k, str(v)) for k, v in self.binding.items())))

    def as_dict(self) -> dict:
        return {
            "rule_id": self.rule_id,
            "binding": {k: _term_json(v) for k, v in sorted(self.binding.items())},
            "adds": sorted(str(a) for a in self.adds),
            "retracts": sorted(str(a) for a in self.retracts),
        }


def _term_json(term: Term) -> object:
    from .terms import IntLiteral, StringLiteral

    if isinstance(term, IntLiteral):
        return term.value
    if isinstance(term, StringLiteral):
        return term.value
    return str(term)


@dataclass(frozen=True)
class StepRecord:
    round_index: int
    fired: tuple[FiredInstance, ...]
    pre_version: int
    post_version: int
    injected_events: tuple[Atom, ...] = ()

    def as_dict(self, canonical: bool = False) -> dict:
        fired = list(self.fired)
        if canonical:
            fired = sorted(fired, key=FiredInstance.sort_key)
        return {
            "kind": "step",
            "round_index": self.round_index,
            "fired": [f.as_dict() for f in fired],
            "pre_version": self.pre_version,
            "post_version": self.post_version,
            "injected_events": sorted(str(a) for a in self.injected_events),
        }

    def to_json_line(self, canonical: bool = False) -> str:
        return json.dumps(self.as_dict(canonical), sort_keys=True, separators=(",", ":"))


def applicable_instances(
    loaded: LoadedProgram, store: FactStore, max_derived: int = DEFAULT_DERIVED_CAP
) -> list[FiredInstance]:
    """All (rule, binding) pairs whose condition holds in the current model.

    Listed in canonical order: program order first, then lexicographic
    binding order within one rule.
    """
    needed = [
        lit.atom.pred_id
        for rule in loaded.program.dynamics
        for lit in rule.condition
        if not lit.builtin
    ]
    model = stratified_model(loaded, store, max_derived, only=needed)
    ctx = _Context(loaded, store, max_derived)
    ctx.model = model
    ctx.extern_cache = model.extern_cache
    out: list[FiredInstance] = []
    for rule in loaded.program.dynamics:
        instances: dict[tuple, FiredInstance] = {}
        cond_vars = {v for lit in rule.condition for v in atom_variables(lit.atom)}
        for env in ctx.solve(rule.condition, 0, {}):
            binding = {v: env[v] for v in sorted(cond_vars) if v in env}
            adds = frozenset(
                substitute(e.atom, env) for e in rule.effects if not e.retract
            )
            retracts = frozenset(
                substitute(e.atom, env) for e in rule.effects if e.retract
            )
            inst = FiredInstance(rule.rule_id, binding, adds, retracts)
            instances.setdefault(inst.sort_key(), inst)
        out.extend(sorted(instances.values(), key=FiredInstance.sort_key))
    return out


def step(
    loaded: LoadedProgram,
    store: FactStore,
    round_index: int = 0,
    max_derived: int = DEFAULT_DERIVED_CAP,
) -> tuple[FactStore, StepRecord]:
    """One synchronized round. The store is unchanged when nothing fires."""
    fired = applicable_instances(loaded, store, max_derived)
    if not fired:
        return store, StepRecord(round_index, (), store.version, store.version)

    adds: dict[Atom, str] = {}
    retracts: dict[Atom, str] = {}
    for inst in fired:
        for a in inst.adds:
            adds.setdefault(a, inst.rule_id)
        for a in inst.retracts:
            retracts.setdefault(a, inst.rule_id)
    conflict = sorted(set(adds) & set(retracts), key=str)
    if conflict:
        atom = conflict[0]
        raise ConflictingEffects(atom, (adds[atom], retracts[atom]))

    new_store = store.apply_batch(adds=list(adds), retracts=list(retracts))
    record = StepRecord(round_index, tuple(fired), store.version, new_store.version)
    return new_store, record


def inject_event(loaded: LoadedProgram, store: FactStore, event: Atom) -> FactStore:
    """Assert an externally produced event fact (declared via ``#event``)."""
    if event.pred_id not in loaded.program.declared_events:
        raise NotAnEvent(f"{event.predicate}/{len(event.args)} is not a declared event")
    return store.assert_fact(event)


def run_until_quiescent(
    loaded: LoadedProgram,
    store: FactStore,
    max_rounds: int = 100,
    start_round: int = 1,
    max_derived: int = DEFAULT_DERIVED_CAP,
) -> tuple[FactStore, list[StepRecord]]:
    """Step until a round fires nothing; rounds that fire nothing produce no record."""
    records: list[StepRecord] = []
    current = store
    for i in range(max_rounds):
        nxt, record = step(loaded, current, start_round + i, max_derived)
        if not record.fired:
            return current, records
        records.append(record)
        current = nxt
    raise NonQuiescent(max_rounds)
