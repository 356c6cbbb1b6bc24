"""Contract libraries: run one query across many instances and measure the
impact of fact overrides (what-if scenarios) without touching stored state.

A scenario override names a retract pattern and an assert template; the
template's integer arguments may be expressions over variables bound by the
retracted match, using plus/minus/times and bp_scale(X, BP) which scales by
basis points rounding down. Percentage changes stay in exact integer
arithmetic that way.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

from .bundle import ContractBundle
from .errors import EngineError, OverrideMismatch
from .evaluator import query
from .parser import Diagnostic, parse_atom_pattern
from .simulator import init_simulation
from .store import Binding, FactStore, unify_atom
from .terms import Atom, Compound, IntLiteral, Literal, Term, Variable


@dataclass
class PortfolioEntry:
    contract_id: str
    bundle: ContractBundle
    store: FactStore


@dataclass
class Portfolio:
    entries: dict[str, PortfolioEntry] = field(default_factory=dict)
    failures: dict[str, list[Diagnostic]] = field(default_factory=dict)

    def ids(self) -> list[str]:
        return sorted(self.entries)


@dataclass(frozen=True)
class Override:
    filter: Atom | None
    retract: Atom
    assert_template: Atom


@dataclass(frozen=True)
class Scenario:
    name: str
    overrides: tuple[Override, ...]

    @staticmethod
    def from_dict(data: dict) -> "Scenario":
        overrides = []
        for o in data.get("overrides", []):
            overrides.append(
                Override(
                    filter=_parse_pattern(o["filter"]) if o.get("filter") else None,
                    retract=_parse_pattern(o["retract"]),
                    assert_template=_parse_pattern(o["assert"]),
                )
            )
        return Scenario(data.get("name", "unnamed"), tuple(overrides))


def _parse_pattern(text: str) -> Atom:
    return parse_atom_pattern(text)


@dataclass(frozen=True)
class ContractDiff:
    contract_id: str
    before: tuple[Binding, ...]
    after: tuple[Binding, ...]
    changed: bool
    error: str | None = None
    warnings: tuple[str, ...] = ()


@dataclass(frozen=True)
class DiffReport:
    scenario: str
    goal_text: str
    per_contract: tuple[ContractDiff, ...]
    affected: int
    total: int

    def as_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "goal": self.goal_text,
            "affected": self.affected,
            "total": self.total,
            "contracts": [
                {
                    "contract_id": d.contract_id,
                    "changed": d.changed,
                    "before": [_binding_json(b) for b in d.before],
                    "after": [_binding_json(b) for b in d.after],
                    **({"error": d.error} if d.error else {}),
                    **({"warnings": list(d.warnings)} if d.warnings else {}),
                }
                for d in self.per_contract
            ],
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["contract_id", "changed", "before", "after"])
        for d in self.per_contract:
            writer.writerow(
                [
                    d.contract_id,
                    str(d.changed).lower(),
                    _bindings_text(d.before),
                    _bindings_text(d.after),
                ]
            )
        return buf.getvalue()


def _binding_json(b: Binding) -> dict:
    out = {}
    for k, v in sorted(b.items()):
        out[k] = v.value if isinstance(v, IntLiteral) else str(v)
    return out


def _bindings_text(bindings: tuple[Binding, ...]) -> str:
    parts = []
    for b in bindings:
        parts.append("{" + ",".join(f"{k}={v}" for k, v in sorted(b.items(), key=lambda kv: kv[0])) + "}")
    return ";".join(parts)


def load_portfolio(directory: str | Path) -> Portfolio:
    """Load every subdirectory as a contract; failures are collected per
    contract, never fatal. A shared.cdl at the root is prepended to each."""
    directory = Path(directory)
    portfolio = Portfolio()
    shared = ""
    shared_path = directory / "shared.cdl"
    if shared_path.exists():
        shared = shared_path.read_text()
    for sub in sorted(p for p in directory.iterdir() if p.is_dir()):
        files: dict[str, str] = {}
        for name in ("contract.cdl", "facts.cdl", "config.json", "faq.json", "clauses.json"):
            fp = sub / name
            if fp.exists():
                files[name] = fp.read_text()
        if shared and "contract.cdl" in files:
            files["contract.cdl"] = shared + "\n" + files["contract.cdl"]
        from .bundle import load_bundle_from_files

        bundle, diags = load_bundle_from_files(files, label=sub.name)
        if bundle is None:
            portfolio.failures[sub.name] = [d for d in diags if d.severity == "error"]
            continue
        if bundle.config is not None:
            sim = init_simulation(bundle.loaded, bundle.config, base_dir=sub)
            store = sim.store
        else:
            store = FactStore.from_atoms(
                [f.atom for f in bundle.loaded.program.facts], bundle.loaded.signature
            )
        portfolio.entries[sub.name] = PortfolioEntry(sub.name, bundle, store)
    return portfolio


def run_query_all(portfolio: Portfolio, goal: list[Literal]) -> dict[str, tuple[Binding, ...] | EngineError]:
    """Per-contract query results; a contract that cannot answer reports its
    own error instead of failing the batch."""
    out: dict[str, tuple[Binding, ...] | EngineError] = {}
    for cid in portfolio.ids():
        entry = portfolio.entries[cid]
        try:
            out[cid] = tuple(query(entry.bundle.loaded, entry.store, goal))
        except EngineError as exc:
            out[cid] = exc
    return out


def _eval_template_term(term: Term, env: Binding) -> Term:
    if isinstance(term, Variable):
        value = env.get(term.name)
        if value is None:
            raise ValueError(f"template variable {term.name} not bound by the retract pattern")
        return value
    if isinstance(term, Compound):
        return IntLiteral(_eval_int_expr(term, env))
    return term


def _eval_int_expr(term: Term, env: Binding) -> int:
    if isinstance(term, IntLiteral):
        return term.value
    if isinstance(term, Variable):
        value = env.get(term.name)
        if not isinstance(value, IntLiteral):
            raise ValueError(f"{term.name} is not bound to an integer")
        return value.value
    if isinstance(term, Compound):
        name, arity = term.functor, len(term.args)
        if (name, arity) == ("plus", 2):
            return _eval_int_expr(term.args[0], env) + _eval_int_expr(term.args[1], env)
        if (name, arity) == ("minus", 2):
            return _eval_int_expr(term.args[0], env) - _eval_int_expr(term.args[1], env)
        if (name, arity) == ("times", 2):
            return _eval_int_expr(term.args[0], env) * _eval_int_expr(term.args[1], env)
        if (name, arity) == ("bp_scale", 2):
            base = _eval_int_expr(term.args[0], env)
            bps = _eval_int_expr(term.args[1], env)
            return (base * bps) // 10000
    raise ValueError(f"unsupported scenario expression {term}")


def apply_overrides(
    entry: PortfolioEntry, scenario: Scenario, strict: bool = False
) -> tuple[FactStore, list[str]]:
    """A new store with the scenario applied; the entry's store is untouched."""
    store = entry.store
    warnings: list[str] = []
    for override in scenario.overrides:
        if override.filter is not None and not store.match_atoms(override.filter):
            continue
        matches = store.match_atoms(override.retract)
        if not matches:
            message = f"retract pattern {override.retract} matched nothing"
            if strict:
                raise OverrideMismatch(f"{entry.contract_id}: {message}")
            warnings.append(message)
            continue
        adds = []
        for m in matches:
            env = unify_atom(override.retract, m) or {}
            adds.append(
                Atom(
                    override.assert_template.predicate,
                    tuple(_eval_template_term(t, env) for t in override.assert_template.args),
                )
            )
        store = store.apply_batch(adds=adds, retracts=matches)
    return store, warnings


def whatif(
    portfolio: Portfolio, scenario: Scenario, goal: list[Literal], strict: bool = False
) -> DiffReport:
    """Before/after query results per contract under the scenario's overrides.

    Stored portfolio state is never mutated: overrides apply to a derived
    store value that is dropped after the after-query.
    """
    diffs: list[ContractDiff] = []
    goal_text = " & ".join(str(l) for l in goal)
    for cid in portfolio.ids():
        entry = portfolio.entries[cid]
        version_before = entry.store.version
        try:
            before = tuple(query(entry.bundle.loaded, entry.store, goal))
            overlay, warnings = apply_overrides(entry, scenario, strict)
            after = tuple(query(entry.bundle.loaded, overlay, goal))
            changed = _normalize(before) != _normalize(after)
            diffs.append(ContractDiff(cid, before, after, changed, warnings=tuple(warnings)))
        except EngineError as exc:
            diffs.append(ContractDiff(cid, (), (), False, error=f"{exc.code}: {exc}"))
        assert entry.store.version == version_before
    affected = sum(1 for d in diffs if d.changed)
    return DiffReport(scenario.name, goal_text, tuple(diffs), affected, len(diffs))


def _normalize(bindings: tuple[Binding, ...]) -> frozenset:
    return frozenset(tuple(sorted((k, str(v)) for k, v in b.items())) for b in bindings)
