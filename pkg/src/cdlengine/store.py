"""Ground-fact storage for one contract instance.

A FactStore is an immutable value; mutations return a new store with the
version bumped by one per batch. Indexing is by predicate identity and by
first argument. External predicates are answered by pluggable read-only
providers instead of stored facts.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable

from .errors import NonGround, NotBasePredicate, StaleSnapshot, UnknownPredicate
from .terms import (
    SYMBOL_RE,
    Atom,
    Constant,
    IntLiteral,
    PredId,
    StringLiteral,
    Term,
    Variable,
    is_ground,
)

Binding = dict[str, Term]


def unify_atom(pattern: Atom, fact: Atom, env: Binding | None = None) -> Binding | None:
    """Match a (possibly variable-bearing) pattern against a ground fact."""
    if pattern.pred_id != fact.pred_id:
        return None
    out: Binding = dict(env) if env else {}
    for p, f in zip(pattern.args, fact.args):
        if isinstance(p, Variable):
            seen = out.get(p.name)
            if seen is None:
                out[p.name] = f
            elif seen != f:
                return None
        elif p != f:
            return None
    return out


def substitute(atom: Atom, env: Binding) -> Atom:
    return Atom(atom.predicate, tuple(_subst_term(t, env) for t in atom.args))


def _subst_term(term: Term, env: Binding) -> Term:
    if isinstance(term, Variable):
        return env.get(term.name, term)
    from .terms import Compound

    if isinstance(term, Compound):
        return Compound(term.functor, tuple(_subst_term(a, env) for a in term.args))
    return term


@dataclass(frozen=True)
class ExternalProvider:
    """Answers lookups for one external predicate (read-only).

    ``stable`` means repeated lookups always agree (file fixtures); mark a
    live provider unstable to keep evaluation results from being cached
    across queries.
    """

    pred_id: PredId
    lookup: Callable[[Atom], list[Atom]]
    descriptor: str = "external"
    stable: bool = True


def file_provider(path: str | Path, pred_id: PredId, descriptor: str | None = None) -> ExternalProvider:
    """Provider backed by a JSON file ``{predicate: [[args...], ...]}``.

    JSON numbers become integers; strings become constants when they look
    like symbols, string literals otherwise.
    """
    path = Path(path)
    data = json.loads(path.read_text())
    rows = data.get(pred_id[0], [])
    facts: list[Atom] = []
    for row in rows:
        if len(row) != pred_id[1]:
            continue
        facts.append(Atom(pred_id[0], tuple(_term_from_json(v) for v in row)))

    def lookup(pattern: Atom) -> list[Atom]:
        return [f for f in facts if unify_atom(pattern, f) is not None]

    return ExternalProvider(pred_id, lookup, descriptor or path.name)


def _term_from_json(value: object) -> Term:
    if isinstance(value, bool):
        raise ValueError("booleans are not CDL terms")
    if isinstance(value, int):
        return IntLiteral(value)
    if isinstance(value, str):
        if SYMBOL_RE.match(value):
            return Constant(value)
        return StringLiteral(value)
    raise ValueError(f"unsupported external value {value!r}")


class _Family:
    """Shared bookkeeping for all stores descending from one initial store."""

    __slots__ = ("max_version",)

    def __init__(self) -> None:
        self.max_version = 0


@dataclass(frozen=True)
class Snapshot:
    store: "FactStore"

    @property
    def version(self) -> int:
        return self.store.version


class FactStore:
    """Immutable set of ground base facts with predicate/first-arg indexes."""

    __slots__ = (
        "_facts",
        "_by_first",
        "version",
        "roles",
        "externals",
        "_family",
        "model_cache",
    )

    def __init__(
        self,
        facts: dict[PredId, dict[Atom, None]],
        roles: dict[PredId, str],
        externals: dict[PredId, ExternalProvider],
        version: int,
        family: _Family,
    ):
        self._facts = facts
        self.roles = roles
        self.externals = externals
        self.version = version
        self._family = family
        # evaluator results keyed on program identity; sound because store
        # values never change (see evaluator.stratified_model)
        self.model_cache: dict = {}
        by_first: dict[tuple[PredId, Term], list[Atom]] = {}
        for pred, atoms in facts.items():
            for atom in atoms:
                if atom.args:
                    by_first.setdefault((pred, atom.args[0]), []).append(atom)
        self._by_first = by_first

    # -- construction

    @staticmethod
    def from_atoms(
        atoms: Iterable[Atom],
        roles: dict[PredId, str],
        externals: Iterable[ExternalProvider] = (),
    ) -> "FactStore":
        facts: dict[PredId, dict[Atom, None]] = {}
        ext = {p.pred_id: p for p in externals}
        store = FactStore(facts, dict(roles), ext, 0, _Family())
        for atom in atoms:
            store._check_assertable(atom)
            facts.setdefault(atom.pred_id, {})[atom] = None
        return FactStore(facts, dict(roles), ext, 0, store._family)

    # -- queries

    def atoms(self) -> list[Atom]:
        return [a for group in self._facts.values() for a in group]

    def count(self) -> int:
        return sum(len(g) for g in self._facts.values())

    def has(self, atom: Atom) -> bool:
        return atom in self._facts.get(atom.pred_id, ())

    def facts_for(self, pred_id: PredId) -> list[Atom]:
        return list(self._facts.get(pred_id, ()))

    def role_of(self, pred_id: PredId) -> str:
        role = self.roles.get(pred_id)
        if role is None:
            raise UnknownPredicate(f"predicate {pred_id[0]}/{pred_id[1]} was never declared")
        return role

    def lookup(self, pattern: Atom, extern_cache: dict | None = None) -> list[Binding]:
        """Bindings making the pattern match stored or provider-backed facts."""
        role = self.role_of(pattern.pred_id)
        if role == "view":
            raise NotBasePredicate(f"{pattern.predicate} is a view; query it through the evaluator")
        if role == "external":
            facts = self._external_facts(pattern, extern_cache)
        else:
            facts = self._candidates(pattern)
        out: list[Binding] = []
        for f in facts:
            env = unify_atom(pattern, f)
            if env is not None:
                out.append(env)
        return out

    def match_atoms(self, pattern: Atom, extern_cache: dict | None = None) -> list[Atom]:
        role = self.role_of(pattern.pred_id)
        if role == "external":
            facts = self._external_facts(pattern, extern_cache)
        else:
            facts = self._candidates(pattern)
        return [f for f in facts if unify_atom(pattern, f) is not None]

    def _candidates(self, pattern: Atom) -> list[Atom]:
        if pattern.args and not isinstance(pattern.args[0], Variable):
            return self._by_first.get((pattern.pred_id, pattern.args[0]), [])
        return self.facts_for(pattern.pred_id)

    def candidates_for(self, pred_id: PredId, first: Term | None) -> list[Atom]:
        """Raw candidate facts by predicate and optional bound first arg;
        callers unify themselves."""
        if first is not None:
            return self._by_first.get((pred_id, first), [])
        group = self._facts.get(pred_id)
        return list(group) if group else []

    def _external_facts(self, pattern: Atom, extern_cache: dict | None) -> list[Atom]:
        provider = self.externals.get(pattern.pred_id)
        if provider is None:
            return []
        if extern_cache is None:
            return provider.lookup(pattern)
        key = (pattern.pred_id, pattern.args)
        if key not in extern_cache:
            extern_cache[key] = provider.lookup(pattern)
        return extern_cache[key]

    def provider_descriptor(self, pred_id: PredId) -> str | None:
        provider = self.externals.get(pred_id)
        return provider.descriptor if provider else None

    # -- mutation (returns new store values)

    def _check_assertable(self, atom: Atom) -> None:
        if not is_ground(atom):
            raise NonGround(f"{atom} contains variables")
        role = self.role_of(atom.pred_id)
        if role != "base":
            raise NotBasePredicate(f"{atom.predicate} has role {role}, only base facts can be stored")

    def assert_fact(self, atom: Atom) -> "FactStore":
        return self.apply_batch(adds=[atom], retracts=[])

    def retract_fact(self, atom: Atom) -> "FactStore":
        return self.apply_batch(adds=[], retracts=[atom])

    def apply_batch(self, adds: Iterable[Atom], retracts: Iterable[Atom]) -> "FactStore":
        """Retract-then-add as one version bump (idempotent on fact sets)."""
        adds = list(adds)
        retracts = list(retracts)
        for atom in adds + retracts:
            self._check_assertable(atom)
        facts = {pred: dict(group) for pred, group in self._facts.items()}
        for atom in retracts:
            facts.get(atom.pred_id, {}).pop(atom, None)
        for atom in adds:
            facts.setdefault(atom.pred_id, {})[atom] = None
        version = self.version + 1
        self._family.max_version = max(self._family.max_version, version)
        return FactStore(facts, self.roles, self.externals, version, self._family)

    # -- snapshots

    def snapshot(self) -> Snapshot:
        return Snapshot(self)

    def restore(self, snapshot: Snapshot) -> "FactStore":
        if snapshot.store._family is not self._family or snapshot.version > self._family.max_version:
            raise StaleSnapshot(
                f"snapshot version {snapshot.version} does not belong to this store family"
            )
        return snapshot.store

    def fact_set(self) -> frozenset[Atom]:
        return frozenset(self.atoms())
