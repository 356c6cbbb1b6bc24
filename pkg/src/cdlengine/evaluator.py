"""Query answering under stratified negation-as-failure.

The model is computed bottom-up, stratum by stratum, semi-naively: rules
that do not reference their own stratum run once, recursive rules iterate
on the delta of the previous round. The observable contract is the perfect
model; the test suite checks it against an independent naive fixpoint.

Proof trees (`Derivation`) record, per derived fact, the first rule
instance that produced it; negation carries no subtree because failure is
certified by the completed lower strata.
"""
from __future__ import annotations

from dataclasses import dataclass

from .builtins import REGISTRY
from .errors import NonGround, ResourceLimit, UnknownPredicate
from .parser import LoadedProgram
from .store import Binding, FactStore, substitute, unify_atom
from .terms import (
    Atom,
    Literal,
    PredId,
    Term,
    Variable,
    ViewRule,
    atom_variables,
    is_ground,
    term_variables,
)

DEFAULT_DERIVED_CAP = 1_000_000


# ----------------------------------------------------------------------------
# Derivations

@dataclass(frozen=True)
class FactLeaf:
    atom: Atom
    source: str = "stored"  # "stored" or an external provider descriptor


@dataclass(frozen=True)
class BuiltinLeaf:
    atom: Atom


@dataclass(frozen=True)
class NegationLeaf:
    atom: Atom


@dataclass(frozen=True)
class RuleNode:
    head: Atom
    rule: ViewRule
    children: tuple["Derivation", ...]

    @property
    def clause_id(self) -> str | None:
        return self.rule.clause_id


Derivation = FactLeaf | BuiltinLeaf | NegationLeaf | RuleNode


@dataclass(frozen=True)
class ProofAnswer:
    """One query answer: the binding plus one derivation per goal literal."""

    binding: Binding
    proofs: tuple[Derivation, ...]


# ----------------------------------------------------------------------------
# Builtin evaluation

def _unify_term(pattern: Term, value: Term, env: Binding) -> Binding | None:
    if isinstance(pattern, Variable):
        seen = env.get(pattern.name)
        if seen is None:
            out = dict(env)
            out[pattern.name] = value
            return out
        return env if seen == value else None
    return env if pattern == value else None


def evaluate_builtin(atom: Atom) -> list[Binding]:
    """Run one builtin with bound inputs; bindings cover its output variables."""
    spec = REGISTRY.get(atom.pred_id)
    if spec is None:
        raise UnknownPredicate(f"{atom.predicate}/{len(atom.args)} is not a builtin")
    for mode, arg in zip(spec.modes, atom.args):
        if mode == "i" and term_variables(arg):
            raise NonGround(f"input argument {arg} of {spec.name} is unbound")
    results = spec.run(atom.args, atom)
    out: list[Binding] = []
    for tup in results:
        env: Binding | None = {}
        for pattern, value in zip(atom.args, tup):
            env = _unify_term(pattern, value, env)
            if env is None:
                break
        if env is not None:
            out.append(env)
    return out


# ----------------------------------------------------------------------------
# Model

class Model:
    """Derived view facts plus the support needed to rebuild derivations."""

    def __init__(self, covered: frozenset[PredId] | None = None) -> None:
        self.derived: dict[PredId, dict[Atom, None]] = {}
        self.support: dict[Atom, tuple[ViewRule, Binding]] = {}
        self.size = 0
        # view predicates this model was computed for (None: all of them);
        # a model restricted to a dependency-closed subset agrees with the
        # full perfect model on every covered predicate
        self.covered = covered
        # external lookups memoized while the model was computed; reused by
        # the goal pass so one query sees one consistent external world
        self.extern_cache: dict = {}

    def add(self, atom: Atom, rule: ViewRule, env: Binding) -> bool:
        group = self.derived.setdefault(atom.pred_id, {})
        if atom in group:
            return False
        group[atom] = None
        self.support[atom] = (rule, env)
        self.size += 1
        return True

    def has(self, atom: Atom) -> bool:
        return atom in self.derived.get(atom.pred_id, ())

    def match(self, pattern: Atom) -> list[Atom]:
        group = self.derived.get(pattern.pred_id)
        if not group:
            return []
        return [a for a in group if unify_atom(pattern, a) is not None]

    def candidates_for(self, pred_id: PredId, first) -> list[Atom]:
        group = self.derived.get(pred_id)
        if not group:
            return []
        if first is None:
            return list(group)
        return [a for a in group if a.args and a.args[0] == first]

    def atoms(self) -> list[Atom]:
        return [a for group in self.derived.values() for a in group]


class _Context:
    """Per-computation state: one consistent external world, one fact cap."""

    def __init__(self, loaded: LoadedProgram, store: FactStore, cap: int):
        self.loaded = loaded
        self.store = store
        self.cap = cap
        self.extern_cache: dict = {}
        self.model = Model()

    def holds(self, atom: Atom) -> bool:
        role = self.loaded.signature.get(atom.pred_id)
        if role == "view":
            return self.model.has(atom)
        return bool(self.store.match_atoms(atom, self.extern_cache))

    def candidates(self, pattern: Atom) -> list[Atom]:
        role = self.loaded.signature.get(pattern.pred_id)
        if role == "view":
            return self.model.match(pattern)
        return self.store.match_atoms(pattern, self.extern_cache)

    def solve(
        self,
        body: tuple[Literal, ...],
        index: int,
        env: Binding,
        delta: tuple[int, dict[PredId, list[Atom]]] | None = None,
    ):
        """Yield bindings satisfying body[index:]; ``delta`` restricts one
        positive literal position to newly derived facts (semi-naive mode)."""
        if index == len(body):
            yield env
            return
        lit = body[index]
        if lit.builtin:
            atom = substitute(lit.atom, env)
            for extra in evaluate_builtin(atom):
                merged = dict(env)
                merged.update(extra)
                yield from self.solve(body, index + 1, merged, delta)
        elif lit.negated:
            atom = substitute(lit.atom, env)
            if not is_ground(atom):
                raise NonGround(f"negated literal ~{atom} not ground at evaluation")
            if not self.holds(atom):
                yield from self.solve(body, index + 1, env, delta)
        else:
            pred_id = lit.atom.pred_id
            first = None
            if lit.atom.args:
                first = lit.atom.args[0]
                if isinstance(first, Variable):
                    first = env.get(first.name)
            role = self.loaded.signature.get(pred_id)
            if delta is not None and delta[0] == index:
                facts = delta[1].get(pred_id, ())
            elif role == "view":
                facts = self.model.candidates_for(pred_id, first)
            elif role == "external":
                facts = self.store.match_atoms(substitute(lit.atom, env), self.extern_cache)
            else:
                facts = self.store.candidates_for(pred_id, first)
            for fact in facts:
                merged = unify_atom(lit.atom, fact, env)
                if merged is not None:
                    yield from self.solve(body, index + 1, merged, delta)


def _same_stratum_positions(rule: ViewRule, stratum: int, strata: dict[PredId, int]) -> list[int]:
    out = []
    for i, lit in enumerate(rule.body):
        if not lit.builtin and not lit.negated and strata.get(lit.atom.pred_id) == stratum:
            out.append(i)
    return out


def view_closure(loaded: LoadedProgram, needed) -> frozenset[PredId]:
    """View predicates reachable from ``needed`` through rule bodies."""
    rules_by_head: dict[PredId, list[ViewRule]] = {}
    for v in loaded.program.views:
        rules_by_head.setdefault(v.head.pred_id, []).append(v)
    seen: set[PredId] = set()
    frontier = [p for p in needed if p in rules_by_head]
    while frontier:
        pred = frontier.pop()
        if pred in seen:
            continue
        seen.add(pred)
        for rule in rules_by_head[pred]:
            for lit in rule.body:
                if not lit.builtin and lit.atom.pred_id in rules_by_head:
                    if lit.atom.pred_id not in seen:
                        frontier.append(lit.atom.pred_id)
    return frozenset(seen)


def _cache_usable(store: FactStore) -> bool:
    return all(p.stable for p in store.externals.values())


def stratified_model(
    loaded: LoadedProgram,
    store: FactStore,
    max_derived: int = DEFAULT_DERIVED_CAP,
    only=None,
) -> Model:
    """Derivable view facts of the program over the store.

    ``only`` restricts computation to the dependency closure of the given
    predicates; stratified programs are modular, so the restricted model
    agrees with the full one on every covered predicate. Results are cached
    on the store (immutable) unless an unstable external provider is
    attached.
    """
    covered = (
        view_closure(loaded, only)
        if only is not None
        else frozenset(v.head.pred_id for v in loaded.program.views)
    )
    cacheable = _cache_usable(store)
    if cacheable:
        for prog, cached in store.model_cache.values():
            if prog is loaded and cached.size <= max_derived and covered <= cached.covered:
                return cached

    ctx = _Context(loaded, store, max_derived)
    ctx.model = Model(covered)
    strata = loaded.strata.strata
    views = [v for v in loaded.program.views if v.head.pred_id in covered]
    strata_present = sorted({strata[v.head.pred_id] for v in views})
    for stratum in strata_present:
        rules = [v for v in views if strata[v.head.pred_id] == stratum]
        recursive = [r for r in rules if _same_stratum_positions(r, stratum, strata)]
        once = [r for r in rules if not _same_stratum_positions(r, stratum, strata)]

        delta_facts: dict[PredId, list[Atom]] = {}

        def emit(head: Atom, rule: ViewRule, env: Binding) -> None:
            if ctx.model.add(head, rule, env):
                delta_facts.setdefault(head.pred_id, []).append(head)
                if ctx.model.size > max_derived:
                    raise ResourceLimit(f"derived fact count exceeded {max_derived}")

        for rule in once:
            for env in ctx.solve(rule.body, 0, {}):
                emit(substitute(rule.head, env), rule, env)
        # seed round for recursive rules against everything derived so far
        for rule in recursive:
            for env in ctx.solve(rule.body, 0, {}):
                emit(substitute(rule.head, env), rule, env)
        while delta_facts:
            current_delta, delta_facts = delta_facts, {}
            for rule in recursive:
                for pos in _same_stratum_positions(rule, stratum, strata):
                    for env in ctx.solve(rule.body, 0, {}, delta=(pos, current_delta)):
                        emit(substitute(rule.head, env), rule, env)
    ctx.model.extern_cache = ctx.extern_cache
    if cacheable:
        store.model_cache[(id(loaded), covered)] = (loaded, ctx.model)
    return ctx.model


# ----------------------------------------------------------------------------
# Queries

def _check_goal_predicates(loaded: LoadedProgram, goal: list[Literal]) -> None:
    for lit in goal:
        if lit.builtin:
            continue
        if lit.atom.pred_id not in loaded.signature:
            name, arity = lit.atom.pred_id
            raise UnknownPredicate(f"predicate {name}/{arity} is not part of this contract")


def _goal_env_key(goal: list[Literal], env: Binding) -> tuple:
    names = sorted({v for lit in goal for v in atom_variables(lit.atom)})
    return tuple((n, env.get(n)) for n in names)


def query(
    loaded: LoadedProgram,
    store: FactStore,
    goal: list[Literal],
    max_derived: int = DEFAULT_DERIVED_CAP,
) -> list[Binding]:
    """Answers of the goal conjunction in the perfect model (no duplicates,
    deterministic derivation order)."""
    _check_goal_predicates(loaded, goal)
    needed = [lit.atom.pred_id for lit in goal if not lit.builtin]
    model = stratified_model(loaded, store, max_derived, only=needed)
    ctx = _Context(loaded, store, max_derived)
    ctx.model = model
    ctx.extern_cache = model.extern_cache
    names = sorted({v for lit in goal for v in atom_variables(lit.atom)})
    seen: dict[tuple, Binding] = {}
    for env in ctx.solve(tuple(goal), 0, {}):
        restricted = {n: env[n] for n in names if n in env}
        key = tuple(sorted((k, str(v)) for k, v in restricted.items()))
        if key not in seen:
            seen[key] = restricted
    return list(seen.values())


def derive_with_proof(
    loaded: LoadedProgram,
    store: FactStore,
    goal: list[Literal],
    max_derived: int = DEFAULT_DERIVED_CAP,
) -> list[ProofAnswer]:
    """Same answers as ``query`` with one replayable derivation per goal literal."""
    _check_goal_predicates(loaded, goal)
    needed = [lit.atom.pred_id for lit in goal if not lit.builtin]
    model = stratified_model(loaded, store, max_derived, only=needed)
    ctx = _Context(loaded, store, max_derived)
    ctx.model = model
    ctx.extern_cache = model.extern_cache
    memo: dict[Atom, Derivation] = {}

    def derivation_of(atom: Atom) -> Derivation:
        cached = memo.get(atom)
        if cached is not None:
            return cached
        role = loaded.signature.get(atom.pred_id)
        if role != "view":
            source = "stored"
            if role == "external":
                source = store.provider_descriptor(atom.pred_id) or "external"
            node: Derivation = FactLeaf(atom, source)
        else:
            rule, env = model.support[atom]
            children: list[Derivation] = []
            for lit in rule.body:
                sub = substitute(lit.atom, env)
                if lit.builtin:
                    children.append(BuiltinLeaf(_ground_builtin(sub)))
                elif lit.negated:
                    children.append(NegationLeaf(sub))
                else:
                    children.append(derivation_of(sub))
            node = RuleNode(atom, rule, tuple(children))
        memo[atom] = node
        return node

    def _ground_builtin(atom: Atom) -> Atom:
        extra = evaluate_builtin(atom)
        if extra:
            return substitute(atom, extra[0])
        return atom

    names = sorted({v for lit in goal for v in atom_variables(lit.atom)})
    out: list[ProofAnswer] = []
    seen: set[tuple] = set()
    for env in ctx.solve(tuple(goal), 0, {}):
        restricted = {n: env[n] for n in names if n in env}
        key = tuple(sorted((k, str(v)) for k, v in restricted.items()))
        if key in seen:
            continue
        seen.add(key)
        proofs: list[Derivation] = []
        for lit in goal:
            atom = substitute(lit.atom, env)
            if lit.builtin:
                proofs.append(BuiltinLeaf(_ground_builtin(atom)))
            elif lit.negated:
                proofs.append(NegationLeaf(atom))
            else:
                proofs.append(derivation_of(atom))
        out.append(ProofAnswer(restricted, tuple(proofs)))
    return out


def holds(loaded: LoadedProgram, store: FactStore, goal: list[Literal]) -> bool:
    return bool(query(loaded, store, goal))
