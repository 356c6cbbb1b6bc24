"""Question registry with rendered answers, provenance and clause coverage.

Questions live in a sidecar JSON file next to the contract. Answers come
from the evaluator with proofs; rendered lines map internal symbols through
``has_pretty_name`` facts when available. Each answer carries the clause
ids harvested from its derivations, which a UI can highlight in the
contract text.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import NoClauseMap, UnknownFaq
from .evaluator import Derivation, FactLeaf, ProofAnswer, RuleNode, derive_with_proof
from .parser import Diagnostic, LoadedProgram, parse_goal
from .store import Binding, FactStore
from .terms import (
    Atom,
    Constant,
    Fact,
    IntLiteral,
    Literal,
    PredId,
    Program,
    StringLiteral,
    Term,
    ViewRule,
)


@dataclass(frozen=True)
class FaqEntry:
    id: str
    question: str
    goal: tuple[Literal, ...]
    goal_text: str
    template: str
    empty_text: str


@dataclass(frozen=True)
class Answer:
    faq_id: str
    question: str
    lines: tuple[str, ...]
    bindings: tuple[Binding, ...]
    derivations: tuple[Derivation, ...]
    clause_links: tuple[str, ...]
    empty: bool


def parse_faq_file(text: str, label: str = "faq.json") -> tuple[list[FaqEntry], list[Diagnostic]]:
    """Load FAQ entries; entries with unparsable or unsafe goals are rejected
    with a diagnostic and the rest are kept."""
    entries: list[FaqEntry] = []
    diagnostics: list[Diagnostic] = []
    for item in json.loads(text):
        goal, diags = parse_goal(item["goal"], f"{label}:{item['id']}")
        if goal is None:
            diagnostics.extend(diags)
            continue
        diagnostics.extend(d for d in diags if d.severity == "warning")
        entries.append(
            FaqEntry(
                id=item["id"],
                question=item["question"],
                goal=tuple(goal),
                goal_text=item["goal"],
                template=item.get("template", ""),
                empty_text=item.get("empty_text", "No answer."),
            )
        )
    return entries, diagnostics


def pretty_names(store: FactStore) -> dict[str, str]:
    names: dict[str, str] = {}
    for atom in store.facts_for(("has_pretty_name", 2)):
        subject, label = atom.args
        if isinstance(subject, Constant) and isinstance(label, StringLiteral):
            names[subject.name] = label.value
    return names


def pretty_name_collisions(store: FactStore) -> list[tuple[str, str, str]]:
    """(name, symbol_a, symbol_b) triples where two symbols share a display name."""
    seen: dict[str, str] = {}
    collisions: list[tuple[str, str, str]] = []
    for atom in store.facts_for(("has_pretty_name", 2)):
        subject, label = atom.args
        if isinstance(subject, Constant) and isinstance(label, StringLiteral):
            prev = seen.get(label.value)
            if prev is not None and prev != subject.name:
                collisions.append((label.value, prev, subject.name))
            seen.setdefault(label.value, subject.name)
    return collisions


def render_term(term: Term, names: dict[str, str]) -> str:
    if isinstance(term, Constant):
        return names.get(term.name, term.name)
    if isinstance(term, IntLiteral):
        return str(term.value)
    if isinstance(term, StringLiteral):
        return term.value
    return str(term)


def _render_line(template: str, binding: Binding, names: dict[str, str]) -> str:
    line = template
    for var, value in binding.items():
        line = line.replace("{" + var + "}", render_term(value, names))
    return line


def harvest_clause_links(proofs: tuple[Derivation, ...], program: Program) -> list[str]:
    """Clause ids of every rule and tagged fact appearing in the proofs."""
    fact_tags: dict[Atom, str] = {
        f.atom: f.clause_id for f in program.facts if f.clause_id is not None
    }
    links: dict[str, None] = {}

    def walk(node: Derivation) -> None:
        if isinstance(node, RuleNode):
            if node.rule.clause_id is not None:
                links.setdefault(node.rule.clause_id, None)
            for child in node.children:
                walk(child)
        elif isinstance(node, FactLeaf):
            tag = fact_tags.get(node.atom)
            if tag is not None:
                links.setdefault(tag, None)

    for p in proofs:
        walk(p)
    return list(links)


def answer(loaded: LoadedProgram, entries: list[FaqEntry], faq_id: str, store: FactStore) -> Answer:
    entry = next((e for e in entries if e.id == faq_id), None)
    if entry is None:
        raise UnknownFaq(f"no FAQ entry {faq_id!r}")
    results: list[ProofAnswer] = derive_with_proof(loaded, store, list(entry.goal))
    names = pretty_names(store)
    if not results:
        return Answer(entry.id, entry.question, (entry.empty_text,), (), (), (), empty=True)
    lines: list[str] = []
    bindings: list[Binding] = []
    derivations: list[Derivation] = []
    for res in results:
        lines.append(_render_line(entry.template, res.binding, names))
        bindings.append(res.binding)
        derivations.extend(res.proofs)
    links = harvest_clause_links(tuple(derivations), loaded.program)
    return Answer(
        entry.id,
        entry.question,
        tuple(lines),
        tuple(bindings),
        tuple(derivations),
        tuple(links),
        empty=False,
    )


# ----------------------------------------------------------------------------
# Coverage

def reachable_clauses(loaded: LoadedProgram, goal: tuple[Literal, ...]) -> set[str]:
    """Clause ids statically reachable from a goal.

    Reachability walks the dependency graph: a view rule contributes its
    clause and its body predicates once its head is reached; a dynamic rule
    contributes its clause and its condition predicates once any predicate
    it adds or retracts is reached; tagged facts contribute their clause
    once their predicate is reached.
    """
    program = loaded.program
    reached: set[PredId] = set()
    frontier: list[PredId] = [lit.atom.pred_id for lit in goal if not lit.builtin]
    clauses: set[str] = set()
    view_rules: dict[PredId, list[ViewRule]] = {}
    for v in program.views:
        view_rules.setdefault(v.head.pred_id, []).append(v)
    fact_preds: dict[PredId, list[Fact]] = {}
    for f in program.facts:
        fact_preds.setdefault(f.atom.pred_id, []).append(f)

    while frontier:
        pred = frontier.pop()
        if pred in reached:
            continue
        reached.add(pred)
        for rule in view_rules.get(pred, []):
            if rule.clause_id:
                clauses.add(rule.clause_id)
            for lit in rule.body:
                if not lit.builtin and lit.atom.pred_id not in reached:
                    frontier.append(lit.atom.pred_id)
        for f in fact_preds.get(pred, []):
            if f.clause_id:
                clauses.add(f.clause_id)
        for dyn in program.dynamics:
            if any(e.atom.pred_id == pred for e in dyn.effects):
                if dyn.clause_id:
                    clauses.add(dyn.clause_id)
                for lit in dyn.condition:
                    if not lit.builtin and lit.atom.pred_id not in reached:
                        frontier.append(lit.atom.pred_id)
    return clauses


def coverage_report(loaded: LoadedProgram, entries: list[FaqEntry]) -> list[str]:
    """Clause ids not reachable from any FAQ goal (empty means full coverage)."""
    if loaded.program.clause_map is None:
        raise NoClauseMap("contract has no clause map")
    covered: set[str] = set()
    for entry in entries:
        covered |= reachable_clauses(loaded, entry.goal)
    return [e.clause_id for e in loaded.program.clause_map.entries if e.clause_id not in covered]
