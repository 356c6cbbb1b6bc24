"""Abstract syntax of the Contract Definition Language.

A program is an ordered list of statements: ground facts, view rules
(``head :- body``) and dynamic rules (``condition ==> effects``), plus
directives declaring events, externals, rule names and clause tags.
All values here are immutable and freely shareable.
"""
from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, replace

SYMBOL_RE = re.compile(r"[a-z][a-zA-Z0-9_]*$")
VARIABLE_RE = re.compile(r"[A-Z_][a-zA-Z0-9_]*$")


@dataclass(frozen=True, slots=True)
class Constant:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, slots=True)
class Variable:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, slots=True)
class IntLiteral:
    value: int

    def __str__(self) -> str:
        return str(self.value)


@dataclass(frozen=True, slots=True)
class StringLiteral:
    value: str

    def __str__(self) -> str:
        escaped = self.value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'


@dataclass(frozen=True, slots=True)
class Compound:
    """Function term such as ``minus(B,C)``; legal only inside builtin args."""

    functor: str
    args: tuple["Term", ...]

    def __str__(self) -> str:
        return f"{self.functor}({','.join(str(a) for a in self.args)})"


Term = Constant | Variable | IntLiteral | StringLiteral | Compound

#: (name, arity) pair identifying a predicate within a program.
PredId = tuple[str, int]


@dataclass(frozen=True, slots=True)
class Atom:
    predicate: str
    args: tuple[Term, ...] = ()

    @property
    def pred_id(self) -> PredId:
        return (self.predicate, len(self.args))

    def __str__(self) -> str:
        if not self.args:
            return self.predicate
        return f"{self.predicate}({','.join(str(a) for a in self.args)})"


@dataclass(frozen=True, slots=True)
class Literal:
    atom: Atom
    negated: bool = False
    builtin: bool = False

    def __str__(self) -> str:
        return ("~" if self.negated else "") + str(self.atom)


@dataclass(frozen=True, slots=True)
class SourceSpan:
    file: str
    start_line: int
    start_col: int
    end_line: int
    end_col: int

    def __str__(self) -> str:
        return f"{self.file}:{self.start_line}:{self.start_col}"


DUMMY_SPAN = SourceSpan("<builtin>", 1, 1, 1, 1)


@dataclass(frozen=True)
class Fact:
    atom: Atom
    span: SourceSpan = DUMMY_SPAN
    clause_id: str | None = None


@dataclass(frozen=True)
class ViewRule:
    head: Atom
    body: tuple[Literal, ...]
    span: SourceSpan = DUMMY_SPAN
    clause_id: str | None = None

    def __str__(self) -> str:
        return f"{self.head} :- {' & '.join(str(l) for l in self.body)}"


@dataclass(frozen=True)
class Effect:
    atom: Atom
    retract: bool = False

    def __str__(self) -> str:
        return ("~" if self.retract else "") + str(self.atom)


@dataclass(frozen=True)
class DynamicRule:
    condition: tuple[Literal, ...]
    effects: tuple[Effect, ...]
    span: SourceSpan = DUMMY_SPAN
    clause_id: str | None = None
    rule_id: str = ""

    def __str__(self) -> str:
        cond = " & ".join(str(l) for l in self.condition)
        eff = " & ".join(str(e) for e in self.effects)
        return f"{cond} ==> {eff}"


@dataclass(frozen=True)
class ClauseEntry:
    clause_id: str
    text: str
    source_lines: tuple[int, int] = (0, 0)


@dataclass(frozen=True)
class ClauseMap:
    entries: tuple[ClauseEntry, ...] = ()

    def __post_init__(self) -> None:
        ids = [e.clause_id for e in self.entries]
        if len(ids) != len(set(ids)):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise ValueError(f"duplicate clause ids: {dupes}")

    def __contains__(self, clause_id: str) -> bool:
        return any(e.clause_id == clause_id for e in self.entries)

    def get(self, clause_id: str) -> ClauseEntry | None:
        for e in self.entries:
            if e.clause_id == clause_id:
                return e
        return None


Statement = Fact | ViewRule | DynamicRule


@dataclass(frozen=True)
class Program:
    """A parsed CDL contract: ordered statements plus declarations."""

    statements: tuple[Statement, ...] = ()
    declared_externals: frozenset[PredId] = frozenset()
    declared_events: frozenset[PredId] = frozenset()
    clause_map: ClauseMap | None = None
    label: str = "<program>"

    @property
    def facts(self) -> tuple[Fact, ...]:
        return tuple(s for s in self.statements if isinstance(s, Fact))

    @property
    def views(self) -> tuple[ViewRule, ...]:
        return tuple(s for s in self.statements if isinstance(s, ViewRule))

    @property
    def dynamics(self) -> tuple[DynamicRule, ...]:
        return tuple(s for s in self.statements if isinstance(s, DynamicRule))

    def with_dynamics_order(self, order: list[int]) -> "Program":
        """Reorder dynamic rules (used by determinism tests); other statements keep their slots."""
        dyn = self.dynamics
        assert sorted(order) == list(range(len(dyn)))
        it = iter(order)
        new_statements = tuple(
            dyn[next(it)] if isinstance(s, DynamicRule) else s for s in self.statements
        )
        return replace(self, statements=new_statements)


def is_ground_term(term: Term) -> bool:
    if isinstance(term, Variable):
        return False
    if isinstance(term, Compound):
        return all(is_ground_term(a) for a in term.args)
    return True


def is_ground(atom: Atom) -> bool:
    return all(is_ground_term(a) for a in atom.args)


def term_variables(term: Term) -> set[str]:
    if isinstance(term, Variable):
        return {term.name}
    if isinstance(term, Compound):
        out: set[str] = set()
        for a in term.args:
            out |= term_variables(a)
        return out
    return set()


def atom_variables(atom: Atom) -> set[str]:
    out: set[str] = set()
    for a in atom.args:
        out |= term_variables(a)
    return out


def rule_content_id(rule: DynamicRule) -> str:
    """Stable identifier for an unnamed dynamic rule, derived from its text.

    Invariant under declaration reordering so canonical traces stay comparable.
    """
    digest = hashlib.sha1(str(rule).encode()).hexdigest()[:8]
    return f"dyn_{digest}"


def same_structure(a: Program, b: Program) -> bool:
    """Structural equality ignoring spans (pretty-print round trips preserve this)."""

    def strip(s: Statement) -> object:
        if isinstance(s, Fact):
            return ("f", s.atom, s.clause_id)
        if isinstance(s, ViewRule):
            return ("v", s.head, s.body, s.clause_id)
        return ("d", s.condition, s.effects, s.clause_id, s.rule_id)

    return (
        tuple(strip(s) for s in a.statements) == tuple(strip(s) for s in b.statements)
        and a.declared_externals == b.declared_externals
        and a.declared_events == b.declared_events
    )


def pretty_print(program: Program) -> str:
    """Render a program as CDL source that parses back to the same structure."""
    lines: list[str] = []
    for pred, arity in sorted(program.declared_externals):
        lines.append(f"#external {pred}/{arity}")
    for pred, arity in sorted(program.declared_events):
        lines.append(f"#event {pred}/{arity}")
    for stmt in program.statements:
        if stmt.clause_id is not None:
            lines.append(f"#clause {stmt.clause_id}")
        if isinstance(stmt, Fact):
            lines.append(str(stmt.atom))
        elif isinstance(stmt, ViewRule):
            lines.append(str(stmt))
        else:
            if stmt.rule_id and not stmt.rule_id.startswith("dyn_"):
                lines.append(f"#rule {stmt.rule_id}")
            lines.append(str(stmt))
    return "\n".join(lines) + "\n"


class RoleConflict(Exception):
    def __init__(self, pred_id: PredId, roles: tuple[str, str]):
        self.pred_id = pred_id
        self.roles = roles
        super().__init__(f"{pred_id[0]}/{pred_id[1]} is both {roles[0]} and {roles[1]}")


def predicate_signature(program: Program) -> dict[PredId, str]:
    """Map every predicate to its role: ``base``, ``view`` or ``external``.

    View heads are derived-only; facts, dynamic effects and event declarations
    make a predicate base. A predicate may not hold two roles at once.
    """
    views: set[PredId] = {v.head.pred_id for v in program.views}
    base: set[PredId] = set()
    for f in program.facts:
        base.add(f.atom.pred_id)
    for d in program.dynamics:
        for e in d.effects:
            base.add(e.atom.pred_id)
    base |= program.declared_events

    sig: dict[PredId, str] = {}
    for p in views:
        if p in base:
            raise RoleConflict(p, ("view", "base"))
        if p in program.declared_externals:
            raise RoleConflict(p, ("view", "external"))
        sig[p] = "view"
    for p in program.declared_externals:
        if p in base:
            raise RoleConflict(p, ("external", "base"))
        sig[p] = "external"
    for p in base:
        sig[p] = "base"

    # Predicates only ever read in bodies default to base with empty extension.
    for rule_body in [v.body for v in program.views] + [d.condition for d in program.dynamics]:
        for lit in rule_body:
            if not lit.builtin and lit.atom.pred_id not in sig:
                sig[lit.atom.pred_id] = "base"
    return sig
