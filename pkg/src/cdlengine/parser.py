"""CDL source parsing and the static checks that gate evaluation.

Grammar (statements are newline-terminated; a trailing period is accepted
and ignored; ``%`` starts a comment; newlines inside an unfinished
construct are skipped):

    statement    := fact | view_rule | dynamic_rule
    fact         := atom
    view_rule    := atom ":-" body
    dynamic_rule := body "==>" effects
    body         := literal ("&" literal)*
    literal      := "~"? atom
    effects      := effect ("&" effect)*
    effect       := "~"? atom           (~ retracts, plain adds)
    atom         := symbol ("(" term ("," term)* ")")?
    term         := symbol | VARIABLE | INT | "-" INT | STRING
                  | symbol "(" term ("," term)* ")"      (builtin args only)

    directive    := "#clause" id | "#rule" id
                  | "#event" symbol "/" INT | "#external" symbol "/" INT

Safety (range restriction) is checked left-to-right: positive ordinary
literals and builtin output positions bind variables; head variables,
negated-literal variables and builtin input variables must already be
bound. Stratification layers view predicates so no view depends
negatively on itself through a cycle.
"""
from __future__ import annotations

from dataclasses import dataclass

from .builtins import REGISTRY, is_builtin
from .terms import (
    Atom,
    Compound,
    Constant,
    DynamicRule,
    Effect,
    Fact,
    IntLiteral,
    Literal,
    PredId,
    Program,
    RoleConflict,
    SourceSpan,
    Statement,
    StringLiteral,
    Term,
    Variable,
    ViewRule,
    atom_variables,
    is_ground,
    predicate_signature,
    rule_content_id,
    term_variables,
)


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    code: str
    message: str
    span: SourceSpan

    def render(self) -> str:
        s = self.span
        return f"{s.file}:{s.start_line}:{s.start_col}: {self.severity}[{self.code}]: {self.message}"

    def as_dict(self) -> dict:
        return {
            "severity": self.severity,
            "code": self.code,
            "message": self.message,
            "span": {
                "file": self.span.file,
                "start_line": self.span.start_line,
                "start_col": self.span.start_col,
                "end_line": self.span.end_line,
                "end_col": self.span.end_col,
            },
        }


class ParseFailure(Exception):
    """Internal control flow for statement-level resynchronization."""

    def __init__(self, diagnostic: Diagnostic):
        self.diagnostic = diagnostic


# ----------------------------------------------------------------------------
# Lexer

_PUNCT = {
    "(": "LPAREN",
    ")": "RPAREN",
    ",": "COMMA",
    "&": "AMP",
    "~": "TILDE",
    ".": "PERIOD",
    "/": "SLASH",
}


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(source: str, label: str) -> tuple[list[Token], list[Diagnostic]]:
    tokens: list[Token] = []
    diagnostics: list[Diagnostic] = []
    line, col = 1, 1
    i, n = 0, len(source)

    def span_here(length: int = 1) -> SourceSpan:
        return SourceSpan(label, line, col, line, col + length - 1)

    while i < n:
        c = source[i]
        if c == "\n":
            tokens.append(Token("NEWLINE", "\n", line, col))
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if c == "%":
            while i < n and source[i] != "\n":
                i += 1
                col += 1
            continue
        if c == "#":
            j = i + 1
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            word = source[i:j]
            tokens.append(Token("DIRECTIVE", word, line, col))
            col += j - i
            i = j
            continue
        if source.startswith(":-", i):
            tokens.append(Token("COLONDASH", ":-", line, col))
            i += 2
            col += 2
            continue
        if source.startswith("==>", i):
            tokens.append(Token("ARROW", "==>", line, col))
            i += 3
            col += 3
            continue
        if c == "-":
            tokens.append(Token("MINUS", "-", line, col))
            i += 1
            col += 1
            continue
        if c in _PUNCT:
            tokens.append(Token(_PUNCT[c], c, line, col))
            i += 1
            col += 1
            continue
        if c == '"':
            j = i + 1
            buf: list[str] = []
            closed = False
            while j < n:
                ch = source[j]
                if ch == "\\" and j + 1 < n and source[j + 1] in ('"', "\\"):
                    buf.append(source[j + 1])
                    j += 2
                    continue
                if ch == '"':
                    closed = True
                    j += 1
                    break
                if ch == "\n":
                    break
                buf.append(ch)
                j += 1
            if not closed:
                diagnostics.append(
                    Diagnostic("error", "parse_error", "unterminated string literal", span_here())
                )
                i = j
                continue
            text = "".join(buf)
            tokens.append(Token("STRING", text, line, col))
            col += j - i
            i = j
            continue
        if c.isdigit():
            j = i
            while j < n and source[j].isdigit():
                j += 1
            tokens.append(Token("INT", source[i:j], line, col))
            col += j - i
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            word = source[i:j]
            kind = "IDENT" if word[0].islower() else "VAR"
            tokens.append(Token(kind, word, line, col))
            col += j - i
            i = j
            continue
        diagnostics.append(
            Diagnostic("error", "parse_error", f"unexpected character {c!r}", span_here())
        )
        i += 1
        col += 1

    tokens.append(Token("EOF", "", line, col))
    return tokens, diagnostics


# ----------------------------------------------------------------------------
# Parser

#: token kinds after which a newline never ends the statement
_CONTINUATION = {"COLONDASH", "ARROW", "AMP", "COMMA", "LPAREN", "TILDE", "MINUS"}


class _Parser:
    def __init__(self, tokens: list[Token], label: str):
        self.tokens = tokens
        self.pos = 0
        self.label = label

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def skip_newlines(self) -> None:
        while self.peek().kind == "NEWLINE":
            self.next()

    def span_of(self, tok: Token, end: Token | None = None) -> SourceSpan:
        last = end or tok
        return SourceSpan(self.label, tok.line, tok.col, last.line, last.col + max(len(last.text), 1) - 1)

    def fail(self, message: str, tok: Token | None = None) -> ParseFailure:
        tok = tok or self.peek()
        return ParseFailure(Diagnostic("error", "parse_error", message, self.span_of(tok)))

    def expect(self, kind: str, what: str) -> Token:
        tok = self.peek()
        if tok.kind != kind:
            raise self.fail(f"expected {what}, found {tok.text!r}" if tok.text else f"expected {what}")
        return self.next()

    # -- terms and atoms

    def parse_term(self, allow_compound: bool) -> Term:
        self.skip_newlines()
        tok = self.peek()
        if tok.kind == "MINUS":
            self.next()
            num = self.expect("INT", "integer after '-'")
            return IntLiteral(-int(num.text))
        if tok.kind == "INT":
            self.next()
            return IntLiteral(int(tok.text))
        if tok.kind == "STRING":
            self.next()
            return StringLiteral(tok.text)
        if tok.kind == "VAR":
            self.next()
            return Variable(tok.text)
        if tok.kind == "IDENT":
            self.next()
            if self.peek().kind == "LPAREN":
                if not allow_compound:
                    raise self.fail(
                        f"compound term {tok.text}(...) is only allowed inside builtin arguments", tok
                    )
                args = self.parse_arglist(allow_compound=True)
                return Compound(tok.text, tuple(args))
            return Constant(tok.text)
        raise self.fail(f"expected a term, found {tok.text!r}" if tok.text else "expected a term")

    def parse_arglist(self, allow_compound: bool) -> list[Term]:
        self.expect("LPAREN", "'('")
        args = [self.parse_term(allow_compound)]
        self.skip_newlines()
        while self.peek().kind == "COMMA":
            self.next()
            args.append(self.parse_term(allow_compound))
            self.skip_newlines()
        self.expect("RPAREN", "')'")
        return args

    def parse_atom(self) -> tuple[Atom, Token, Token]:
        self.skip_newlines()
        name = self.expect("IDENT", "a predicate name")
        args: list[Term] = []
        if self.peek().kind == "LPAREN":
            # compound subterms are admitted here; non-builtin uses are
            # rejected by statement-level validation with a precise span
            args = self.parse_arglist(allow_compound=True)
        end = self.tokens[self.pos - 1]
        return Atom(name.text, tuple(args)), name, end

    def parse_literal(self) -> tuple[Literal, Token, Token]:
        self.skip_newlines()
        first = self.peek()
        negated = False
        if first.kind == "TILDE":
            self.next()
            negated = True
        atom, _, end = self.parse_atom()
        return Literal(atom, negated=negated, builtin=is_builtin(atom.pred_id)), first, end

    def parse_body(self) -> tuple[list[Literal], Token, Token]:
        lit, first, end = self.parse_literal()
        body = [lit]
        while True:
            if self.peek().kind == "AMP":
                self.next()
                lit, _, end = self.parse_literal()
                body.append(lit)
            else:
                break
        return body, first, end

    def at_statement_end(self) -> bool:
        return self.peek().kind in ("NEWLINE", "EOF", "PERIOD")

    def finish_statement(self) -> None:
        if self.peek().kind == "PERIOD":
            self.next()
        tok = self.peek()
        if tok.kind == "NEWLINE":
            self.next()
            return
        if tok.kind == "EOF":
            return
        raise self.fail(f"expected end of statement, found {tok.text!r}")


def _validate_statement(stmt: Statement, span: SourceSpan) -> list[Diagnostic]:
    """Statement-shape checks: groundness of facts, compound/builtin placement."""
    out: list[Diagnostic] = []

    def check_args(atom: Atom, where: str, allow_compound: bool) -> None:
        for arg in atom.args:
            if isinstance(arg, Compound) and not allow_compound:
                out.append(
                    Diagnostic(
                        "error",
                        "compound_term",
                        f"compound term {arg} not allowed in {where} {atom.predicate}",
                        span,
                    )
                )

    if isinstance(stmt, Fact):
        if is_builtin(stmt.atom.pred_id):
            out.append(
                Diagnostic("error", "role_conflict", f"builtin {stmt.atom.predicate} cannot be a fact", span)
            )
        if not is_ground(stmt.atom):
            out.append(
                Diagnostic("error", "non_ground_fact", f"fact {stmt.atom} contains variables", span)
            )
        check_args(stmt.atom, "fact", allow_compound=False)
        return out

    def check_body(body: tuple[Literal, ...]) -> None:
        for lit in body:
            if lit.builtin:
                spec = REGISTRY[lit.atom.pred_id]
                if lit.negated:
                    out.append(
                        Diagnostic(
                            "error",
                            "negated_builtin",
                            f"builtin {spec.name} cannot be negated (use distinct for disequality)",
                            span,
                        )
                    )
                check_args(lit.atom, "builtin", allow_compound=True)
                if lit.atom.predicate == "evaluate":
                    continue
                # only evaluate takes expression trees
                for arg in lit.atom.args:
                    if isinstance(arg, Compound):
                        out.append(
                            Diagnostic(
                                "error",
                                "compound_term",
                                f"compound term {arg} not allowed in builtin {spec.name}",
                                span,
                            )
                        )
            else:
                if lit.atom.predicate in {s.name for s in REGISTRY.values()}:
                    # builtin name at the wrong arity
                    out.append(
                        Diagnostic(
                            "error",
                            "arity_mismatch",
                            f"builtin {lit.atom.predicate} used with {len(lit.atom.args)} argument(s)",
                            span,
                        )
                    )
                check_args(lit.atom, "literal", allow_compound=False)

    if isinstance(stmt, ViewRule):
        if is_builtin(stmt.head.pred_id):
            out.append(
                Diagnostic("error", "role_conflict", f"builtin {stmt.head.predicate} cannot be a rule head", span)
            )
        check_args(stmt.head, "rule head", allow_compound=False)
        check_body(stmt.body)
        return out

    check_body(stmt.condition)
    for eff in stmt.effects:
        if is_builtin(eff.atom.pred_id):
            out.append(
                Diagnostic(
                    "error", "builtin_effect", f"effect {eff.atom} targets a builtin predicate", span
                )
            )
        check_args(eff.atom, "effect", allow_compound=False)
    return out


def parse_program(source: str, label: str = "<string>") -> tuple[Program | None, list[Diagnostic]]:
    """Parse CDL text; returns (program, diagnostics).

    The program is ``None`` when any error-severity diagnostic was produced.
    Recovery is statement-level: a malformed statement is skipped up to the
    next newline and parsing continues.
    """
    tokens, diagnostics = tokenize(source, label)
    parser = _Parser(tokens, label)
    statements: list[Statement] = []
    externals: set[PredId] = set()
    events: set[PredId] = set()
    pending_clause: str | None = None
    pending_rule_id: str | None = None
    arities: dict[str, tuple[int, SourceSpan]] = {}

    def note_arity(atom: Atom, span: SourceSpan) -> None:
        seen = arities.get(atom.predicate)
        if seen is None:
            arities[atom.predicate] = (len(atom.args), span)
        elif seen[0] != len(atom.args):
            diagnostics.append(
                Diagnostic(
                    "error",
                    "arity_mismatch",
                    f"{atom.predicate} used with {len(atom.args)} argument(s) but earlier with {seen[0]} (at line {seen[1].start_line})",
                    span,
                )
            )

    def note_statement_arities(stmt: Statement, span: SourceSpan) -> None:
        atoms: list[Atom] = []
        if isinstance(stmt, Fact):
            atoms = [stmt.atom]
        elif isinstance(stmt, ViewRule):
            atoms = [stmt.head] + [l.atom for l in stmt.body if not l.builtin]
        else:
            atoms = [l.atom for l in stmt.condition if not l.builtin] + [e.atom for e in stmt.effects]
        for a in atoms:
            note_arity(a, span)

    while parser.peek().kind != "EOF":
        if parser.peek().kind == "NEWLINE":
            parser.next()
            continue
        try:
            tok = parser.peek()
            if tok.kind == "DIRECTIVE":
                parser.next()
                if tok.text == "#clause":
                    ident = parser.expect("IDENT", "a clause id")
                    pending_clause = ident.text
                elif tok.text == "#rule":
                    ident = parser.expect("IDENT", "a rule id")
                    pending_rule_id = ident.text
                elif tok.text in ("#event", "#external"):
                    ident = parser.expect("IDENT", "a predicate name")
                    parser.expect("SLASH", "'/'")
                    arity = parser.expect("INT", "an arity")
                    target = events if tok.text == "#event" else externals
                    target.add((ident.text, int(arity.text)))
                    note_arity(Atom(ident.text, tuple(Variable(f"_A{i}") for i in range(int(arity.text)))), parser.span_of(ident))
                else:
                    raise parser.fail(f"unknown directive {tok.text}", tok)
                parser.finish_statement()
                continue

            atom_or_lit_start = parser.pos
            # A statement starting with ~ can only be a dynamic rule.
            first_lit, first_tok, _ = parser.parse_literal()
            if parser.peek().kind == "COLONDASH":
                if first_lit.negated:
                    raise parser.fail("a rule head cannot be negated", first_tok)
                parser.next()
                body, _, end = parser.parse_body()
                span = parser.span_of(first_tok, end)
                stmt: Statement = ViewRule(first_lit.atom, tuple(body), span, pending_clause)
                parser.finish_statement()
            elif parser.peek().kind in ("AMP", "ARROW"):
                parser.pos = atom_or_lit_start
                cond, _, _ = parser.parse_body()
                parser.expect("ARROW", "'==>'")
                effs, _, end = parser.parse_body()
                span = parser.span_of(first_tok, end)
                effects = tuple(Effect(l.atom, retract=l.negated) for l in effs)
                rule = DynamicRule(tuple(cond), effects, span, pending_clause, rule_id=pending_rule_id or "")
                if not rule.rule_id:
                    rule = DynamicRule(rule.condition, rule.effects, span, pending_clause, rule_content_id(rule))
                stmt = rule
                parser.finish_statement()
            else:
                if first_lit.negated:
                    raise parser.fail("a fact cannot be negated", first_tok)
                span = parser.span_of(first_tok, parser.tokens[parser.pos - 1])
                stmt = Fact(first_lit.atom, span, pending_clause)
                parser.finish_statement()

            issues = _validate_statement(stmt, span)
            diagnostics.extend(issues)
            if not any(d.severity == "error" for d in issues):
                note_statement_arities(stmt, span)
                statements.append(stmt)
            if isinstance(stmt, DynamicRule):
                pending_rule_id = None
            pending_clause = None
        except ParseFailure as pf:
            diagnostics.append(pf.diagnostic)
            pending_clause = None
            pending_rule_id = None
            while parser.peek().kind not in ("NEWLINE", "EOF"):
                parser.next()

    if any(d.severity == "error" for d in diagnostics):
        return None, diagnostics
    program = Program(
        statements=tuple(statements),
        declared_externals=frozenset(externals),
        declared_events=frozenset(events),
        label=label,
    )
    return program, diagnostics


def parse_goal(source: str, label: str = "<goal>") -> tuple[list[Literal] | None, list[Diagnostic]]:
    """Parse a conjunction of literals and safety-check it as a headless body."""
    tokens, diagnostics = tokenize(source, label)
    if any(d.severity == "error" for d in diagnostics):
        return None, diagnostics
    parser = _Parser(tokens, label)
    try:
        parser.skip_newlines()
        body, first, end = parser.parse_body()
        parser.skip_newlines()
        if parser.peek().kind == "PERIOD":
            parser.next()
            parser.skip_newlines()
        if parser.peek().kind != "EOF":
            raise parser.fail(f"unexpected input after goal: {parser.peek().text!r}")
    except ParseFailure as pf:
        return None, [pf.diagnostic]
    span = parser.span_of(first, end)
    diagnostics.extend(_validate_statement(ViewRule(Atom("goal_"), tuple(body), span), span))
    diagnostics.extend(_check_rule_safety(None, tuple(body), span))
    errors = [d for d in diagnostics if d.severity == "error"]
    if errors:
        return None, diagnostics
    return body, diagnostics


def parse_atom_pattern(source: str, label: str = "<pattern>") -> Atom:
    """Parse one atom, admitting compound argument terms.

    Used for scenario override patterns, whose assert templates may carry
    arithmetic expressions; not part of the CDL statement grammar.
    """
    tokens, diagnostics = tokenize(source, label)
    if any(d.severity == "error" for d in diagnostics):
        raise ValueError(f"bad pattern {source!r}: {diagnostics[0].message}")
    parser = _Parser(tokens, label)
    try:
        parser.skip_newlines()
        atom, _, _ = parser.parse_atom()
        parser.skip_newlines()
        if parser.peek().kind != "EOF":
            raise parser.fail(f"unexpected input after atom: {parser.peek().text!r}")
    except ParseFailure as pf:
        raise ValueError(f"bad pattern {source!r}: {pf.diagnostic.message}")
    return atom


# ----------------------------------------------------------------------------
# Safety

def _check_rule_safety(
    head_atoms: tuple[Atom, ...] | None, body: tuple[Literal, ...], span: SourceSpan
) -> list[Diagnostic]:
    """Range restriction with builtin modes, left-to-right."""
    out: list[Diagnostic] = []
    bound: set[str] = set()

    def complain(var: str, why: str) -> None:
        out.append(Diagnostic("error", "unsafe_variable", f"variable {var} {why}", span))

    for lit in body:
        if lit.builtin:
            spec = REGISTRY[lit.atom.pred_id]
            for mode, arg in zip(spec.modes, lit.atom.args):
                if mode == "i":
                    for v in sorted(term_variables(arg)):
                        if v not in bound:
                            complain(v, f"is unbound in input position of builtin {spec.name}")
                            bound.add(v)  # avoid cascading reports
            for mode, arg in zip(spec.modes, lit.atom.args):
                if mode == "o":
                    bound |= term_variables(arg)
        elif lit.negated:
            for v in sorted(atom_variables(lit.atom)):
                if v not in bound:
                    complain(v, f"is unbound in negated literal ~{lit.atom.predicate}")
                    bound.add(v)
        else:
            bound |= atom_variables(lit.atom)

    if head_atoms is not None:
        for head in head_atoms:
            for v in sorted(atom_variables(head)):
                if v not in bound:
                    complain(v, f"in {head.predicate} is not bound by the body")
    return out


def check_safety(program: Program) -> list[Diagnostic]:
    """Empty result means every rule satisfies the range restriction."""
    out: list[Diagnostic] = []
    for v in program.views:
        out.extend(_check_rule_safety((v.head,), v.body, v.span))
    for d in program.dynamics:
        out.extend(_check_rule_safety(tuple(e.atom for e in d.effects), d.condition, d.span))
    return out


def check_roles(program: Program) -> list[Diagnostic]:
    try:
        predicate_signature(program)
    except RoleConflict as rc:
        offenders = [
            s.span
            for s in program.statements
            if (isinstance(s, Fact) and s.atom.pred_id == rc.pred_id)
            or (isinstance(s, ViewRule) and s.head.pred_id == rc.pred_id)
            or (isinstance(s, DynamicRule) and any(e.atom.pred_id == rc.pred_id for e in s.effects))
        ]
        span = offenders[-1] if offenders else SourceSpan(program.label, 1, 1, 1, 1)
        return [Diagnostic("error", "role_conflict", str(rc), span)]
    return []


# ----------------------------------------------------------------------------
# Stratification

@dataclass(frozen=True)
class StratumAssignment:
    """View predicate -> stratum index; base and external predicates sit at 0."""

    strata: dict[PredId, int]

    @property
    def max_stratum(self) -> int:
        return max(self.strata.values(), default=0)


def check_stratification(program: Program) -> StratumAssignment | Diagnostic:
    """Assign strata to view predicates or report a negative cycle.

    Fixpoint on lower bounds: a head must sit at or above every positive
    view dependency and strictly above every negated one. If a bound climbs
    past the number of views, a negative cycle exists and is reported.
    """
    views = {v.head.pred_id for v in program.views}
    deps: list[tuple[PredId, PredId, bool]] = []  # (head, body view pred, negated)
    for v in program.views:
        for lit in v.body:
            if not lit.builtin and lit.atom.pred_id in views:
                deps.append((v.head.pred_id, lit.atom.pred_id, lit.negated))

    strata = {p: 1 for p in views}
    limit = len(views) + 1
    changed = True
    while changed:
        changed = False
        for head, dep, negated in deps:
            need = strata[dep] + (1 if negated else 0)
            if strata[head] < need:
                strata[head] = need
                changed = True
                if strata[head] > limit:
                    cycle = _negative_cycle(views, deps)
                    names = ", ".join(f"{p}/{a}" for p, a in cycle)
                    return Diagnostic(
                        "error",
                        "unstratifiable",
                        f"negation inside a recursive cycle: {names}",
                        program.views[0].span if program.views else SourceSpan(program.label, 1, 1, 1, 1),
                    )
    return StratumAssignment(strata)


def _negative_cycle(views: set[PredId], deps: list[tuple[PredId, PredId, bool]]) -> list[PredId]:
    """Find predicates on a cycle that contains a negated edge (Tarjan SCC)."""
    graph: dict[PredId, list[tuple[PredId, bool]]] = {v: [] for v in views}
    for head, dep, negated in deps:
        graph[head].append((dep, negated))

    index: dict[PredId, int] = {}
    low: dict[PredId, int] = {}
    on_stack: set[PredId] = set()
    stack: list[PredId] = []
    sccs: list[list[PredId]] = []
    counter = [0]

    def strongconnect(v: PredId) -> None:
        work = [(v, iter(graph[v]))]
        index[v] = low[v] = counter[0]
        counter[0] += 1
        stack.append(v)
        on_stack.add(v)
        while work:
            node, it = work[-1]
            advanced = False
            for w, _neg in it:
                if w not in index:
                    index[w] = low[w] = counter[0]
                    counter[0] += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(graph[w])))
                    advanced = True
                    break
                if w in on_stack:
                    low[node] = min(low[node], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                scc = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    scc.append(w)
                    if w == node:
                        break
                sccs.append(scc)

    for v in graph:
        if v not in index:
            strongconnect(v)

    for scc in sccs:
        members = set(scc)
        internal_neg = any(h in members and d in members and neg for h, d, neg in deps)
        if internal_neg and (len(scc) > 1 or any(h == d for h, d, neg in deps if neg and h in members)):
            return sorted(scc)
    return []


# ----------------------------------------------------------------------------
# One-shot load

@dataclass(frozen=True)
class LoadedProgram:
    """A program that passed parse, role, safety and stratification checks."""

    program: Program
    signature: dict[PredId, str]
    strata: StratumAssignment
    warnings: tuple[Diagnostic, ...] = ()


def load_program(source: str, label: str = "<string>") -> tuple[LoadedProgram | None, list[Diagnostic]]:
    program, diagnostics = parse_program(source, label)
    if program is None:
        return None, diagnostics
    diagnostics = list(diagnostics)
    diagnostics.extend(check_roles(program))
    if any(d.severity == "error" for d in diagnostics):
        return None, diagnostics
    diagnostics.extend(check_safety(program))
    if any(d.severity == "error" for d in diagnostics):
        return None, diagnostics
    strata = check_stratification(program)
    if isinstance(strata, Diagnostic):
        diagnostics.append(strata)
        return None, diagnostics
    loaded = LoadedProgram(
        program=program,
        signature=predicate_signature(program),
        strata=strata,
        warnings=tuple(d for d in diagnostics if d.severity == "warning"),
    )
    return loaded, diagnostics
