"""Independent evaluation oracle: naive iterate-to-fixpoint per stratum.

Deliberately dumb: no indexes, no deltas, plain linear scans and explicit
substitution. Only ordinary literals and negation are supported, which is
all the random oracle programs use. Kept apart from the product evaluator
so the two can disagree.
"""
from __future__ import annotations

from cdlengine.terms import Atom, Program, Term, Variable


def naive_strata(program: Program) -> dict | None:
    views = {v.head.pred_id for v in program.views}
    strata = {p: 1 for p in views}
    for _ in range(len(views) + 2):
        changed = False
        for v in program.views:
            for lit in v.body:
                if lit.builtin or lit.atom.pred_id not in views:
                    continue
                need = strata[lit.atom.pred_id] + (1 if lit.negated else 0)
                if strata[v.head.pred_id] < need:
                    strata[v.head.pred_id] = need
                    changed = True
        if not changed:
            return strata
    return None


def _subst(term: Term, env: dict) -> Term:
    if isinstance(term, Variable):
        return env.get(term.name, term)
    return term


def _apply(atom: Atom, env: dict) -> Atom:
    return Atom(atom.predicate, tuple(_subst(t, env) for t in atom.args))


def _match(pattern: Atom, fact: Atom, env: dict) -> dict | None:
    if pattern.pred_id != fact.pred_id:
        return None
    out = dict(env)
    for p, f in zip(pattern.args, fact.args):
        if isinstance(p, Variable):
            if p.name in out:
                if out[p.name] != f:
                    return None
            else:
                out[p.name] = f
        elif p != f:
            return None
    return out


def _solutions(body, index, env, everything):
    if index == len(body):
        yield env
        return
    lit = body[index]
    assert not lit.builtin, "oracle programs must not use builtins"
    if lit.negated:
        ground = _apply(lit.atom, env)
        if ground not in everything:
            yield from _solutions(body, index + 1, env, everything)
    else:
        for fact in list(everything):
            extended = _match(lit.atom, fact, env)
            if extended is not None:
                yield from _solutions(body, index + 1, extended, everything)


def naive_model(program: Program, base_facts: set[Atom]) -> set[Atom]:
    """All derivable view facts, via per-stratum naive fixpoint."""
    strata = naive_strata(program)
    assert strata is not None, "oracle needs a stratifiable program"
    derived: set[Atom] = set()
    top = max(strata.values(), default=0)
    for s in range(1, top + 1):
        rules = [v for v in program.views if strata[v.head.pred_id] == s]
        while True:
            new: set[Atom] = set()
            everything = base_facts | derived
            for rule in rules:
                for env in _solutions(rule.body, 0, {}, everything):
                    head = _apply(rule.head, env)
                    if head not in derived:
                        new.add(head)
            if not new:
                break
            derived |= new
    return derived


def naive_query(program: Program, base_facts: set[Atom], goal) -> set[tuple]:
    """Goal answers as frozen (var, value) tuples, by brute enumeration."""
    derived = naive_model(program, base_facts)
    everything = base_facts | derived
    names = sorted({v.name for lit in goal for v in lit.atom.args if isinstance(v, Variable)})
    out = set()
    for env in _solutions(tuple(goal), 0, {}, everything):
        out.add(tuple((n, env[n]) for n in names if n in env))
    return out


def exhaustive_stratum_search(program: Program) -> bool:
    """Does ANY stratum assignment satisfy the stratification constraints?

    Brute force over all assignments; usable only for a handful of views.
    """
    views = sorted({v.head.pred_id for v in program.views})
    if not views:
        return True
    n = len(views)
    deps = []
    for v in program.views:
        for lit in v.body:
            if not lit.builtin and lit.atom.pred_id in set(views):
                deps.append((v.head.pred_id, lit.atom.pred_id, lit.negated))

    def ok(assign: dict) -> bool:
        for head, dep, negated in deps:
            if negated and not assign[head] > assign[dep]:
                return False
            if not negated and not assign[head] >= assign[dep]:
                return False
        return True

    import itertools

    for combo in itertools.product(range(1, n + 1), repeat=n):
        if ok(dict(zip(views, combo))):
            return True
    return False
