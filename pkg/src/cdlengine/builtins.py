"""Builtin predicates: calendar arithmetic, integer expressions, disequality.

One registry serves both the parser (argument modes drive the safety check)
and the evaluator (the ``run`` functions), so the two cannot drift apart.

Modes: ``i`` arguments must be bound when the builtin is reached; ``o``
arguments may be free and get bound by the builtin (a bound value in an
``o`` position acts as an equality filter).

Dates are (month, day, year) triples. Months are validated to 1..12 and
years to >= 1. Day arguments of ``date_before`` only need to be >= 1 and
are compared numerically, which lets contracts compare day-of-month values
such as a due day against a month length; ``day_of_week`` demands a real
calendar date.
"""
from __future__ import annotations

import calendar
from dataclasses import dataclass
from typing import Callable

from .errors import BuiltinDomainError
from .terms import Atom, Compound, IntLiteral, PredId, Term

#: functors allowed inside an ``evaluate`` expression
ARITH_FUNCTORS = {("plus", 2), ("minus", 2), ("times", 2)}


@dataclass(frozen=True)
class BuiltinSpec:
    name: str
    modes: tuple[str, ...]  # "i" or "o" per argument
    run: Callable[[tuple[Term, ...], Atom], list[tuple[Term, ...]]]

    @property
    def pred_id(self) -> PredId:
        return (self.name, len(self.modes))


def _int_of(term: Term, atom: Atom) -> int:
    if isinstance(term, IntLiteral):
        return term.value
    raise BuiltinDomainError(f"expected integer, got {term}", atom)


def _check_month(m: int, atom: Atom) -> None:
    if not 1 <= m <= 12:
        raise BuiltinDomainError(f"month {m} out of range 1..12", atom)


def _check_year(y: int, atom: Atom) -> None:
    if y < 1:
        raise BuiltinDomainError(f"year {y} out of range", atom)


def eval_expr(term: Term, atom: Atom) -> int:
    """Evaluate an integer expression tree of plus/minus/times over int leaves."""
    if isinstance(term, IntLiteral):
        return term.value
    if isinstance(term, Compound):
        if (term.functor, len(term.args)) not in ARITH_FUNCTORS:
            raise BuiltinDomainError(f"unknown arithmetic functor {term.functor}/{len(term.args)}", atom)
        a = eval_expr(term.args[0], atom)
        b = eval_expr(term.args[1], atom)
        if term.functor == "plus":
            return a + b
        if term.functor == "minus":
            return a - b
        return a * b
    raise BuiltinDomainError(f"non-integer leaf {term} in arithmetic expression", atom)


def _run_evaluate(args: tuple[Term, ...], atom: Atom) -> list[tuple[Term, ...]]:
    value = IntLiteral(eval_expr(args[0], atom))
    return [(args[0], value)]


def _run_distinct(args: tuple[Term, ...], atom: Atom) -> list[tuple[Term, ...]]:
    return [] if args[0] == args[1] else [args]


def _date_key(args: tuple[Term, ...], atom: Atom, offset: int) -> tuple[int, int, int]:
    m = _int_of(args[offset], atom)
    d = _int_of(args[offset + 1], atom)
    y = _int_of(args[offset + 2], atom)
    _check_month(m, atom)
    _check_year(y, atom)
    if d < 1:
        raise BuiltinDomainError(f"day {d} out of range", atom)
    return (y, m, d)


def _run_date_before(args: tuple[Term, ...], atom: Atom) -> list[tuple[Term, ...]]:
    return [args] if _date_key(args, atom, 0) < _date_key(args, atom, 3) else []


def _run_mp1(args: tuple[Term, ...], atom: Atom) -> list[tuple[Term, ...]]:
    m = _int_of(args[0], atom)
    _check_month(m, atom)
    return [(args[0], IntLiteral(1 if m == 12 else m + 1))]


def _run_yp1(args: tuple[Term, ...], atom: Atom) -> list[tuple[Term, ...]]:
    m = _int_of(args[0], atom)
    y = _int_of(args[1], atom)
    _check_month(m, atom)
    _check_year(y, atom)
    return [(args[0], args[1], IntLiteral(y + 1 if m == 12 else y))]


def _run_last_day(args: tuple[Term, ...], atom: Atom) -> list[tuple[Term, ...]]:
    m = _int_of(args[0], atom)
    y = _int_of(args[1], atom)
    _check_month(m, atom)
    _check_year(y, atom)
    return [(args[0], args[1], IntLiteral(calendar.monthrange(y, m)[1]))]


def _run_day_of_week(args: tuple[Term, ...], atom: Atom) -> list[tuple[Term, ...]]:
    m = _int_of(args[0], atom)
    d = _int_of(args[1], atom)
    y = _int_of(args[2], atom)
    _check_month(m, atom)
    _check_year(y, atom)
    if not 1 <= d <= calendar.monthrange(y, m)[1]:
        raise BuiltinDomainError(f"day {d} not a calendar day of {m}/{y}", atom)
    # calendar.weekday: Monday=0; we expose Sunday=0 .. Saturday=6
    w = (calendar.weekday(y, m, d) + 1) % 7
    return [(args[0], args[1], args[2], IntLiteral(w))]


_SPECS = [
    BuiltinSpec("evaluate", ("i", "o"), _run_evaluate),
    BuiltinSpec("distinct", ("i", "i"), _run_distinct),
    BuiltinSpec("date_before", ("i",) * 6, _run_date_before),
    BuiltinSpec("mp1", ("i", "o"), _run_mp1),
    BuiltinSpec("yp1", ("i", "i", "o"), _run_yp1),
    BuiltinSpec("last_day", ("i", "i", "o"), _run_last_day),
    BuiltinSpec("day_of_week", ("i", "i", "i", "o"), _run_day_of_week),
]

REGISTRY: dict[PredId, BuiltinSpec] = {s.pred_id: s for s in _SPECS}


def is_builtin(pred_id: PredId) -> bool:
    return pred_id in REGISTRY
