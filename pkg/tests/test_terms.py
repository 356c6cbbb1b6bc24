from __future__ import annotations

import random

import pytest

from conftest import DRAFT_DATASET, DRAFT_INVOICE_RULE
from gen_programs import random_program
from cdlengine.parser import parse_program
from cdlengine.terms import (
    Atom,
    Constant,
    Fact,
    Literal,
    Program,
    RoleConflict,
    ViewRule,
    predicate_signature,
    pretty_print,
    same_structure,
)


def parse_ok(source: str) -> Program:
    program, diags = parse_program(source)
    assert program is not None, [d.render() for d in diags]
    return program


def test_pretty_print_single_fact():
    program = parse_ok("class(customer)")
    assert pretty_print(program) == "class(customer)\n"


def test_dataset_roundtrip():
    program = parse_ok(DRAFT_DATASET)
    assert same_structure(program, parse_ok(pretty_print(program)))


def test_invoice_rule_roundtrip():
    program = parse_ok(DRAFT_INVOICE_RULE)
    printed = pretty_print(program)
    assert same_structure(program, parse_ok(printed))
    # and printing is a fixpoint once normalized
    assert pretty_print(parse_ok(printed)) == printed


def test_roundtrip_on_random_programs():
    rng = random.Random(7)
    for _ in range(25):
        loaded = random_program(rng)
        printed = pretty_print(loaded.program)
        assert same_structure(loaded.program, parse_ok(printed))


def test_roundtrip_on_every_shipped_fixture():
    from cdlengine.reference import reference_dir

    for path in sorted(reference_dir().glob("*.cdl")):
        program = parse_ok(path.read_text())
        printed = pretty_print(program)
        assert same_structure(program, parse_ok(printed)), path.name
        assert pretty_print(parse_ok(printed)) == printed, path.name


def test_directives_survive_roundtrip():
    src = "#external has_apa/2\n#event payment_received/0\n#clause p1\nclass(customer)\n"
    program = parse_ok(src)
    again = parse_ok(pretty_print(program))
    assert again.declared_externals == {("has_apa", 2)}
    assert again.declared_events == {("payment_received", 0)}
    assert again.facts[0].clause_id == "p1"


def test_predicate_identity_is_name_and_arity():
    # p/1 and p/2 coexist in the data model without conflict
    program = Program(
        statements=(
            Fact(Atom("p", (Constant("a"),))),
            ViewRule(Atom("q"), (Literal(Atom("p", (Constant("a"), Constant("b")))),)),
        )
    )
    sig = predicate_signature(program)
    assert sig[("p", 1)] == "base"
    assert sig[("p", 2)] == "base"
    assert sig[("q", 0)] == "view"


def test_signature_of_dataset():
    program = parse_ok(DRAFT_DATASET)
    sig = predicate_signature(program)
    assert sig == {
        ("class", 1): "base",
        ("instance_of", 2): "base",
        ("has_apa", 2): "base",
        ("has_permission", 2): "base",
        ("has_pretty_name", 2): "base",
    }


def test_role_conflict_view_vs_fact():
    program = Program(
        statements=(
            Fact(Atom("p")),
            ViewRule(Atom("p"), (Literal(Atom("q")),)),
        )
    )
    with pytest.raises(RoleConflict):
        predicate_signature(program)


def test_declared_external_role():
    program = parse_ok("#external has_apa/2\nexisting :- has_apa(afa, P)")
    sig = predicate_signature(program)
    assert sig[("has_apa", 2)] == "external"
    assert sig[("existing", 0)] == "view"


def test_dynamic_effects_are_base():
    program = parse_ok("p ==> q & ~r")
    sig = predicate_signature(program)
    assert sig[("q", 0)] == "base"
    assert sig[("r", 0)] == "base"
    assert sig[("p", 0)] == "base"
