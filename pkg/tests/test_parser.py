from __future__ import annotations

import random

from conftest import DRAFT_DATASET, DRAFT_INVOICE_RULE
from gen_programs import random_program
from naive_eval import exhaustive_stratum_search
from cdlengine.parser import (
    Diagnostic,
    StratumAssignment,
    check_safety,
    check_stratification,
    load_program,
    parse_goal,
    parse_program,
)
from cdlengine.reference import reference_files
from cdlengine.terms import Atom, Literal, Program, Variable, ViewRule


def errors(diags):
    return [d for d in diags if d.severity == "error"]


def codes(diags):
    return [d.code for d in errors(diags)]


# ----------------------------------------------------------------------------
# parse_program

def test_dataset_counts():
    program, diags = parse_program(DRAFT_DATASET, "dataset.cdl")
    assert program is not None
    assert len(program.facts) == 10
    assert len(program.views) == 0
    assert len(program.dynamics) == 0


def test_invoice_rule_shape():
    program, diags = parse_program(DRAFT_INVOICE_RULE, "invoice.cdl")
    assert program is not None
    assert len(program.dynamics) == 1
    rule = program.dynamics[0]
    assert len(rule.condition) == 11
    assert len(rule.effects) == 5
    retracts = [str(e.atom) for e in rule.effects if e.retract]
    assert "today(M,D,Y)" in retracts


def test_unbalanced_paren():
    program, diags = parse_program("class(X", "bad.cdl")
    assert program is None
    (diag,) = errors(diags)
    assert diag.code == "parse_error"
    assert diag.span.start_line == 1


def test_arity_mismatch():
    program, diags = parse_program("p(a)\np(a, b)")
    assert program is None
    assert codes(diags) == ["arity_mismatch"]


def test_non_ground_fact_rejected():
    program, diags = parse_program("class(X)")
    assert "non_ground_fact" in codes(diags)


def test_negated_builtin_rejected():
    program, diags = parse_program("p(X) :- q(X) & ~last_day(1, 2, X)")
    assert "negated_builtin" in codes(diags)


def test_compound_outside_builtin_rejected():
    program, diags = parse_program("p(X) :- q(minus(X, 1))")
    assert "compound_term" in codes(diags)


def test_builtin_cannot_be_effect():
    program, diags = parse_program("p ==> evaluate(plus(1, 2), X)")
    assert "builtin_effect" in codes(diags)


def test_builtin_wrong_arity_is_arity_mismatch():
    program, diags = parse_program("p :- mp1(1)")
    assert "arity_mismatch" in codes(diags)


def test_trailing_period_accepted():
    program, diags = parse_program("class(customer).\np :- class(customer).")
    assert program is not None
    assert len(program.facts) == 1 and len(program.views) == 1


def test_comments_and_blank_lines():
    program, diags = parse_program("% a comment\n\nclass(customer) % trailing\n")
    assert program is not None and len(program.facts) == 1


def test_statement_level_recovery_reports_all_errors():
    program, diags = parse_program("class(X\np(a)\nq(b\n")
    assert program is None
    assert len(errors(diags)) == 2


def test_string_escapes():
    program, diags = parse_program('has_pretty_name(apa, "say \\"hi\\" \\\\ there")')
    assert program is not None
    value = program.facts[0].atom.args[1].value
    assert value == 'say "hi" \\ there'


def test_determinism():
    source = reference_files()["contract.cdl"]
    a = parse_program(source, "a")
    b = parse_program(source, "a")
    assert a[0] is not None
    from cdlengine.terms import same_structure

    assert same_structure(a[0], b[0])
    assert [d.as_dict() for d in a[1]] == [d.as_dict() for d in b[1]]


def test_diagnostic_spans_inside_input():
    source = "p(a)\nq(X\nr(b)\n~s(Y) :- t\n"
    program, diags = parse_program(source)
    lines = source.splitlines()
    for d in diags:
        assert 1 <= d.span.start_line <= len(lines)
        assert d.span.start_col >= 1
        assert d.span.start_col <= len(lines[d.span.start_line - 1]) + 1


def test_diagnostic_text_format():
    _, diags = parse_program("class(X", "f.cdl")
    assert diags[0].render().startswith("f.cdl:1:")
    assert "error[parse_error]:" in diags[0].render()


# ----------------------------------------------------------------------------
# parse_goal

def test_goal_single_literal():
    goal, diags = parse_goal("has_permission(bank_1, X)")
    assert goal is not None and len(goal) == 1
    lit = goal[0]
    assert not lit.negated
    assert lit.atom.args[1] == Variable("X")


def test_goal_ground_negation_is_safe():
    goal, diags = parse_goal("~existing_apa")
    assert goal is not None
    assert goal[0].negated and goal[0].atom.args == ()


def test_goal_unbound_negation_unsafe():
    goal, diags = parse_goal("~owns(X)")
    assert goal is None
    assert codes(diags) == ["unsafe_variable"]
    assert "X" in diags[0].message


def test_goal_conjunction():
    goal, diags = parse_goal("instance_of(C, customer) & ~has_apa(C, apa)")
    assert goal is not None and len(goal) == 2


# ----------------------------------------------------------------------------
# safety

def test_reference_contract_is_safe():
    files = reference_files()
    loaded, diags = load_program(files["contract.cdl"] + "\n" + files["facts.cdl"], "apa")
    assert loaded is not None
    assert check_safety(loaded.program) == []


def test_unsafe_negated_head_var():
    program, _ = parse_program("p(X) :- ~q(X)")
    assert program is not None
    diags = check_safety(program)
    assert codes(diags) == ["unsafe_variable"]
    assert "X" in diags[0].message


def test_unsafe_builtin_input():
    program, _ = parse_program("p(Y) :- q(X) & evaluate(minus(X, Z), Y)")
    assert program is not None
    diags = check_safety(program)
    assert codes(diags) == ["unsafe_variable"]
    assert "Z" in diags[0].message


def test_builtin_output_binds():
    program, _ = parse_program("p(Y) :- q(X) & evaluate(minus(X, 1), Y)")
    assert check_safety(program) == []


def test_dynamic_rule_effect_safety():
    program, _ = parse_program("q(X) ==> r(X, Y)")
    assert program is not None
    diags = check_safety(program)
    assert codes(diags) == ["unsafe_variable"]
    assert "Y" in diags[0].message


# ----------------------------------------------------------------------------
# stratification

def test_strata_of_obligation_rules():
    source = (
        "existing_apa :- has_apa(afa, APA) & instance_of(APA, automatic_payment_agreement)\n"
        "has_obligation(C, make_payment) :- instance_of(C, customer) & ~existing_apa\n"
    )
    program, _ = parse_program(source)
    strata = check_stratification(program)
    assert isinstance(strata, StratumAssignment)
    assert strata.strata[("existing_apa", 0)] == 1
    assert strata.strata[("has_obligation", 2)] == 2


def test_negative_cycle_reported():
    program, _ = parse_program("p :- ~q\nq :- ~p\n")
    result = check_stratification(program)
    assert isinstance(result, Diagnostic)
    assert result.code == "unstratifiable"
    assert "p/0" in result.message and "q/0" in result.message


def test_positive_recursion_allowed():
    program, _ = parse_program("p(X) :- e(X)\np(X) :- e2(X, Y) & p(Y)\n")
    result = check_stratification(program)
    assert isinstance(result, StratumAssignment)


def test_no_negation_single_stratum():
    program, _ = parse_program("a :- b\nc :- a\n")
    result = check_stratification(program)
    assert isinstance(result, StratumAssignment)
    # any monotone assignment is fine; positive deps never force an increase
    assert result.strata[("c", 0)] >= result.strata[("a", 0)]


def test_stratification_matches_exhaustive_search():
    rng = random.Random(13)
    accepted = rejected = 0
    for _ in range(120):
        # generate small possibly-unstratifiable programs: raw rule soup
        n_views = rng.randint(1, 4)
        lines = []
        for _ in range(rng.randint(1, 6)):
            head = f"v{rng.randint(1, n_views)}"
            body = []
            for _ in range(rng.randint(1, 3)):
                neg = "~" if rng.random() < 0.4 else ""
                body.append(f"{neg}v{rng.randint(1, n_views)}")
            lines.append(f"{head} :- {' & '.join(body)}")
        program, _ = parse_program("\n".join(lines))
        assert program is not None
        got = check_stratification(program)
        want = exhaustive_stratum_search(program)
        if want:
            assert isinstance(got, StratumAssignment), "\n".join(lines)
            accepted += 1
        else:
            assert isinstance(got, Diagnostic), "\n".join(lines)
            rejected += 1
    assert accepted and rejected  # both branches exercised


def test_unsafe_rule_injection_always_rejected():
    rng = random.Random(99)
    for _ in range(30):
        loaded = random_program(rng)
        bad = ViewRule(Atom("vbad", (Variable("ZZ"),)), (Literal(Atom("b1")),))
        program = Program(statements=loaded.program.statements + (bad,))
        diags = check_safety(program)
        assert any(d.code == "unsafe_variable" for d in diags)


def test_load_program_full_pipeline():
    loaded, diags = load_program("p :- ~q\nq :- ~p\n")
    assert loaded is None
    assert "unstratifiable" in codes(diags)
