from __future__ import annotations

from gen_portfolio import PAYMENT_UP_10PCT, write_full_portfolio, write_slim_portfolio
from cdlengine.errors import UnknownPredicate
from cdlengine.parser import parse_goal
from cdlengine.portfolio import (
    Scenario,
    apply_overrides,
    load_portfolio,
    run_query_all,
    whatif,
)
from cdlengine.simulator import advance, init_simulation


def goal(text: str):
    parsed, diags = parse_goal(text)
    assert parsed is not None
    return parsed


def test_load_three_instances(tmp_path):
    write_full_portfolio(tmp_path, 3, seed=1)
    portfolio = load_portfolio(tmp_path)
    assert len(portfolio.entries) == 3
    assert portfolio.failures == {}


def test_partial_load_reports_failures(tmp_path):
    write_slim_portfolio(tmp_path, 2, seed=2)
    bad = tmp_path / "broken"
    bad.mkdir()
    (bad / "contract.cdl").write_text("p :- ~q\nq :- ~p\n")
    portfolio = load_portfolio(tmp_path)
    assert len(portfolio.entries) == 2
    assert set(portfolio.failures) == {"broken"}
    assert portfolio.failures["broken"][0].code == "unstratifiable"


def test_empty_directory(tmp_path):
    portfolio = load_portfolio(tmp_path)
    assert portfolio.entries == {}
    report = whatif(portfolio, Scenario.from_dict(PAYMENT_UP_10PCT), goal("obligation_total(A, T)"))
    assert report.total == 0 and report.affected == 0


def test_run_query_all_monthly_payment(tmp_path):
    write_full_portfolio(tmp_path, 3, seed=3)
    portfolio = load_portfolio(tmp_path)
    results = run_query_all(portfolio, goal("monthly_payment(A, P)"))
    assert len(results) == 3
    for bindings in results.values():
        assert not isinstance(bindings, Exception)
        assert len(bindings) == 1


def test_run_query_all_typo_predicate(tmp_path):
    write_slim_portfolio(tmp_path, 3, seed=4)
    portfolio = load_portfolio(tmp_path)
    results = run_query_all(portfolio, goal("monthly_paymnt(A, P)"))
    assert all(isinstance(r, UnknownPredicate) for r in results.values())


def test_batch_simulate_then_query_overdue(tmp_path):
    write_full_portfolio(tmp_path, 3, seed=5)
    portfolio = load_portfolio(tmp_path)
    for entry in portfolio.entries.values():
        sim = init_simulation(entry.bundle.loaded, entry.bundle.config, base_dir=tmp_path)
        for _ in range(6):
            sim = advance(sim)
        entry.store = sim.store
    results = run_query_all(portfolio, goal("status_overdue"))
    assert all(r == ({},) for r in results.values())


def test_shared_rules_prepended(tmp_path):
    (tmp_path / "shared.cdl").write_text("doubled(A, T) :- monthly_payment(A, P) & evaluate(times(P, 2), T)\n")
    write_slim_portfolio(tmp_path, 2, seed=6)
    portfolio = load_portfolio(tmp_path)
    results = run_query_all(portfolio, goal("doubled(A, T)"))
    assert all(len(r) == 1 for r in results.values())


def test_whatif_reports_changed_contracts(tmp_path):
    write_slim_portfolio(tmp_path, 20, seed=7, lease_share=0.3)
    portfolio = load_portfolio(tmp_path)
    scenario = Scenario.from_dict(PAYMENT_UP_10PCT)
    report = whatif(portfolio, scenario, goal("obligation_total(A, T)"))
    assert report.total == 20
    leases = sum(
        1
        for e in portfolio.entries.values()
        if not e.store.facts_for(("instance_of", 2))
        or e.store.facts_for(("instance_of", 2))[0].args[1].name == "lease_account"
    )
    assert 0 < leases < 20
    assert report.affected == 20 - leases
    for diff in report.per_contract:
        assert diff.changed == (diff.before != diff.after)


def test_whatif_matches_physical_rewrite(tmp_path):
    """Oracle: rewriting the facts file and reloading gives the same answers."""
    write_slim_portfolio(tmp_path, 12, seed=8, lease_share=0.25)
    portfolio = load_portfolio(tmp_path)
    scenario = Scenario.from_dict(PAYMENT_UP_10PCT)
    g = goal("obligation_total(A, T)")
    report = whatif(portfolio, scenario, g)
    by_id = {d.contract_id: d for d in report.per_contract}

    for sub in sorted(p for p in tmp_path.iterdir() if p.is_dir()):
        facts = (sub / "facts.cdl").read_text()
        rewritten = []
        for line in facts.splitlines():
            if line.startswith("monthly_payment(") and "auto_finance_account" in facts:
                inner = line[len("monthly_payment("):-1]
                acct, payment = [p.strip() for p in inner.split(",")]
                bumped = int(payment) + (int(payment) * 1000) // 10000
                rewritten.append(f"monthly_payment({acct}, {bumped})")
            else:
                rewritten.append(line)
        (sub / "facts.cdl").write_text("\n".join(rewritten) + "\n")

    reloaded = load_portfolio(tmp_path)
    fresh = run_query_all(reloaded, g)
    for cid, bindings in fresh.items():
        want = {tuple(sorted((k, str(v)) for k, v in b.items())) for b in bindings}
        got = {tuple(sorted((k, str(v)) for k, v in b.items())) for b in by_id[cid].after}
        assert got == want, cid


def test_whatif_isolation(tmp_path):
    write_slim_portfolio(tmp_path, 5, seed=9)
    portfolio = load_portfolio(tmp_path)
    versions = {cid: e.store.version for cid, e in portfolio.entries.items()}
    facts = {cid: e.store.fact_set() for cid, e in portfolio.entries.items()}
    whatif(portfolio, Scenario.from_dict(PAYMENT_UP_10PCT), goal("obligation_total(A, T)"))
    for cid, entry in portfolio.entries.items():
        assert entry.store.version == versions[cid]
        assert entry.store.fact_set() == facts[cid]


def test_empty_scenario_changes_nothing(tmp_path):
    write_slim_portfolio(tmp_path, 4, seed=10)
    portfolio = load_portfolio(tmp_path)
    report = whatif(
        portfolio, Scenario.from_dict({"name": "noop", "overrides": []}), goal("obligation_total(A, T)")
    )
    assert report.affected == 0


def test_override_mismatch_warning_and_strict(tmp_path):
    write_slim_portfolio(tmp_path, 6, seed=11, lease_share=0.0, missing_payment_share=0.5)
    portfolio = load_portfolio(tmp_path)
    scenario = Scenario.from_dict(PAYMENT_UP_10PCT)
    report = whatif(portfolio, scenario, goal("obligation_total(A, T)"))
    assert any(d.warnings for d in report.per_contract)
    assert all(d.error is None for d in report.per_contract)
    strict_report = whatif(portfolio, scenario, goal("obligation_total(A, T)"), strict=True)
    mismatched = [d for d in strict_report.per_contract if d.error]
    assert mismatched and all("override_mismatch" in d.error for d in mismatched)


def test_filter_skips_contract_without_match(tmp_path):
    write_slim_portfolio(tmp_path, 1, seed=12, lease_share=1.0)
    portfolio = load_portfolio(tmp_path)
    entry = next(iter(portfolio.entries.values()))
    scenario = Scenario.from_dict(PAYMENT_UP_10PCT)
    overlaid, warnings = apply_overrides(entry, scenario)
    assert overlaid.fact_set() == entry.store.fact_set()
    assert warnings == []


def test_report_serialization(tmp_path):
    write_slim_portfolio(tmp_path, 3, seed=13)
    portfolio = load_portfolio(tmp_path)
    report = whatif(portfolio, Scenario.from_dict(PAYMENT_UP_10PCT), goal("obligation_total(A, T)"))
    data = report.as_dict()
    assert data["total"] == 3
    assert len(data["contracts"]) == 3
    csv_text = report.to_csv()
    lines = csv_text.strip().splitlines()
    assert lines[0] == "contract_id,changed,before,after"
    assert len(lines) == 4
