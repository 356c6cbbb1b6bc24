"""Command line front end.

Subcommands: check, query, simulate, faq, whatif, serve. Exit codes:
0 success, 1 diagnostics or failed checks, 2 internal error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .bundle import load_bundle_dir, require_bundle
from .errors import EngineError
from .evaluator import query
from .faq import answer as faq_answer
from .faq import coverage_report
from .parser import Diagnostic, load_program, parse_goal
from .portfolio import Scenario, load_portfolio, whatif
from .simulator import SimConfig, advance, export_trace, init_simulation, send_event
from .store import FactStore


def _print_diagnostics(diagnostics: list[Diagnostic], as_json: bool) -> None:
    if as_json:
        print(json.dumps([d.as_dict() for d in diagnostics], indent=2))
    else:
        for d in diagnostics:
            print(d.render(), file=sys.stderr)


def cmd_check(args: argparse.Namespace) -> int:
    path = Path(args.path)
    if path.is_dir():
        bundle, diagnostics = load_bundle_dir(path)
        ok = bundle is not None
    else:
        loaded, diagnostics = load_program(path.read_text(), str(path))
        ok = loaded is not None
    _print_diagnostics(diagnostics, args.json)
    if ok and not args.json:
        print(f"{path}: ok")
    return 0 if ok else 1


def _session_store(args: argparse.Namespace):
    """Build (loaded, store, bundle) from a bundle dir or a single .cdl file."""
    path = Path(args.contract)
    if path.is_dir():
        bundle = require_bundle(path)
        loaded = bundle.loaded
        config = bundle.config
        if args.config:
            config = SimConfig.from_dict(json.loads(Path(args.config).read_text()))
        if config is not None:
            sim = init_simulation(loaded, config, base_dir=path)
            return loaded, sim.store, bundle, config
        store = FactStore.from_atoms(
            [f.atom for f in loaded.program.facts], loaded.signature
        )
        return loaded, store, bundle, None
    sources = [path.read_text()]
    if args.facts:
        sources.append(Path(args.facts).read_text())
    loaded, diagnostics = load_program("\n".join(sources), str(path))
    if loaded is None:
        _print_diagnostics(diagnostics, False)
        raise SystemExit(1)
    store = FactStore.from_atoms([f.atom for f in loaded.program.facts], loaded.signature)
    return loaded, store, None, None


def cmd_query(args: argparse.Namespace) -> int:
    loaded, store, _, _ = _session_store(args)
    goal, diagnostics = parse_goal(args.goal)
    if goal is None:
        _print_diagnostics(diagnostics, False)
        return 1
    bindings = query(loaded, store, goal)
    if not bindings:
        print("no")
        return 0
    for b in bindings:
        if b:
            print(", ".join(f"{k} = {v}" for k, v in sorted(b.items())))
        else:
            print("yes")
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    path = Path(args.contract)
    if path.is_dir():
        bundle = require_bundle(path)
        loaded = bundle.loaded
        base_dir = path
        config = bundle.config
    else:
        loaded, diagnostics = load_program(path.read_text(), str(path))
        if loaded is None:
            _print_diagnostics(diagnostics, False)
            return 1
        base_dir = path.parent
        config = None
    if args.config:
        config = SimConfig.from_dict(json.loads(Path(args.config).read_text()))
    if config is None:
        print("simulate: no config.json found and --config not given", file=sys.stderr)
        return 1
    sim = init_simulation(loaded, config, base_dir=base_dir)
    script = Path(args.script).read_text().splitlines() if args.script else []
    for raw in script:
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line == "advance":
            sim = advance(sim)
        elif line.startswith("event "):
            goal, diags = parse_goal(line[len("event "):])
            if goal is None or len(goal) != 1 or goal[0].negated:
                print(f"simulate: bad event line {line!r}", file=sys.stderr)
                return 1
            sim = send_event(sim, goal[0].atom)
        else:
            print(f"simulate: unknown script line {line!r}", file=sys.stderr)
            return 1
    trace = export_trace(sim)
    text = trace.to_json_lines(canonical=args.canonical)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_faq(args: argparse.Namespace) -> int:
    loaded, store, bundle, _ = _session_store(args)
    if bundle is None:
        print("faq: --contract must be a bundle directory", file=sys.stderr)
        return 1
    if args.coverage:
        uncovered = coverage_report(loaded, list(bundle.faqs))
        if uncovered:
            print("uncovered clauses: " + ", ".join(uncovered))
            return 1
        print("all clauses covered")
        return 0
    if args.ask:
        result = faq_answer(loaded, list(bundle.faqs), args.ask, store)
        for line in result.lines:
            print(line)
        if result.clause_links:
            print("see clauses: " + ", ".join(result.clause_links))
        return 0
    for entry in bundle.faqs:
        print(f"{entry.id}: {entry.question}")
    return 0


def cmd_whatif(args: argparse.Namespace) -> int:
    portfolio = load_portfolio(Path(args.portfolio))
    scenario = Scenario.from_dict(json.loads(Path(args.scenario).read_text()))
    goal, diagnostics = parse_goal(args.goal)
    if goal is None:
        _print_diagnostics(diagnostics, False)
        return 1
    report = whatif(portfolio, scenario, goal, strict=args.strict)
    if args.csv:
        Path(args.csv).write_text(report.to_csv())
    print(json.dumps(report.as_dict(), indent=2))
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cdl", description="computable contract engine")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="parse a contract and run static checks")
    p.add_argument("path", help=".cdl file or bundle directory")
    p.add_argument("--json", action="store_true", help="emit diagnostics as JSON")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("query", help="answer a goal against a contract")
    p.add_argument("--contract", required=True, help=".cdl file or bundle directory")
    p.add_argument("--facts", help="extra facts file (with a .cdl contract)")
    p.add_argument("--config", help="simulation config to seed the session store")
    p.add_argument("--goal", required=True)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("simulate", help="run a scripted simulation and print the trace")
    p.add_argument("--contract", required=True)
    p.add_argument("--config", help="simulation config JSON")
    p.add_argument("--script", help="script file: lines of 'advance' or 'event <atom>'")
    p.add_argument("--out", help="write the trace here instead of stdout")
    p.add_argument("--canonical", action="store_true", help="canonical record ordering")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("faq", help="list or answer contract FAQs")
    p.add_argument("--contract", required=True, help="bundle directory")
    p.add_argument("--facts", help=argparse.SUPPRESS)
    p.add_argument("--config", help="simulation config to seed the session store")
    p.add_argument("--ask", help="FAQ id to answer")
    p.add_argument("--coverage", action="store_true", help="report uncovered clauses")
    p.set_defaults(func=cmd_faq)

    p = sub.add_parser("whatif", help="portfolio what-if analysis")
    p.add_argument("--portfolio", required=True, help="portfolio directory")
    p.add_argument("--scenario", required=True, help="scenario JSON file")
    p.add_argument("--goal", required=True)
    p.add_argument("--csv", help="also write a flat CSV report here")
    p.add_argument("--strict", action="store_true", help="fail on override mismatches")
    p.set_defaults(func=cmd_whatif)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SystemExit as exc:
        raise
    except EngineError as exc:
        print(f"error[{exc.code}]: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # internal failure
        print(f"internal error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
