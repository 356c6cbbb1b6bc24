"""Contract bundle loading: contract.cdl plus optional facts.cdl,
config.json, faq.json and clauses.json in one directory (or passed as an
in-memory file map). Static checks run on the merged program.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

from .errors import ValidationFailed
from .faq import FaqEntry, parse_faq_file
from .parser import (
    Diagnostic,
    LoadedProgram,
    check_roles,
    check_safety,
    check_stratification,
    parse_program,
)
from .simulator import SimConfig
from .terms import ClauseEntry, ClauseMap, Program, SourceSpan, predicate_signature

BUNDLE_FILES = ("contract.cdl", "facts.cdl", "config.json", "faq.json", "clauses.json")


@dataclass(frozen=True)
class ContractBundle:
    loaded: LoadedProgram
    faqs: tuple[FaqEntry, ...] = ()
    config: SimConfig | None = None
    base_dir: Path | None = None
    diagnostics: tuple[Diagnostic, ...] = ()


def merge_programs(parts: list[Program], label: str) -> Program:
    statements = tuple(s for p in parts for s in p.statements)
    externals = frozenset().union(*(p.declared_externals for p in parts))
    events = frozenset().union(*(p.declared_events for p in parts))
    return Program(statements, externals, events, None, label)


def _cross_file_arity_check(program: Program) -> list[Diagnostic]:
    """Each file was checked on its own; re-check arities across the merge."""
    from .terms import DynamicRule, Fact, ViewRule

    seen: dict[str, tuple[int, SourceSpan]] = {}
    out: list[Diagnostic] = []
    for stmt in program.statements:
        if isinstance(stmt, Fact):
            atoms = [stmt.atom]
        elif isinstance(stmt, ViewRule):
            atoms = [stmt.head] + [l.atom for l in stmt.body if not l.builtin]
        else:
            atoms = [l.atom for l in stmt.condition if not l.builtin] + [e.atom for e in stmt.effects]
        for atom in atoms:
            prior = seen.get(atom.predicate)
            if prior is None:
                seen[atom.predicate] = (len(atom.args), stmt.span)
            elif prior[0] != len(atom.args):
                out.append(
                    Diagnostic(
                        "error",
                        "arity_mismatch",
                        f"{atom.predicate} used with {len(atom.args)} argument(s) but "
                        f"earlier with {prior[0]} (at {prior[1]})",
                        stmt.span,
                    )
                )
    return out


def load_bundle_from_files(files: dict[str, str], label: str = "bundle") -> tuple[ContractBundle | None, list[Diagnostic]]:
    diagnostics: list[Diagnostic] = []
    if "contract.cdl" not in files:
        diagnostics.append(
            Diagnostic(
                "error",
                "missing_file",
                "bundle has no contract.cdl",
                SourceSpan(label, 1, 1, 1, 1),
            )
        )
        return None, diagnostics

    parts: list[Program] = []
    for name in ("contract.cdl", "facts.cdl"):
        if name not in files:
            continue
        program, diags = parse_program(files[name], name)
        diagnostics.extend(diags)
        if program is not None:
            parts.append(program)
    if any(d.severity == "error" for d in diagnostics):
        return None, diagnostics

    merged = merge_programs(parts, label)
    diagnostics.extend(_cross_file_arity_check(merged))
    diagnostics.extend(check_roles(merged))
    if any(d.severity == "error" for d in diagnostics):
        return None, diagnostics
    diagnostics.extend(check_safety(merged))
    if any(d.severity == "error" for d in diagnostics):
        return None, diagnostics
    strata = check_stratification(merged)
    if isinstance(strata, Diagnostic):
        diagnostics.append(strata)
        return None, diagnostics

    # two symbols sharing a display name would render distinct answers
    # identically, so collisions are flagged at load
    from .terms import Constant, Fact, StringLiteral

    seen_names: dict[str, str] = {}
    for stmt in merged.statements:
        if not isinstance(stmt, Fact) or stmt.atom.pred_id != ("has_pretty_name", 2):
            continue
        subject, display = stmt.atom.args
        if not isinstance(subject, Constant) or not isinstance(display, StringLiteral):
            continue
        prior = seen_names.get(display.value)
        if prior is not None and prior != subject.name:
            diagnostics.append(
                Diagnostic(
                    "warning",
                    "pretty_name_collision",
                    f"{subject.name} and {prior} share the display name {display.value!r}",
                    stmt.span,
                )
            )
        seen_names.setdefault(display.value, subject.name)

    clause_map: ClauseMap | None = None
    if "clauses.json" in files:
        entries = tuple(
            ClauseEntry(e["id"], e["text"], tuple(e.get("source_lines", (0, 0))))
            for e in json.loads(files["clauses.json"])
        )
        clause_map = ClauseMap(entries)
        for stmt in merged.statements:
            if stmt.clause_id is not None and stmt.clause_id not in clause_map:
                diagnostics.append(
                    Diagnostic(
                        "warning",
                        "unknown_clause",
                        f"clause id {stmt.clause_id!r} is not in the clause map",
                        stmt.span,
                    )
                )
        merged = replace(merged, clause_map=clause_map)

    faqs: tuple[FaqEntry, ...] = ()
    if "faq.json" in files:
        entries_list, faq_diags = parse_faq_file(files["faq.json"])
        diagnostics.extend(faq_diags)
        faqs = tuple(entries_list)

    config: SimConfig | None = None
    if "config.json" in files:
        try:
            config = SimConfig.from_dict(json.loads(files["config.json"]))
        except (ValueError, KeyError, TypeError) as exc:
            diagnostics.append(
                Diagnostic(
                    "error", "bad_config", f"config.json: {exc}", SourceSpan("config.json", 1, 1, 1, 1)
                )
            )

    if any(d.severity == "error" for d in diagnostics):
        return None, diagnostics

    loaded = LoadedProgram(
        program=merged,
        signature=predicate_signature(merged),
        strata=strata,
        warnings=tuple(d for d in diagnostics if d.severity == "warning"),
    )
    return ContractBundle(loaded, faqs, config, None, tuple(diagnostics)), diagnostics


def load_bundle_dir(path: str | Path) -> tuple[ContractBundle | None, list[Diagnostic]]:
    path = Path(path)
    files: dict[str, str] = {}
    for name in BUNDLE_FILES:
        fp = path / name
        if fp.exists():
            files[name] = fp.read_text()
    bundle, diagnostics = load_bundle_from_files(files, label=path.name)
    if bundle is not None:
        bundle = replace(bundle, base_dir=path)
    return bundle, diagnostics


def require_bundle(path: str | Path) -> ContractBundle:
    bundle, diagnostics = load_bundle_dir(path)
    if bundle is None:
        raise ValidationFailed([d for d in diagnostics if d.severity == "error"])
    return bundle
