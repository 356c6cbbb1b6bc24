"""The shipped automatic payment agreement bundle and its fixtures.

The bundle doubles as the canonical test fixture and as documentation of
the CDL dialect: contract.cdl holds the rule library, facts.cdl one
instance, clauses.json the agreement text, faq.json the question set and
sim.json the walkthrough configuration.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from ..bundle import ContractBundle, load_bundle_from_files
from ..faq import FaqEntry
from ..parser import LoadedProgram
from ..simulator import SimConfig

REFERENCE_ID = "apa-ref"

_FILES = ("contract.cdl", "facts.cdl", "clauses.json", "faq.json")


def reference_dir() -> Path:
    return Path(str(resources.files("cdlengine.reference")))


def reference_files() -> dict[str, str]:
    base = reference_dir()
    files = {name: (base / name).read_text() for name in _FILES}
    files["config.json"] = (base / "sim.json").read_text()
    return files


def fixture_path(name: str) -> Path:
    return reference_dir() / name


@dataclass(frozen=True)
class ReferenceBundle:
    bundle: ContractBundle
    config: SimConfig

    @property
    def loaded(self) -> LoadedProgram:
        return self.bundle.loaded

    @property
    def faqs(self) -> tuple[FaqEntry, ...]:
        return self.bundle.faqs


def build_reference() -> ReferenceBundle:
    """Load the packaged bundle; it must pass every static check."""
    bundle, diagnostics = load_bundle_from_files(reference_files(), label=REFERENCE_ID)
    if bundle is None:
        raised = "; ".join(d.render() for d in diagnostics if d.severity == "error")
        raise AssertionError(f"packaged reference bundle failed to load: {raised}")
    config = bundle.config or SimConfig.from_dict(
        json.loads((reference_dir() / "sim.json").read_text())
    )
    return ReferenceBundle(bundle, config)
