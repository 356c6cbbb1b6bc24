from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from cdlengine.reference import build_reference, fixture_path
from cdlengine.simulator import init_simulation

DRAFT_DATASET = fixture_path("draft_dataset.cdl").read_text()
DRAFT_OBLIGATION_VIEWS = fixture_path("draft_obligation_views.cdl").read_text()
DRAFT_INVOICE_RULE = fixture_path("draft_invoice_rule.cdl").read_text()
DRAFT_DUE_DAY_RULE = fixture_path("draft_due_day_rule.cdl").read_text()


@pytest.fixture(scope="session")
def reference():
    return build_reference()


@pytest.fixture()
def fresh_sim(reference):
    return init_simulation(reference.loaded, reference.config)


@pytest.fixture(scope="session")
def reference_store(reference):
    """Store seeded with the walkthrough config (session-scoped, read-only)."""
    return init_simulation(reference.loaded, reference.config).store
