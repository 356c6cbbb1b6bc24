"""HTTP facade over the engine: contract loading, simulation sessions,
queries, FAQ answers, traces and portfolio what-if.

Sessions live in process memory; durability comes from exported traces.
Commands on one session are serialized by a per-session lock, so two
concurrent advances behave like advancing twice.
"""
from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse
from pydantic import BaseModel, Field

from . import simulator
from .bundle import ContractBundle, load_bundle_from_files
from .errors import EngineError, UnknownSession, ValidationFailed
from .evaluator import derive_with_proof, query
from .faq import answer as faq_answer_impl
from .parser import parse_goal
from .portfolio import Scenario, load_portfolio, whatif
from .reference import REFERENCE_ID, build_reference
from .simulator import SimConfig, SimState
from .store import Binding
from .terms import Atom, IntLiteral, StringLiteral, Term

# engine error code -> HTTP status
_STATUS_BY_CODE = {
    "validation_failed": 422,
    "not_an_event": 422,
    "unknown_predicate": 422,
    "unknown_faq": 404,
    "unknown_session": 404,
    "unknown_contract": 404,
    "no_clause_map": 404,
    "terminated": 409,
    "conflicting_effects": 409,
    "non_quiescent": 409,
    "stale_snapshot": 409,
    "override_mismatch": 422,
    "non_ground": 422,
    "not_base_predicate": 422,
    "builtin_domain_error": 422,
    "incompatible_contract": 422,
    "parse_error": 422,
}


class ApiError(Exception):
    def __init__(self, code: str, message: str, detail: object = None):
        self.code = code
        self.message = message
        self.detail = detail


def _term_to_json(term: Term) -> object:
    if isinstance(term, IntLiteral):
        return term.value
    if isinstance(term, StringLiteral):
        return term.value
    return str(term)


def _binding_to_json(binding: Binding) -> dict:
    return {k: _term_to_json(v) for k, v in sorted(binding.items())}


# ----------------------------------------------------------------------------
# Request/response models

class ContractUpload(BaseModel):
    files: dict[str, str]
    contract_id: str | None = None


class ContractCreated(BaseModel):
    contract_id: str
    warnings: list[dict] = Field(default_factory=list)


class SessionRequest(BaseModel):
    contract_id: str
    config: dict


class SessionCreated(BaseModel):
    session_id: str
    contract_id: str
    status: str


class StateResponse(BaseModel):
    status: str
    facts: dict[str, list[list[object]]]
    history_len: int
    session_id: str
    contract_id: str
    events: list[str]
    display_scale: int


class EventRequest(BaseModel):
    event: str


class QueryRequest(BaseModel):
    goal: str
    proofs: bool = False


class WhatIfRequest(BaseModel):
    portfolio_path: str
    scenario: dict
    goal: str
    strict: bool = False


# ----------------------------------------------------------------------------
# Registry

@dataclass
class _Session:
    session_id: str
    contract_id: str
    state: SimState
    lock: threading.Lock = field(default_factory=threading.Lock)


class EngineRegistry:
    def __init__(self) -> None:
        self.contracts: dict[str, ContractBundle] = {}
        self.sessions: dict[str, _Session] = {}
        self._lock = threading.Lock()

    def add_contract(self, contract_id: str, bundle: ContractBundle) -> None:
        with self._lock:
            self.contracts[contract_id] = bundle

    def contract(self, contract_id: str) -> ContractBundle:
        bundle = self.contracts.get(contract_id)
        if bundle is None:
            raise ApiError("unknown_contract", f"no contract {contract_id!r}")
        return bundle

    def session(self, session_id: str) -> _Session:
        session = self.sessions.get(session_id)
        if session is None:
            raise UnknownSession(f"no session {session_id!r}")
        return session


def _state_response(session: _Session) -> StateResponse:
    state = session.state
    facts: dict[str, list[list[object]]] = {}
    for atom in state.store.atoms():
        facts.setdefault(atom.predicate, []).append([_term_to_json(a) for a in atom.args])
    for rows in facts.values():
        rows.sort(key=lambda r: [str(x) for x in r])
    events = sorted(f"{name}/{arity}" for name, arity in state.loaded.program.declared_events)
    return StateResponse(
        status=state.status,
        facts=facts,
        history_len=len(state.history),
        session_id=session.session_id,
        contract_id=session.contract_id,
        events=events,
        display_scale=state.config.display_scale,
    )


def _parse_goal_or_fail(text: str):
    goal, diags = parse_goal(text)
    if goal is None:
        raise ApiError(
            "parse_error", "goal failed to parse", [d.as_dict() for d in diags if d.severity == "error"]
        )
    return goal


def _parse_event_atom(text: str) -> Atom:
    goal = _parse_goal_or_fail(text)
    if len(goal) != 1 or goal[0].negated or goal[0].builtin:
        raise ApiError("parse_error", f"event must be a single positive atom: {text!r}")
    return goal[0].atom


def create_app(preload_reference: bool = True) -> FastAPI:
    app = FastAPI(title="cdlengine", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    registry = EngineRegistry()
    app.state.registry = registry

    if preload_reference:
        ref = build_reference()
        registry.add_contract(REFERENCE_ID, ref.bundle)

    @app.exception_handler(ApiError)
    async def _api_error(request, exc: ApiError):
        status = _STATUS_BY_CODE.get(exc.code, 400)
        return JSONResponse(
            status_code=status,
            content={"code": exc.code, "message": exc.message, "detail": exc.detail},
        )

    @app.exception_handler(EngineError)
    async def _engine_error(request, exc: EngineError):
        status = _STATUS_BY_CODE.get(exc.code, 400)
        return JSONResponse(
            status_code=status,
            content={"code": exc.code, "message": str(exc), "detail": exc.detail},
        )

    @app.post("/contracts", response_model=ContractCreated)
    def load_contract(upload: ContractUpload):
        bundle, diags = load_bundle_from_files(upload.files, label=upload.contract_id or "upload")
        if bundle is None:
            raise ValidationFailed([d for d in diags if d.severity == "error"])
        contract_id = upload.contract_id or f"contract-{uuid.uuid4().hex[:8]}"
        registry.add_contract(contract_id, bundle)
        return ContractCreated(
            contract_id=contract_id,
            warnings=[d.as_dict() for d in diags if d.severity == "warning"],
        )

    @app.get("/contracts/{contract_id}")
    def contract_info(contract_id: str):
        bundle = registry.contract(contract_id)
        clause_map = bundle.loaded.program.clause_map
        return {
            "contract_id": contract_id,
            "events": sorted(
                f"{name}/{arity}" for name, arity in bundle.loaded.program.declared_events
            ),
            "clauses": [
                {"id": e.clause_id, "text": e.text}
                for e in (clause_map.entries if clause_map else ())
            ],
            "faqs": [{"id": f.id, "question": f.question} for f in bundle.faqs],
        }

    @app.post("/sessions", response_model=SessionCreated)
    def start_session(request: SessionRequest):
        bundle = registry.contract(request.contract_id)
        try:
            config = SimConfig.from_dict(request.config)
        except (ValueError, KeyError, TypeError) as exc:
            raise ApiError("bad_config", f"invalid simulation config: {exc}")
        state = simulator.init_simulation(bundle.loaded, config, base_dir=bundle.base_dir)
        session = _Session(f"session-{uuid.uuid4().hex[:12]}", request.contract_id, state)
        registry.sessions[session.session_id] = session
        return SessionCreated(
            session_id=session.session_id,
            contract_id=request.contract_id,
            status=state.status,
        )

    @app.get("/sessions/{session_id}/state", response_model=StateResponse)
    def get_state(session_id: str):
        return _state_response(registry.session(session_id))

    @app.post("/sessions/{session_id}/advance", response_model=StateResponse)
    def advance(session_id: str):
        session = registry.session(session_id)
        with session.lock:
            session.state = simulator.advance(session.state)
        return _state_response(session)

    @app.post("/sessions/{session_id}/events", response_model=StateResponse)
    def send_event(session_id: str, request: EventRequest):
        session = registry.session(session_id)
        atom = _parse_event_atom(request.event)
        with session.lock:
            session.state = simulator.send_event(session.state, atom)
        return _state_response(session)

    @app.post("/sessions/{session_id}/query")
    def run_query(session_id: str, request: QueryRequest):
        session = registry.session(session_id)
        goal = _parse_goal_or_fail(request.goal)
        state = session.state
        if request.proofs:
            answers = derive_with_proof(state.loaded, state.store, goal)
            return {
                "bindings": [_binding_to_json(a.binding) for a in answers],
                "proofs": [[_derivation_to_json(p) for p in a.proofs] for a in answers],
            }
        bindings = query(state.loaded, state.store, goal)
        return {"bindings": [_binding_to_json(b) for b in bindings]}

    @app.get("/sessions/{session_id}/faq")
    def faq_list(session_id: str):
        session = registry.session(session_id)
        bundle = registry.contract(session.contract_id)
        return {
            "faqs": [
                {"id": f.id, "question": f.question, "goal": f.goal_text} for f in bundle.faqs
            ]
        }

    @app.post("/sessions/{session_id}/faq/{faq_id}")
    def faq_answer(session_id: str, faq_id: str):
        session = registry.session(session_id)
        bundle = registry.contract(session.contract_id)
        result = faq_answer_impl(
            bundle.loaded, list(bundle.faqs), faq_id, session.state.store
        )
        return {
            "faq_id": result.faq_id,
            "question": result.question,
            "lines": list(result.lines),
            "bindings": [_binding_to_json(b) for b in result.bindings],
            "clause_links": list(result.clause_links),
            "empty": result.empty,
        }

    @app.get("/sessions/{session_id}/trace")
    def get_trace(session_id: str):
        session = registry.session(session_id)
        trace = simulator.export_trace(session.state)
        return PlainTextResponse(trace.to_json_lines())

    @app.post("/portfolio/whatif")
    def portfolio_whatif(request: WhatIfRequest):
        path = Path(request.portfolio_path)
        if not path.is_dir():
            raise ApiError("unknown_contract", f"portfolio directory {path} not found")
        goal = _parse_goal_or_fail(request.goal)
        try:
            scenario = Scenario.from_dict(request.scenario)
        except ValueError as exc:
            raise ApiError("parse_error", f"invalid scenario: {exc}")
        portfolio = load_portfolio(path)
        report = whatif(portfolio, scenario, goal, strict=request.strict)
        return report.as_dict()

    return app


def _derivation_to_json(node) -> dict:
    from .evaluator import BuiltinLeaf, FactLeaf, NegationLeaf, RuleNode

    if isinstance(node, FactLeaf):
        return {"kind": "fact", "atom": str(node.atom), "source": node.source}
    if isinstance(node, BuiltinLeaf):
        return {"kind": "builtin", "atom": str(node.atom)}
    if isinstance(node, NegationLeaf):
        return {"kind": "negation", "atom": str(node.atom)}
    assert isinstance(node, RuleNode)
    return {
        "kind": "rule",
        "head": str(node.head),
        "clause_id": node.clause_id,
        "children": [_derivation_to_json(c) for c in node.children],
    }


app = create_app()
