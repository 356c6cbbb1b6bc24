"""Computable-contract engine for the CDL rule language."""

from .bundle import ContractBundle, load_bundle_dir, load_bundle_from_files
from .errors import EngineError
from .evaluator import derive_with_proof, evaluate_builtin, query, stratified_model
from .parser import LoadedProgram, check_safety, check_stratification, load_program, parse_goal, parse_program
from .simulator import SimConfig, SimState, advance, init_simulation, send_event
from .store import FactStore
from .terms import Atom, Program, predicate_signature, pretty_print

__version__ = "0.1.0"

__all__ = [
    "Atom",
    "ContractBundle",
    "EngineError",
    "FactStore",
    "LoadedProgram",
    "Program",
    "SimConfig",
    "SimState",
    "advance",
    "check_safety",
    "check_stratification",
    "derive_with_proof",
    "evaluate_builtin",
    "init_simulation",
    "load_bundle_dir",
    "load_bundle_from_files",
    "load_program",
    "parse_goal",
    "parse_program",
    "predicate_signature",
    "pretty_print",
    "query",
    "send_event",
    "stratified_model",
]
