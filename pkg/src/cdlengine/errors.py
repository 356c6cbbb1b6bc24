"""Engine error taxonomy.

Every error carries a stable symbolic ``code`` that the HTTP layer maps
one-to-one onto API error codes, so nothing is lost between the engine
and a client.
"""
from __future__ import annotations


class EngineError(Exception):
    code = "engine_error"

    def __init__(self, message: str, detail: object = None):
        super().__init__(message)
        self.detail = detail


class NonGround(EngineError):
    code = "non_ground"


class NotBasePredicate(EngineError):
    code = "not_base_predicate"


class UnknownPredicate(EngineError):
    code = "unknown_predicate"


class StaleSnapshot(EngineError):
    code = "stale_snapshot"


class BuiltinDomainError(EngineError):
    code = "builtin_domain_error"

    def __init__(self, message: str, atom=None):
        super().__init__(message, detail=str(atom) if atom is not None else None)
        self.atom = atom


class ResourceLimit(EngineError):
    code = "resource_limit"


class ConflictingEffects(EngineError):
    code = "conflicting_effects"

    def __init__(self, atom, rule_ids: tuple[str, ...]):
        super().__init__(
            f"round both adds and retracts {atom} (rules: {', '.join(rule_ids)})",
            detail={"atom": str(atom), "rules": list(rule_ids)},
        )
        self.atom = atom
        self.rule_ids = rule_ids


class NotAnEvent(EngineError):
    code = "not_an_event"


class NonQuiescent(EngineError):
    code = "non_quiescent"

    def __init__(self, max_rounds: int):
        super().__init__(f"rule set still firing after {max_rounds} rounds")
        self.max_rounds = max_rounds


class Terminated(EngineError):
    code = "terminated"


class IncompatibleContract(EngineError):
    code = "incompatible_contract"


class AmbiguousStatus(EngineError):
    code = "ambiguous_status"

    def __init__(self, holding: list[str]):
        n = len(holding)
        super().__init__(
            f"{n} status views hold ({', '.join(holding) or 'none'}), expected exactly one",
            detail=holding,
        )
        self.holding = holding


class ReplayDivergence(EngineError):
    code = "replay_divergence"

    def __init__(self, round_index: int, message: str = ""):
        super().__init__(message or f"replay diverges at round {round_index}")
        self.round_index = round_index


class UnknownFaq(EngineError):
    code = "unknown_faq"


class NoClauseMap(EngineError):
    code = "no_clause_map"


class OverrideMismatch(EngineError):
    code = "override_mismatch"


class UnknownSession(EngineError):
    code = "unknown_session"


class ValidationFailed(EngineError):
    code = "validation_failed"

    def __init__(self, diagnostics):
        super().__init__(
            "contract failed static checks",
            detail=[d.as_dict() for d in diagnostics],
        )
        self.diagnostics = diagnostics
