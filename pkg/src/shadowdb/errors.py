"""Exception taxonomy.

Every domain error carries a stable ``code`` so the CLI can map it 1:1 to a
machine-readable diagnostic.
"""

from __future__ import annotations


class ShadowError(Exception):
    code = "E_SHADOW"

    def __init__(self, message: str = "", **details):
        super().__init__(message or self.code)
        self.message = message or self.code
        self.details = details

    def to_dict(self) -> dict:
        out = {"code": self.code, "message": self.message}
        if self.details:
            out["details"] = self.details
        return out


class NotFound(ShadowError, KeyError):
    code = "E_NOT_FOUND"

    def __str__(self) -> str:  # KeyError would repr() the message
        return self.message


class Conflict(ShadowError):
    code = "E_CONFLICT"


class AlreadyArchived(ShadowError):
    code = "E_ALREADY_ARCHIVED"


class NothingToRestore(ShadowError):
    code = "E_NOTHING_TO_RESTORE"


class UntaggedShadow(ShadowError):
    """A transaction tried to commit a shadow without any W-tag."""

    code = "E_UNTAGGED_SHADOW"


class RuleViolation(ShadowError):
    code = "E_RULE_VIOLATION"

    def __init__(self, rule: str, message: str = "", **details):
        super().__init__(message or f"violates {rule}", rule=rule, **details)
        self.rule = rule


class FormatRejected(ShadowError, ValueError):
    code = "E_FORMAT_REJECTED"


class UseEquivalenceLedger(ShadowError):
    """Inclusion across perspectives must be declared as an E-tag."""

    code = "E_USE_EQUIVALENCE_LEDGER"


class NoConverter(ShadowError):
    code = "E_NO_CONVERTER"


class EvidenceRequired(ShadowError):
    code = "E_EVIDENCE_REQUIRED"


class SelfEquivalence(ShadowError):
    code = "E_SELF_EQUIVALENCE"


class NotSameShadow(ShadowError):
    code = "E_NOT_SAME_SHADOW"


class AlreadyRevoked(ShadowError):
    code = "E_ALREADY_REVOKED"


class RuleUnknown(ShadowError):
    code = "E_RULE_UNKNOWN"


class UnregisteredProcess(ShadowError):
    code = "E_UNREGISTERED_PROCESS"


class NoTransaction(ShadowError):
    code = "E_NO_TRANSACTION"


class MappingGap(ShadowError):
    code = "E_MAPPING_GAP"


class TemplateRequired(ShadowError):
    code = "E_TEMPLATE_REQUIRED"


class QueryTypeError(ShadowError, TypeError):
    code = "E_TYPE"


class UnknownKey(ShadowError):
    code = "E_UNKNOWN_KEY"


class ResourceLimit(ShadowError):
    """A traversal exceeded the configured safety cap.

    Distinct from a negative answer: the question was not decided.
    """

    code = "E_RESOURCE_LIMIT"


class PurgeNotConfirmed(ShadowError):
    code = "E_PURGE_NOT_CONFIRMED"


class Diagnostic(ShadowError, SyntaxError):
    """Query syntax error with position and the set of expected tokens."""

    code = "E_SYNTAX"

    def __init__(self, message: str, line: int, column: int, token_index: int,
                 expected: tuple[str, ...] = ()):
        ShadowError.__init__(self, message, line=line, column=column,
                             token_index=token_index, expected=list(expected))
        self.line = line
        self.column = column
        self.token_index = token_index
        self.expected = tuple(expected)

    def __str__(self) -> str:
        exp = f" (expected one of: {', '.join(self.expected)})" if self.expected else ""
        return f"{self.line}:{self.column}: {self.message}{exp}"


class UnknownName(ShadowError, NameError):
    code = "E_UNKNOWN_NAME"

    def __init__(self, name: str, near: list[str]):
        hint = f"; did you mean {', '.join(near)}?" if near else ""
        super().__init__(f"unknown name {name!r}{hint}", name=name, near=near)
        self.name = name
        self.near = near
