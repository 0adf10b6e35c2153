from typing import Iterable, List, Optional, Tuple


class SNPError(Exception):
    """Base class for every error raised by the snp package."""


class DocumentSyntaxError(SNPError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.message = message
        self.line = line
        self.column = column
        location = f"line {line}, column {column}: " if line else ""
        super().__init__(f"{location}{message}")


class GuardSyntaxError(SNPError):
    def __init__(self, message: str, position: int = 0):
        self.message = message
        self.position = position
        super().__init__(f"{message} (at offset {position})")


class SystemStructureError(SNPError):
    """Static description is malformed: unknown ids, self-loops, c < b, ..."""


class NondeterminismError(SNPError):
    def __init__(self, neuron: str, rules: Iterable[int]):
        self.neuron = neuron
        self.rules = list(rules)
        super().__init__(f"neuron {neuron} has simultaneously enabled rules {self.rules}")


class UnclassifiableTopologyError(SNPError):
    def __init__(self, message: str, synapses: Iterable[Tuple[str, str]] = ()):
        self.synapses: List[Tuple[str, str]] = list(synapses)
        listed = ", ".join(f"{a}->{b}" for a, b in self.synapses)
        super().__init__(f"{message}: {listed}" if listed else message)


class OutOfScopeError(SNPError):
    """Delay pattern the rewrites do not cover (d1 < d2, unequal split children, ...)."""


class UnanchoredConstructError(OutOfScopeError):
    """Construct has no entry a reservoir can be anchored at (no convertible feeder, no single synapse in)."""


class RestrictionError(SNPError):
    def __init__(self, violations: Optional[list] = None):
        self.violations = violations or []
        kinds = ", ".join(sorted({v.kind.value for v in self.violations}))
        super().__init__(f"system violates the restricted class: {kinds}")


class MatrixFormError(SNPError):
    """Matrix representation requested for a system with delayed rules."""


class HorizonError(SNPError):
    pass


class DelayedCandidateError(SNPError):
    pass


class LedgerError(SNPError):
    pass


class RewriteVerificationError(SNPError):
    """Rewritten system does not reproduce the offsets and factors composed from its rewrites."""

    def __init__(self, message: str, verdict=None):
        self.verdict = verdict
        super().__init__(message)
