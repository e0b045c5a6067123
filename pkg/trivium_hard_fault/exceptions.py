"""
Exception hierarchy for the Trivium hard-fault workbench.

Every error raised by the package derives from TriviumHardFaultError, so
callers (the CLI in particular) can map whole families of failures onto exit
codes without matching individual messages.
"""

from typing import Any, Dict, List, Optional


class TriviumHardFaultError(Exception):
    """
    Base exception for workbench errors.

    Attributes:
        message: Human readable description of the failure.
        details: Structured context (stage names, counts, positions) suitable
                 for inclusion in JSON reports.
    """

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None) -> None:
        """
        Initialize the TriviumHardFaultError.

        Args:
            message: A descriptive error message explaining what went wrong.
            details: Optional structured context about the failure.
        """
        super().__init__(message)
        self.message = message
        self.details: Dict[str, Any] = dict(details or {})

    def __str__(self) -> str:
        name = type(self).__name__
        if self.details:
            context = ", ".join(f"{k}={v}" for k, v in sorted(self.details.items()))
            return f"{name}: {self.message} ({context})"
        return f"{name}: {self.message}"


class InvalidInputError(TriviumHardFaultError):
    """Malformed key, IV, mask, injection model string or parameter."""


class UnknownCheckError(InvalidInputError):
    """Verification check id not present in the catalog."""


class ClassificationError(TriviumHardFaultError):
    """Fault mask cannot be assigned a case (e.g. the empty mask)."""


class DomainError(TriviumHardFaultError):
    """Operation requested outside its validity range."""


class IrreversibleRenewalError(DomainError):
    """Inverse renewal requested for a machine whose renewal is not invertible."""


class InconsistentSystemError(TriviumHardFaultError):
    """Linear system over GF(2) has no solution."""


class SolutionOverflowError(TriviumHardFaultError):
    """Solution space or search budget exceeds the configured cap."""


class ResourceCapError(TriviumHardFaultError):
    """Symbolic computation exceeded the monomial cap."""

    def __init__(
        self,
        message: str,
        step: Optional[int] = None,
        details: Optional[Dict[str, Any]] = None,
    ) -> None:
        merged = dict(details or {})
        if step is not None:
            merged["step"] = step
        super().__init__(message, merged)
        self.step = step


class WrongCaseError(TriviumHardFaultError):
    """Keystream does not exhibit the structure required by the attack."""


class AttackFailureError(TriviumHardFaultError):
    """
    Attack stage yielded no consistent assignment, or more than one.

    Attributes:
        stage: Name of the pipeline stage that failed.
        survivors: Candidate assignments still alive when the stage failed.
    """

    def __init__(
        self,
        message: str,
        stage: str,
        survivors: Optional[List[Any]] = None,
        details: Optional[Dict[str, Any]] = None,
    ) -> None:
        self.stage = stage
        self.survivors: List[Any] = list(survivors or [])
        merged = dict(details or {})
        merged["stage"] = stage
        merged["survivors"] = len(self.survivors)
        super().__init__(message, merged)
