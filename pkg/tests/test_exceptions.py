from typing import Any

import pytest

from trivium_hard_fault.exceptions import (
    AttackFailureError,
    ClassificationError,
    DomainError,
    InconsistentSystemError,
    InvalidInputError,
    IrreversibleRenewalError,
    ResourceCapError,
    SolutionOverflowError,
    TriviumHardFaultError,
    UnknownCheckError,
    WrongCaseError,
)


@pytest.mark.parametrize(
    "exc,parent",
    [
        (InvalidInputError, TriviumHardFaultError),
        (UnknownCheckError, InvalidInputError),
        (ClassificationError, TriviumHardFaultError),
        (DomainError, TriviumHardFaultError),
        (IrreversibleRenewalError, DomainError),
        (InconsistentSystemError, TriviumHardFaultError),
        (SolutionOverflowError, TriviumHardFaultError),
        (ResourceCapError, TriviumHardFaultError),
        (WrongCaseError, TriviumHardFaultError),
        (AttackFailureError, TriviumHardFaultError),
    ],
)
def test_hierarchy(exc: Any, parent: Any) -> None:
    assert issubclass(exc, parent)


def test_details_in_message() -> None:
    err = DomainError("bad time", {"time": 3, "m": 1})
    assert err.message == "bad time"
    assert str(err) == "DomainError: bad time (m=1, time=3)"


def test_plain_message() -> None:
    assert str(InvalidInputError("nope")) == "InvalidInputError: nope"


def test_details_are_copied() -> None:
    context = {"rows": 4}
    err = InconsistentSystemError("no solution", context)
    context["rows"] = 5
    assert err.details == {"rows": 4}


def test_resource_cap_step() -> None:
    err = ResourceCapError("cap", step=120, details={"variant": "clean"})
    assert err.step == 120
    assert err.details == {"variant": "clean", "step": 120}
    assert ResourceCapError("cap").step is None


def test_attack_failure_survivors() -> None:
    err = AttackFailureError("two left", stage="nonlinear-filter", survivors=[1, 2])
    assert err.stage == "nonlinear-filter"
    assert err.survivors == [1, 2]
    assert err.details["survivors"] == 2
    assert err.details["stage"] == "nonlinear-filter"
