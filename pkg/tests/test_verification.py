"""
Tests for the verification check catalog.
"""

import pytest

from trivium_hard_fault import verification
from trivium_hard_fault.exceptions import InvalidInputError, UnknownCheckError
from trivium_hard_fault.fault_model import CaseLabel
from trivium_hard_fault.gf2_algebra import certify_degree_at_least
from trivium_hard_fault.verification import (
    CHECKS,
    list_checks,
    run_check,
    trial_check,
)

CATALOG = (
    [f"lemma{i}" for i in range(1, 18)]
    + ["prop1", "prop2-period", "prop2-rank", "prop2-attack"]
    + ["prop3-period", "prop3-rank", "prop3-attack", "prop4", "prop5"]
    + [f"prop{i}" for i in range(6, 11)]
    + ["features", "probabilities", "propagation"]
)

FAST_CHECKS = [
    "lemma2",
    "lemma3",
    "prop1",
    "lemma4",
    "lemma5",
    "lemma6",
    "lemma7",
    "lemma9",
    "lemma10",
    "lemma14",
    "prop4",
    "prop5",
    "prop6",
    "lemma15",
    "lemma16",
    "lemma17",
    "prop8",
    "prop10",
    "propagation",
]

SLOW_CHECKS = [
    "lemma8",
    "prop2-period",
    "prop2-rank",
    "lemma11",
    "lemma12",
    "lemma13",
    "prop3-period",
    "prop3-rank",
    "features",
]


@pytest.mark.unit
class TestCatalog:
    """Registry contents and dispatch errors."""

    def test_catalog_is_complete(self):
        """Every documented id is registered exactly once."""
        assert sorted(CHECKS) == sorted(CATALOG)
        assert [c.check_id for c in list_checks()] == list(CHECKS)

    def test_symbolic_flags(self):
        """Only the degree-profile checks are symbolic."""
        symbolic = {c.check_id for c in list_checks() if c.symbolic}
        assert symbolic == {"lemma1", "prop7", "prop9"}

    def test_unknown_id(self):
        """Unknown ids raise UnknownCheckError."""
        with pytest.raises(UnknownCheckError):
            run_check("lemma99", trials=1, seed=0)

    def test_needs_a_trial(self):
        """Zero trials are refused."""
        with pytest.raises(InvalidInputError):
            run_check("lemma2", trials=0, seed=0)

    def test_first_counterexample_is_reported(self, monkeypatch):
        """A failing trial stops the check and names key and mask."""
        monkeypatch.setattr(verification, "CHECKS", dict(CHECKS))

        @trial_check("fails-second", "fails on the second trial", case=CaseLabel.CASE1)
        def _body(key, mask, details):
            details["seen"] = details.get("seen", 0) + 1
            return "boom" if details["seen"] == 2 else None

        report = run_check("fails-second", trials=5, seed=0)
        assert not report.passed
        assert report.trials == 2
        assert report.counterexample.startswith("key=")
        assert report.counterexample.endswith(": boom")
        assert "fails-second" not in CHECKS


@pytest.mark.unit
class TestFastChecks:
    """Cheap simulation checks pass on a handful of trials."""

    @pytest.mark.parametrize("check_id", FAST_CHECKS)
    def test_passes(self, check_id):
        """The property holds for every sampled key and mask."""
        report = run_check(check_id, trials=3, seed=2024)
        assert report.passed, report.counterexample
        assert report.trials == 3

    def test_seeded(self):
        """The same seed gives the same report."""
        assert run_check("lemma16", trials=4, seed=9) == run_check(
            "lemma16", trials=4, seed=9
        )

    def test_probabilities(self):
        """Exact fractions and the seeded estimate agree."""
        report = run_check("probabilities", trials=1, seed=5)
        assert report.passed, report.counterexample


@pytest.mark.unit
@pytest.mark.slow
class TestSlowChecks:
    """Long-keystream checks of Cases 2 and 3."""

    @pytest.mark.parametrize("check_id", SLOW_CHECKS)
    def test_passes(self, check_id):
        """The property holds for every sampled key and mask."""
        report = run_check(check_id, trials=2, seed=77)
        assert report.passed, report.counterexample


@pytest.mark.unit
@pytest.mark.slow
@pytest.mark.symbolic
class TestSymbolicChecks:
    """Degree profiles computed symbolically."""

    @pytest.mark.parametrize("check_id", ["lemma1", "prop7", "prop9"])
    def test_passes(self, check_id):
        """Symbolic checks run once regardless of the trial budget."""
        report = run_check(check_id, trials=5, seed=0)
        assert report.passed, report.counterexample
        assert report.trials == 1


@pytest.mark.unit
class TestDegreeWitness:
    """Cube-sum cross-check of the clean degree profile."""

    def test_first_quadratic_bit_has_witness(self, rng):
        """z66 of the simulator has a nonzero second derivative."""
        assert verification._quadratic_witness_problem(rng) is None

    def test_linear_bit_has_no_witness(self, rng):
        """z65 is linear, so no order-2 subcube sums to 1."""
        evaluate = verification._clean_output_bit(65)
        assert not certify_degree_at_least(
            evaluate, verification.QUADRATIC_WITNESS_VARIABLES, 288, 2, rng, 16
        )
