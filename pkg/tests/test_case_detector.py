"""
Tests for the keystream oracle and case detection.
"""

import pytest

from trivium_hard_fault.case_detector import (
    FEATURE_PERIODS,
    FaultedMachine,
    check_feature,
    detect_case,
)
from trivium_hard_fault.exceptions import InvalidInputError
from trivium_hard_fault.fault_model import CaseLabel, FaultMask
from trivium_hard_fault.trivium_core import Iv


@pytest.mark.unit
class TestFaultedMachine:
    """Oracle caching and keystream accounting."""

    def test_matches_reference(self, random_key, zero_iv, reference_keystream):
        """Observed bits are the faulted keystream."""
        machine = FaultedMachine(random_key, FaultMask.parse("120"))
        expected = reference_keystream(random_key.bits, zero_iv.bits, 100, [120])
        assert list(machine.observe(zero_iv, 100).bits) == expected

    def test_extension_keeps_prefix(self, random_key, zero_iv):
        """A longer request extends the cached stream."""
        machine = FaultedMachine(random_key, FaultMask())
        short = machine.observe(zero_iv, 40)
        longer = machine.observe(zero_iv, 90)
        assert longer.bits[:40] == short.bits
        assert machine.bits_observed == 90

    def test_accounting_per_iv(self, random_key, zero_iv):
        """Distinct IVs add up; repeated prefixes do not."""
        machine = FaultedMachine(random_key, FaultMask())
        machine.observe(zero_iv, 50)
        machine.observe(zero_iv, 20)
        machine.observe(zero_iv.with_bit(3, 1), 30)
        assert machine.bits_observed == 80
        machine.reset_accounting()
        assert machine.bits_observed == 0

    def test_negative_request(self, random_key, zero_iv):
        """Negative lengths raise InvalidInputError."""
        with pytest.raises(InvalidInputError):
            FaultedMachine(random_key, FaultMask()).observe(zero_iv, -1)

    def test_unblind(self, random_key):
        """Ground truth is recoverable for scoring."""
        mask = FaultMask.parse("5")
        assert FaultedMachine(random_key, mask).unblind() == (random_key, mask)


@pytest.mark.unit
class TestFeatures:
    """Single keystream features."""

    def test_case1_period(self, random_key):
        """Feature 1 holds for a fault in 94..162."""
        machine = FaultedMachine(random_key, FaultMask.parse("140"))
        assert check_feature(machine, 1)
        assert machine.bits_observed == 2 * FEATURE_PERIODS[1]

    def test_clean_machine_has_no_features(self, random_key):
        """Unfaulted Trivium shows none of the six features."""
        machine = FaultedMachine(random_key, FaultMask())
        assert not any(check_feature(machine, which) for which in range(1, 7))

    def test_iv70_flip_invisible_in_case4(self, random_key):
        """Feature 4 holds when position 170 is stuck."""
        assert check_feature(FaultedMachine(random_key, FaultMask.parse("170")), 4)

    @pytest.mark.parametrize("which", [0, 7])
    def test_unknown_feature(self, random_key, which):
        """Only Features 1..6 exist."""
        with pytest.raises(InvalidInputError):
            check_feature(FaultedMachine(random_key, FaultMask()), which)


@pytest.mark.unit
class TestDetectCase:
    """End-to-end detection from keystream alone."""

    @pytest.mark.parametrize(
        "mask,expected",
        [
            ("100", CaseLabel.CASE1),
            ("94,150", CaseLabel.CASE1),
            ("200", CaseLabel.CASE2),
            ("50", CaseLabel.CASE3),
            ("165", CaseLabel.CASE4),
            ("177", CaseLabel.CASE5_OR_6),
            ("80", CaseLabel.CASE7),
            ("none", CaseLabel.CASE7),
        ],
    )
    def test_detected_label(self, random_key, machine_for, mask, expected):
        """Each fault lands in its detector case."""
        assert detect_case(machine_for(random_key, mask)).label is expected

    def test_first_feature_short_circuits(self, random_key, machine_for):
        """Case 1 is decided after Feature 1 alone."""
        result = detect_case(machine_for(random_key, "100"))
        assert result.features == (True, None, None, None, None, None)
        assert result.keystream_bits_consumed == 138
        assert not result.ambiguous

    def test_case7_evaluates_five_features(self, random_key, machine_for):
        """Feature 6 is only read after Feature 5 holds."""
        result = detect_case(machine_for(random_key, "none"))
        assert result.features == (False, False, False, False, False, None)

    def test_resolve_case5(self, random_key, machine_for):
        """The ambiguous pair resolves to Case 5 when asked."""
        result = detect_case(machine_for(random_key, "177"), resolve_case5=True)
        assert result.label is CaseLabel.CASE5
        assert result.ambiguous

    def test_detector_never_reads_the_mask(self, random_key):
        """Detection only goes through observe()."""

        class Spy(FaultedMachine):
            def unblind(self):
                raise AssertionError("detector looked at the ground truth")

        result = detect_case(Spy(random_key, FaultMask.parse("100")))
        assert result.label is CaseLabel.CASE1


@pytest.mark.unit
def test_zero_iv_is_the_reference_run(random_key):
    """Period features are measured under the all-zero IV."""
    machine = FaultedMachine(random_key, FaultMask.parse("100"))
    check_feature(machine, 1)
    prefix = machine.observe(Iv.zero(), 10).bits
    assert prefix == machine.observe(Iv.zero(), 138).bits[:10]
    assert machine.bits_observed == 138
