"""
Tests for the per-case attacks and the attack dispatcher.
"""

import numpy as np
import pytest

from trivium_hard_fault.attack_engine import (
    ATTACK_KEYSTREAM_BITS,
    CASE2_PERIOD,
    CASE3_PERIOD,
    CASE2_VARIABLES,
    CASE3_VARIABLES,
    ASequence,
    BSequence,
    SequenceContext,
    a_sequence_from_run,
    attack_case1,
    b_sequence_from_run,
    build_case1_system,
    build_case2_system,
    build_case3_system,
    case2_ground_truth,
    case3_ground_truth,
    case3_partial_key,
    run_attack,
    solve_case2,
    solve_case3,
    structural_report,
)
from trivium_hard_fault.case_detector import FaultedMachine
from trivium_hard_fault.exceptions import (
    AttackFailureError,
    DomainError,
    InvalidInputError,
    WrongCaseError,
)
from trivium_hard_fault.fault_model import CaseLabel, FaultMask
from trivium_hard_fault.gf2_algebra import Gf2System
from trivium_hard_fault.trivium_core import (
    Iv,
    Key,
    MachineVariant,
    initialize,
    keystream,
    state_trajectory,
)


def _faulted_keystream(key, mask, n):
    return keystream(initialize(key, Iv.zero(), mask), mask, n)


def _a(state):
    return state.bit(66) ^ (state.bit(91) & state.bit(92)) ^ state.bit(93)


def _b(state):
    return state.bit(162) ^ (state.bit(175) & state.bit(176)) ^ state.bit(177)


@pytest.mark.unit
class TestSequences:
    """a- and b-sequences read from faulted runs."""

    def test_case2_a_sequence_is_periodic(self, random_key):
        """From a28 on, the Case 2 a-sequence repeats every 69 steps."""
        mask = FaultMask.parse("200")
        a = a_sequence_from_run(random_key, mask, SequenceContext.CASE2)
        states = state_trajectory(random_key, Iv.zero(), mask, 250)
        for t in range(27, 250):
            assert a.value(t + 1) == _a(states[t])
        assert a.value(28) == a.value(97) == a.value(28 - 69)

    def test_case3_b_sequence_is_periodic(self, random_key):
        """From b99 on, the Case 3 b-sequence repeats every 78 steps."""
        mask = FaultMask.parse("40")
        b = b_sequence_from_run(random_key, mask)
        states = state_trajectory(random_key, Iv.zero(), mask, 330)
        for t in range(98, 330):
            assert b.value(t + 1) == _b(states[t])

    def test_case3_a_sequence_vanishes_beyond_92(self):
        """Case 3 terms outside a1..a92 are zero."""
        a = ASequence(SequenceContext.CASE3, (1,) * 92)
        assert a.value(92) == 1
        assert a.value(93) == 0
        assert a.value(0) == 0

    @pytest.mark.parametrize(
        "build",
        [
            lambda: ASequence(SequenceContext.CASE2, (0,) * 92),
            lambda: ASequence.from_case2_window((0,) * 68),
            lambda: BSequence((0,) * 78),
            lambda: BSequence.from_window((0,) * 102),
        ],
    )
    def test_lengths_are_checked(self, build):
        """Wrong sequence lengths raise InvalidInputError."""
        with pytest.raises(InvalidInputError):
            build()


@pytest.mark.unit
class TestCase1:
    """Register-2 faults before the AND taps."""

    def test_system_shape(self, random_key):
        """69 equations over the 69-bit register-1 window."""
        ks = _faulted_keystream(random_key, FaultMask.parse("100"), 69)
        system = build_case1_system(ks)
        assert (system.n_rows, system.n_variables) == (69, 69)

    @pytest.mark.parametrize("position", [94, 100, 130, 162])
    def test_attack_is_sound(self, random_key, position):
        """Recovered bits and relations hold for the true key."""
        ks = _faulted_keystream(random_key, FaultMask.of([position]), 138)
        knowledge = attack_case1(ks)
        assert knowledge.is_consistent_with(random_key)
        assert not knowledge.is_empty
        assert knowledge.diagnostics["rank_observed"] == 66
        assert knowledge.diagnostics["candidates_before_filter"] == 8

    def test_short_keystream(self, random_key):
        """Fewer than 69 bits are refused."""
        ks = _faulted_keystream(random_key, FaultMask.parse("100"), 68)
        with pytest.raises(InvalidInputError):
            attack_case1(ks)

    def test_not_periodic(self, random_key):
        """A clean keystream is not a Case 1 run."""
        ks = _faulted_keystream(random_key, FaultMask(), 138)
        with pytest.raises(WrongCaseError):
            attack_case1(ks)


@pytest.mark.unit
class TestCase2:
    """Register-3 faults at or below position 243."""

    @pytest.mark.parametrize("spec", ["178", "200", "243", "190,230"])
    def test_ground_truth_satisfies_system(self, random_key, spec):
        """The true time-27 window solves the keystream system."""
        mask = FaultMask.parse(spec)
        system = build_case2_system(_faulted_keystream(random_key, mask, CASE2_PERIOD))
        assert system.n_variables == len(CASE2_VARIABLES) == 216
        assert system.satisfied_by(case2_ground_truth(random_key, mask))

    def test_clean_keystream_is_rejected(self, random_key):
        """Without the 3588 period the attack refuses to start."""
        ks = _faulted_keystream(random_key, FaultMask(), 2 * CASE2_PERIOD)
        with pytest.raises(WrongCaseError):
            solve_case2(ks)

    @pytest.mark.slow
    def test_never_returns_a_wrong_key(self, random_key):
        """A returned key is the true key; failures name the filter stage."""
        ks = _faulted_keystream(random_key, FaultMask.parse("220"), 2 * CASE2_PERIOD)
        try:
            knowledge = solve_case2(ks)
        except AttackFailureError as exc:
            assert exc.stage == "nonlinear-filter"
            return
        assert knowledge.full_key() == random_key


@pytest.mark.unit
class TestCase3:
    """Register-1 faults before position 67."""

    @pytest.mark.parametrize("spec", ["1", "40", "66", "10,60"])
    def test_ground_truth_satisfies_system(self, random_key, spec):
        """The true time-98 window solves the keystream system."""
        mask = FaultMask.parse(spec)
        system = build_case3_system(_faulted_keystream(random_key, mask, CASE3_PERIOD))
        assert system.n_variables == len(CASE3_VARIABLES) == 243
        assert system.satisfied_by(case3_ground_truth(random_key, mask))

    @pytest.mark.parametrize("seed", range(8))
    def test_partial_key_is_sound(self, seed):
        """Knowledge read from the true a-sequence never contradicts the key."""
        rng = np.random.default_rng(seed)
        key = Key.random(rng)
        mask = FaultMask.of([int(rng.integers(1, 67))])
        a = a_sequence_from_run(key, mask, SequenceContext.CASE3)
        assert case3_partial_key(a).is_consistent_with(key)

    def test_prefix_trigger(self):
        """A one at a5 certifies k66..k62."""
        values = [0] * 92
        values[4] = 1
        knowledge = case3_partial_key(ASequence(SequenceContext.CASE3, values))
        assert knowledge.known == {66: 0, 65: 0, 64: 0, 63: 0, 62: 1}
        assert knowledge.diagnostics["prefix_trigger"] == 4
        assert not knowledge.alternatives

    def test_tail_trigger(self):
        """A one at a81 yields twelve bits, one relation and two alternatives."""
        values = [0] * 92
        values[80] = 1
        knowledge = case3_partial_key(ASequence(SequenceContext.CASE3, values))
        assert sorted(knowledge.known) == list(range(55, 67))
        assert len(knowledge.relations) == 1
        names = [name for name, _ in knowledge.alternatives]
        assert names == ["position 93 live", "position 93 faulted"]
        assert [len(group) for _, group in knowledge.alternatives] == [55, 55]

    def test_no_trigger(self):
        """An all-zero a-sequence certifies nothing."""
        knowledge = case3_partial_key(ASequence(SequenceContext.CASE3, (0,) * 92))
        assert knowledge.is_empty
        assert knowledge.diagnostics["trigger"] == "none"

    def test_case2_sequence_rejected(self):
        """Partial key recovery needs a Case 3 a-sequence."""
        a = ASequence.from_case2_window((0,) * 69)
        with pytest.raises(InvalidInputError):
            case3_partial_key(a)

    @pytest.mark.slow
    def test_solve_recovers_a_sequence(self, random_key):
        """A completed attack returns the true a-sequence."""
        mask = FaultMask.parse("30")
        ks = _faulted_keystream(random_key, mask, 2 * CASE3_PERIOD)
        try:
            a, knowledge = solve_case3(ks)
        except AttackFailureError as exc:
            assert exc.stage == "nonlinear-filter"
            return
        assert a == a_sequence_from_run(random_key, mask, SequenceContext.CASE3)
        assert knowledge.is_consistent_with(random_key)


@pytest.mark.unit
class TestGoldenSystems:
    """Case 2 and Case 3 systems frozen as text dumps."""

    @pytest.mark.parametrize(
        "mask,builder,period,name",
        [
            ("200", build_case2_system, CASE2_PERIOD, "case2_system.dump.gz"),
            ("40", build_case3_system, CASE3_PERIOD, "case3_system.dump.gz"),
        ],
    )
    def test_system_matches_dump(self, golden_text, mask, builder, period, name):
        """The dump for a fixed key and mask is byte-identical to the file."""
        key = Key.from_hex("0123456789abcdef0123")
        ks = _faulted_keystream(key, FaultMask.parse(mask), period)
        system = builder(ks)
        expected = golden_text(name)
        assert system.dump() == expected
        loaded = Gf2System.from_dump(expected)
        assert loaded.names == system.names
        assert np.array_equal(loaded.rows, system.rows)
        assert np.array_equal(loaded.constants, system.constants)


@pytest.mark.unit
class TestStructuralReport:
    """Degraded-machine summaries for Cases 4..6."""

    def test_case4(self):
        """Case 4 drops 163..177 and stays reversible."""
        report = structural_report(CaseLabel.CASE4)
        assert report.variant is MachineVariant.CASE4
        assert report.width == 273
        assert report.reversible
        assert report.omitted == tuple(range(163, 178))
        assert report.iv_witness == ((70,),)

    def test_ambiguous_label_reports_case5(self):
        """Case5or6 is described as Case 5."""
        report = structural_report(CaseLabel.CASE5_OR_6)
        assert report.case is CaseLabel.CASE5
        assert report.degree_profile is not None

    def test_case6_is_irreversible(self):
        """Case 6 only omits position 177 and cannot run backwards."""
        report = structural_report(CaseLabel.CASE6)
        assert not report.reversible
        assert report.width == 287

    @pytest.mark.parametrize("case", [CaseLabel.CASE1, CaseLabel.CASE7])
    def test_other_cases(self, case):
        """Only Cases 4..6 have a structural report."""
        with pytest.raises(DomainError):
            structural_report(case)


@pytest.mark.unit
class TestRunAttack:
    """Dispatch and scoring."""

    def test_case1(self, random_key):
        """Case 1 reads 138 bits and succeeds."""
        machine = FaultedMachine(random_key, FaultMask.parse("120"))
        outcome = run_attack(machine, CaseLabel.CASE1)
        assert outcome.keystream_bits == ATTACK_KEYSTREAM_BITS[CaseLabel.CASE1]
        assert outcome.failure is None
        assert outcome.succeeded(random_key) is True

    def test_wrong_case_is_captured(self, random_key):
        """Attack errors end up in the outcome."""
        machine = FaultedMachine(random_key, FaultMask())
        outcome = run_attack(machine, CaseLabel.CASE1)
        assert isinstance(outcome.failure, WrongCaseError)
        assert outcome.succeeded(random_key) is False

    def test_structural_case(self, random_key):
        """Structural cases need no keystream."""
        machine = FaultedMachine(random_key, FaultMask.parse("168"))
        outcome = run_attack(machine, CaseLabel.CASE4)
        assert outcome.structure is not None
        assert outcome.keystream_bits == 0
        assert outcome.succeeded(random_key) is True

    def test_case7_has_no_attack(self, random_key):
        """Case 7 is not attempted and not scored."""
        outcome = run_attack(FaultedMachine(random_key, FaultMask()), CaseLabel.CASE7)
        assert not outcome.attempted
        assert outcome.succeeded(random_key) is None
