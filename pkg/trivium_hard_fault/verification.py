"""
Catalog of executable checks for the structural facts the attacks rely on.

Every check draws random keys (and masks of the relevant case) from a seeded
generator, simulates the faulted machine directly and compares the outcome
with the closed form the attacks assume. A failing check returns the first
counterexample; nothing is raised for a failed property.

Key Features:
    - Register and keystream facts for Cases 1..3 (periods, shifted windows,
      changed states, long-range recurrences)
    - Degraded-machine equivalences and IV witnesses for Cases 4..6
    - Symbolic degree profiles of the clean and degraded machines
    - Detector accuracy and the exact single-fault case probabilities

Usage:
    report = run_check("lemma9", trials=20, seed=7)
    assert report.passed, report.counterexample
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .attack_engine import (
    CASE1_PERIOD,
    CASE2_PERIOD,
    CASE3_PERIOD,
    DEGREE_PROFILES,
    EXPECTED_RANKS,
    ASequence,
    BSequence,
    SequenceContext,
    a_sequence_from_run,
    attack_case1,
    b_sequence_from_run,
    build_case2_system,
    build_case3_system,
    case2_ground_truth,
    case3_ground_truth,
    case3_partial_key,
    solve_case2,
    solve_case3,
)
from .campaign import label_matches
from .case_detector import FaultedMachine, check_feature, detect_case
from .exceptions import (
    AttackFailureError,
    DomainError,
    InconsistentSystemError,
    InvalidInputError,
    IrreversibleRenewalError,
    UnknownCheckError,
    WrongCaseError,
)
from .fault_model import (
    CASE_POSITIONS,
    CaseLabel,
    FaultMask,
    Register,
    SingleUniform,
    case_probability,
    classify_case,
    sample_case_mask,
)
from .gf2_algebra import (
    certify_degree_at_least,
    gaussian_eliminate,
    symbolic_keystream_degrees,
)
from .reports import CheckReport
from .trivium_core import (
    INIT_ROUNDS,
    STATE_SIZE,
    Iv,
    Key,
    Keystream,
    MachineVariant,
    State,
    case5_settle_time,
    degrade,
    degraded_inverse,
    degraded_keystream,
    degraded_update,
    initialize,
    keystream,
    recover_key_from_case5_state,
    state_trajectory,
    state_update,
)

logger = logging.getLogger(__name__)

# Keystream bits compared by the equivalence and invariance checks
COMPARE_BITS = 600

# Time from which the Case 5 check rewinds the degraded machine to time 14
CASE5_REWIND_FROM = 500

# Keystream steps simulated by the degree-profile checks
SYMBOLIC_STEPS = 230

# z66 picks up s175*s176 and s286*s287 from the first t2 and t3 (0-based indices)
FIRST_QUADRATIC_BIT = 66
QUADRATIC_WITNESS_VARIABLES = (174, 175, 285, 286)

TrialBody = Callable[[Key, FaultMask, Dict[str, Any]], Optional[str]]
CheckFn = Callable[[np.random.Generator, int], CheckReport]


@dataclass(frozen=True)
class Check:
    """One catalog entry."""

    check_id: str
    description: str
    run: CheckFn
    symbolic: bool = False


CHECKS: Dict[str, Check] = {}


def _count(details: Dict[str, Any], name: str, amount: int = 1) -> None:
    details[name] = details.get(name, 0) + amount


def trial_check(
    check_id: str,
    description: str,
    case: Optional[CaseLabel] = None,
    masks: Optional[Callable[[np.random.Generator], FaultMask]] = None,
) -> Callable[[TrialBody], TrialBody]:
    """
    Register a per-trial check.

    Each trial draws a random key and a mask (from ``masks``, else a single
    position of ``case``) and calls the body, which returns a description of
    the violation or None.
    """

    def register(body: TrialBody) -> TrialBody:
        def run(rng: np.random.Generator, trials: int) -> CheckReport:
            details: Dict[str, Any] = {}
            for index in range(trials):
                key = Key.random(rng)
                if masks is not None:
                    mask = masks(rng)
                else:
                    assert case is not None
                    mask = sample_case_mask(case, rng)
                problem = body(key, mask, details)
                if problem is not None:
                    counterexample = f"key={key.to_hex()} mask={mask}: {problem}"
                    logger.warning(f"{check_id} failed: {counterexample}")
                    return CheckReport(
                        check_id=check_id,
                        passed=False,
                        trials=index + 1,
                        counterexample=counterexample,
                        details=details,
                    )
            return CheckReport(
                check_id=check_id, passed=True, trials=trials, details=details
            )

        CHECKS[check_id] = Check(check_id, description, run)
        return body

    return register


WholeBody = Callable[[np.random.Generator, int], Tuple[Optional[str], Dict[str, Any]]]


def whole_check(
    check_id: str, description: str, symbolic: bool = False
) -> Callable[[WholeBody], WholeBody]:
    """Register a check that runs once over the whole trial budget."""

    def register(body: WholeBody) -> WholeBody:
        def run(rng: np.random.Generator, trials: int) -> CheckReport:
            problem, details = body(rng, trials)
            if problem is not None:
                logger.warning(f"{check_id} failed: {problem}")
            return CheckReport(
                check_id=check_id,
                passed=problem is None,
                trials=1 if symbolic else trials,
                counterexample=problem,
                details=details,
            )

        CHECKS[check_id] = Check(check_id, description, run, symbolic)
        return body

    return register


def list_checks() -> List[Check]:
    return [CHECKS[name] for name in CHECKS]


def run_check(check_id: str, trials: int, seed: int) -> CheckReport:
    """
    Run one catalog check with its own generator seeded from ``seed``.

    Raises:
        UnknownCheckError: If ``check_id`` is not in the catalog.
        InvalidInputError: If ``trials`` is below 1.
    """
    if check_id not in CHECKS:
        raise UnknownCheckError(
            f"Unknown check {check_id!r}", {"known": ",".join(CHECKS)}
        )
    if trials < 1:
        raise InvalidInputError("Checks need at least one trial", {"trials": trials})
    logger.info(f"Running {check_id} with {trials} trial(s), seed {seed}")
    return CHECKS[check_id].run(np.random.default_rng(seed), trials)


# Simulation helpers


def _trajectory(
    key: Key, mask: FaultMask, until: int, iv: Optional[Iv] = None
) -> List[State]:
    return state_trajectory(key, iv or Iv.zero(), mask, until)


def _case5_iv(key: Key) -> Iv:
    # IV80 sits at s173, so mask 172 settles at m = 5 when it is set
    return Iv.zero().with_bit(80, key.bit(80))


def _run_from(
    bits: Sequence[int], time: int, mask: FaultMask, until: int
) -> List[State]:
    """States from an arbitrary (possibly changed) state at ``time`` to ``until``."""
    states = [State(tuple(bits), time)]
    while states[-1].time < until:
        states.append(state_update(states[-1], mask))
    return states


def _keystream_from(
    bits: Sequence[int], time: int, mask: FaultMask, n: int
) -> Keystream:
    state = State(tuple(bits), time)
    while state.time < INIT_ROUNDS:
        state = state_update(state, mask)
    return keystream(state, mask, n)


def _faulted_keystream(
    key: Key, mask: FaultMask, n: int, iv: Optional[Iv] = None
) -> Keystream:
    return keystream(initialize(key, iv or Iv.zero(), mask), mask, n)


def _register1_at_27(key: Key) -> Tuple[int, ...]:
    """(k43..k66, k67+1, k68+1, k69, k1..k66): s(27,1..93) in Cases 1 and 2."""
    head = [key.bit(i) for i in range(43, 67)]
    middle = [key.bit(67) ^ 1, key.bit(68) ^ 1, key.bit(69)]
    return tuple(head + middle + [key.bit(i) for i in range(1, 67)])


def _key_or_zero(key: Key, index: int) -> int:
    return key.bit(index) if index <= 80 else 0


def _first_difference(
    actual: Sequence[int], expected: Sequence[int], first: int
) -> Optional[str]:
    for offset, (got, want) in enumerate(zip(actual, expected)):
        if got != want:
            return f"position {first + offset} is {got}, expected {want}"
    return None


def _profile_problem(
    degrees: Sequence[int], profile: Dict[int, Tuple[int, int]]
) -> Optional[str]:
    last = max(span[1] for span in profile.values())
    for index, degree in enumerate(degrees):
        if index > last:
            if degree < 4:
                return f"z{index} has degree {degree}, expected at least 4"
            continue
        want = next(d for d, (lo, hi) in profile.items() if lo <= index <= hi)
        if degree != want:
            return f"z{index} has degree {degree}, expected {want}"
    return None



def _clean_output_bit(index: int) -> Callable[[Sequence[int]], int]:
    def evaluate(point: Sequence[int]) -> int:
        state = State(tuple(point), INIT_ROUNDS)
        return keystream(state, None, index + 1)[index]

    return evaluate


def _quadratic_witness_problem(rng: np.random.Generator) -> Optional[str]:
    """Cross-check the symbolic profile on the simulator with a cube sum."""
    evaluate = _clean_output_bit(FIRST_QUADRATIC_BIT)
    if certify_degree_at_least(
        evaluate, QUADRATIC_WITNESS_VARIABLES, STATE_SIZE, 2, rng
    ):
        return None
    return f"no quadratic witness for z{FIRST_QUADRATIC_BIT} on the simulator"

# Case 1


@whole_check(
    "lemma1",
    "Clean keystream degrees: linear to z65, quadratic to z147, cubic to z213",
    symbolic=True,
)
def _clean_degrees(
    rng: np.random.Generator, trials: int
) -> Tuple[Optional[str], Dict[str, Any]]:
    degrees = symbolic_keystream_degrees(MachineVariant.CLEAN, SYMBOLIC_STEPS)
    profile = DEGREE_PROFILES[MachineVariant.CLEAN]
    problem = _profile_problem(degrees, profile) or _quadratic_witness_problem(rng)
    return problem, {"steps": SYMBOLIC_STEPS}


@trial_check(
    "lemma2",
    "Case 1 state at time 27: register 1 window and zero registers 2 and 3",
    case=CaseLabel.CASE1,
)
def _case1_time27(key: Key, mask: FaultMask, details: Dict[str, Any]) -> Optional[str]:
    s27 = _trajectory(key, mask, 27)[27]
    problem = _first_difference(s27.window(1, 93), _register1_at_27(key), 1)
    if problem is not None:
        return problem
    return _first_difference(s27.window(162, 288), (0,) * 127, 162)


@trial_check(
    "lemma3",
    "Case 1 from time 27: register 1 rotates with period 69, 162..288 stay 0",
    case=CaseLabel.CASE1,
)
def _case1_rotation(
    key: Key, mask: FaultMask, details: Dict[str, Any]
) -> Optional[str]:
    states = _trajectory(key, mask, 27 + 300)
    for t in range(27, 27 + 300):
        now, nxt = states[t], states[t + 1]
        if nxt.bit(1) != now.bit(69):
            return f"s({t + 1},1) differs from s({t},69)"
        if now.window(70, 93) != now.window(1, 24):
            return f"s({t},70..93) differs from s({t},1..24)"
        if any(now.window(162, 288)):
            return f"s({t},162..288) is not zero"
    return None


@trial_check(
    "prop1",
    "Case 1 keystream has period 69 and the attack is sound with rank 66",
    case=CaseLabel.CASE1,
)
def _case1_attack(key: Key, mask: FaultMask, details: Dict[str, Any]) -> Optional[str]:
    ks = _faulted_keystream(key, mask, 2 * CASE1_PERIOD)
    if not ks.has_period(CASE1_PERIOD):
        return "keystream is not 69-periodic"
    knowledge = attack_case1(ks)
    rank = knowledge.diagnostics["rank_observed"]
    if rank != 66:
        return f"rank {rank}, expected 66"
    problems = knowledge.contradictions(key)
    if problems:
        return problems[0]
    _count(details, "relations", len(knowledge.relations))
    return None


# Case 2


@trial_check(
    "lemma4",
    "Case 2 state at time 27: register 1 window, register 2 key expressions",
    case=CaseLabel.CASE2,
)
def _case2_time27(key: Key, mask: FaultMask, details: Dict[str, Any]) -> Optional[str]:
    s27 = _trajectory(key, mask, 27)[27]
    problem = _first_difference(s27.window(1, 93), _register1_at_27(key), 1)
    if problem is not None:
        return problem
    expected = [
        key.bit(40 + d)
        ^ (_key_or_zero(key, 65 + d) & _key_or_zero(key, 66 + d))
        ^ _key_or_zero(key, 67 + d)
        for d in range(15)
    ]
    expected += [key.bit(i) for i in range(55, 67)] + [0] * 57
    return _first_difference(s27.window(94, 177), expected, 94)


def _u_from_key(key: Key, position: int) -> int:
    """s(27, p) for p in 25..93, with p reduced mod 69 into that window."""
    p = 25 + (position - 25) % CASE1_PERIOD
    return _register1_at_27(key)[p - 1]


@trial_check(
    "lemma5",
    "Case 2 a-sequence: period 69 from a28 and the closed form of a28..a96",
    case=CaseLabel.CASE2,
)
def _case2_a_sequence(
    key: Key, mask: FaultMask, details: Dict[str, Any]
) -> Optional[str]:
    a = a_sequence_from_run(key, mask, SequenceContext.CASE2)
    for i in range(69):
        closed = (
            _u_from_key(key, 66 - i)
            ^ (_u_from_key(key, 91 - i) & _u_from_key(key, 92 - i))
            ^ _u_from_key(key, 93 - i)
        )
        if a.value(28 + i) != closed:
            return f"a{28 + i} is {a.value(28 + i)}, closed form gives {closed}"
    states = _trajectory(key, mask, 27 + 3 * CASE1_PERIOD)
    observed = [
        states[t].bit(66)
        ^ (states[t].bit(91) & states[t].bit(92))
        ^ states[t].bit(93)
        for t in range(27, len(states))
    ]
    for offset in range(len(observed) - CASE1_PERIOD):
        if observed[offset] != observed[offset + CASE1_PERIOD]:
            return f"a{28 + offset} differs from a{28 + offset + CASE1_PERIOD}"
    return None


def _case2_changed(key: Key, mask: FaultMask) -> Tuple[List[int], ASequence]:
    """Time-27 state with s172..177 replaced by s(27,94+d) + a_{96-d}."""
    a = a_sequence_from_run(key, mask, SequenceContext.CASE2)
    bits = list(_trajectory(key, mask, 27)[27].bits)
    for d in range(6):
        bits[171 + d] = bits[93 + d] ^ a.value(96 - d)
    return bits, a


@trial_check(
    "lemma6",
    "Case 2 changed time-27 state produces the same keystream",
    case=CaseLabel.CASE2,
)
def _case2_changed_keystream(
    key: Key, mask: FaultMask, details: Dict[str, Any]
) -> Optional[str]:
    bits, _ = _case2_changed(key, mask)
    changed = _keystream_from(bits, 27, mask, COMPARE_BITS)
    real = _faulted_keystream(key, mask, COMPARE_BITS)
    return _first_difference(changed.bits, real.bits, 0)


@trial_check(
    "lemma7",
    "Case 2 changed state: s(t+78,j) = s(t,j) + a_(t+172-j) on register 2",
    case=CaseLabel.CASE2,
)
def _case2_step78(key: Key, mask: FaultMask, details: Dict[str, Any]) -> Optional[str]:
    bits, a = _case2_changed(key, mask)
    states = _run_from(bits, 27, mask, 27 + 78 + 150)
    for t in range(27, 27 + 150):
        early, late = states[t - 27], states[t + 78 - 27]
        for j in range(94, 178):
            if late.bit(j) != early.bit(j) ^ a.value(t + 172 - j):
                return f"s({t + 78},{j}) breaks the 78-step relation"
    return None


@trial_check(
    "lemma8",
    "Case 2 changed state: 1794-step relation and period 3588 on registers 1-2",
    case=CaseLabel.CASE2,
)
def _case2_long_period(
    key: Key, mask: FaultMask, details: Dict[str, Any]
) -> Optional[str]:
    bits, a = _case2_changed(key, mask)
    states = _run_from(bits, 27, mask, 33 + 40 + CASE2_PERIOD)
    half = CASE2_PERIOD // 2
    for t in range(27, 27 + 12):
        early, late = states[t - 27], states[t + half - 27]
        for j in range(94, 178):
            total = 0
            for m in range(23):
                total ^= a.value(t + 34 - j + 3 * m)
            if late.bit(j) != early.bit(j) ^ total:
                return f"s({t + half},{j}) breaks the {half}-step relation"
    for t in range(33, 33 + 40):
        early, late = states[t - 27], states[t + CASE2_PERIOD - 27]
        if late.window(1, 177) != early.window(1, 177):
            return f"s({t},1..177) does not repeat after {CASE2_PERIOD} steps"
    return None


@trial_check(
    "prop2-period",
    "Case 2 keystream has period 3588",
    case=CaseLabel.CASE2,
)
def _case2_period(key: Key, mask: FaultMask, details: Dict[str, Any]) -> Optional[str]:
    ks = _faulted_keystream(key, mask, 2 * CASE2_PERIOD)
    if not ks.has_period(CASE2_PERIOD):
        return "keystream is not 3588-periodic"
    # How often 3358 holds as well
    if ks.has_period(3358):
        _count(details, "also_3358_periodic")
    return None


@trial_check(
    "prop2-rank",
    "Case 2 system accepts the ground truth and has rank at most 210",
    case=CaseLabel.CASE2,
)
def _case2_rank(key: Key, mask: FaultMask, details: Dict[str, Any]) -> Optional[str]:
    ks = _faulted_keystream(key, mask, 2 * CASE2_PERIOD)
    system = build_case2_system(ks)
    if not system.satisfied_by(case2_ground_truth(key, mask)):
        return "ground-truth assignment violates the keystream system"
    try:
        rank = gaussian_eliminate(system).rank
    except InconsistentSystemError:
        return "keystream system is inconsistent"
    if rank > EXPECTED_RANKS["case2"]:
        return f"rank {rank} above {EXPECTED_RANKS['case2']}"
    ranks = details.setdefault("ranks", [])
    if rank not in ranks:
        ranks.append(rank)
    return None


@trial_check(
    "prop2-attack",
    "Case 2 attack recovers the exact key",
    case=CaseLabel.CASE2,
)
def _case2_exact_key(
    key: Key, mask: FaultMask, details: Dict[str, Any]
) -> Optional[str]:
    ks = _faulted_keystream(key, mask, 2 * CASE2_PERIOD)
    try:
        recovered = solve_case2(ks).full_key()
    except (AttackFailureError, WrongCaseError) as exc:
        return str(exc)
    if recovered != key:
        return "recovered key differs from the true key"
    return None


# Case 3


@trial_check(
    "lemma9",
    "Case 3: register 1 tail dies by time 92, register 2 rotates with period 78",
    case=CaseLabel.CASE3,
)
def _case3_register2(
    key: Key, mask: FaultMask, details: Dict[str, Any]
) -> Optional[str]:
    states = _trajectory(key, mask, 98 + 78 + 200)
    for t in range(92, len(states)):
        if any(states[t].window(66, 93)):
            return f"s({t},66..93) is not zero"
    for t in range(98, 98 + 200):
        if states[t].window(172, 177) != states[t].window(94, 99):
            return f"s({t},172..177) differs from s({t},94..99)"
        if states[t + 78].window(94, 177) != states[t].window(94, 177):
            return f"register 2 at time {t} does not repeat after 78 steps"
    return None


def _b_bit(state: State) -> int:
    return state.bit(162) ^ (state.bit(175) & state.bit(176)) ^ state.bit(177)


@trial_check(
    "lemma10",
    "Case 3: s(t+1,178) = s(t,264) + b_(t+1) and b has period 78",
    case=CaseLabel.CASE3,
)
def _case3_register3(
    key: Key, mask: FaultMask, details: Dict[str, Any]
) -> Optional[str]:
    states = _trajectory(key, mask, 98 + 78 + 200)
    b = [_b_bit(s) for s in states]
    for t in range(98, 98 + 200):
        if states[t + 1].bit(178) != states[t].bit(264) ^ b[t]:
            return f"s({t + 1},178) breaks the register-3 recursion"
        if b[t + 78] != b[t]:
            return f"b{t + 1} differs from b{t + 79}"
    return None


def _case3_changed(key: Key, mask: FaultMask) -> Tuple[List[int], BSequence]:
    """Time-98 state with s265..288 replaced by s(98,178+d) + b_{98-d}."""
    b = b_sequence_from_run(key, mask)
    bits = list(_trajectory(key, mask, 98)[98].bits)
    for d in range(24):
        bits[264 + d] = bits[177 + d] ^ b.value(98 - d)
    return bits, b


@trial_check(
    "lemma11",
    "Case 3 changed time-98 state produces the same keystream",
    case=CaseLabel.CASE3,
)
def _case3_changed_keystream(
    key: Key, mask: FaultMask, details: Dict[str, Any]
) -> Optional[str]:
    bits, _ = _case3_changed(key, mask)
    changed = _keystream_from(bits, 98, mask, COMPARE_BITS)
    real = _faulted_keystream(key, mask, COMPARE_BITS)
    return _first_difference(changed.bits, real.bits, 0)


@trial_check(
    "lemma12",
    "Case 3 changed state: s(t+87,j) = s(t,j) + b_(t+265-j) on register 3",
    case=CaseLabel.CASE3,
)
def _case3_step87(key: Key, mask: FaultMask, details: Dict[str, Any]) -> Optional[str]:
    bits, b = _case3_changed(key, mask)
    states = _run_from(bits, 98, mask, 98 + 87 + 150)
    for t in range(98, 98 + 150):
        early, late = states[t - 98], states[t + 87 - 98]
        for j in range(178, STATE_SIZE + 1):
            if late.bit(j) != early.bit(j) ^ b.value(t + 265 - j):
                return f"s({t + 87},{j}) breaks the 87-step relation"
    return None


@trial_check(
    "lemma13",
    "Case 3 changed state: 2262-step relation and period 4524 on registers 2-3",
    case=CaseLabel.CASE3,
)
def _case3_long_period(
    key: Key, mask: FaultMask, details: Dict[str, Any]
) -> Optional[str]:
    bits, b = _case3_changed(key, mask)
    states = _run_from(bits, 98, mask, 122 + 40 + CASE3_PERIOD)
    half = CASE3_PERIOD // 2
    for t in range(98, 98 + 12):
        early, late = states[t - 98], states[t + half - 98]
        for j in range(178, STATE_SIZE + 1):
            total = 0
            for m in range(26):
                total ^= b.value(t + 31 - j + 3 * m)
            if late.bit(j) != early.bit(j) ^ total:
                return f"s({t + half},{j}) breaks the {half}-step relation"
    for t in range(122, 122 + 40):
        early, late = states[t - 98], states[t + CASE3_PERIOD - 98]
        if late.window(94, STATE_SIZE) != early.window(94, STATE_SIZE):
            return f"s({t},94..288) does not repeat after {CASE3_PERIOD} steps"
    return None


@trial_check(
    "lemma14",
    "Case 3 state at time 98 in terms of a1..a92, with the zero block 207..288",
    case=CaseLabel.CASE3,
)
def _case3_time98(key: Key, mask: FaultMask, details: Dict[str, Any]) -> Optional[str]:
    a = a_sequence_from_run(key, mask, SequenceContext.CASE3)
    s98 = _trajectory(key, mask, 98)[98]
    register2 = [a.value(98 - j) ^ a.value(20 - j) for j in range(84)]
    problem = _first_difference(s98.window(94, 177), register2, 94)
    if problem is not None:
        return problem
    register3 = [
        a.value(29 - j) ^ (a.value(16 - j) & a.value(15 - j)) ^ a.value(14 - j)
        for j in range(29)
    ]
    problem = _first_difference(s98.window(178, 206), register3, 178)
    if problem is not None:
        return problem
    return _first_difference(s98.window(207, 288), (0,) * 82, 207)


@trial_check(
    "prop3-period",
    "Case 3 keystream has period 4524",
    case=CaseLabel.CASE3,
)
def _case3_period(key: Key, mask: FaultMask, details: Dict[str, Any]) -> Optional[str]:
    ks = _faulted_keystream(key, mask, 2 * CASE3_PERIOD)
    if not ks.has_period(CASE3_PERIOD):
        return "keystream is not 4524-periodic"
    return None


@trial_check(
    "prop3-rank",
    "Case 3 system accepts the ground truth and has rank at most 237",
    case=CaseLabel.CASE3,
)
def _case3_rank(key: Key, mask: FaultMask, details: Dict[str, Any]) -> Optional[str]:
    ks = _faulted_keystream(key, mask, 2 * CASE3_PERIOD)
    system = build_case3_system(ks)
    if not system.satisfied_by(case3_ground_truth(key, mask)):
        return "ground-truth assignment violates the keystream system"
    try:
        rank = gaussian_eliminate(system).rank
    except InconsistentSystemError:
        return "keystream system is inconsistent"
    if rank > EXPECTED_RANKS["case3"]:
        return f"rank {rank} above {EXPECTED_RANKS['case3']}"
    ranks = details.setdefault("ranks", [])
    if rank not in ranks:
        ranks.append(rank)
    return None


@trial_check(
    "prop3-attack",
    "Case 3 attack recovers the true a-sequence and sound key knowledge",
    case=CaseLabel.CASE3,
)
def _case3_attack(key: Key, mask: FaultMask, details: Dict[str, Any]) -> Optional[str]:
    ks = _faulted_keystream(key, mask, 2 * CASE3_PERIOD)
    try:
        a, knowledge = solve_case3(ks)
    except (AttackFailureError, WrongCaseError) as exc:
        return str(exc)
    if a != a_sequence_from_run(key, mask, SequenceContext.CASE3):
        return "recovered a-sequence differs from the true one"
    problems = knowledge.contradictions(key)
    if problems:
        return problems[0]
    _count(details, "bits_known", knowledge.bits_known)
    return None


@trial_check(
    "prop4",
    "Case 3 prefix trigger: key bits read from a1..a12 are correct",
    case=CaseLabel.CASE3,
)
def _case3_prefix(key: Key, mask: FaultMask, details: Dict[str, Any]) -> Optional[str]:
    knowledge = case3_partial_key(a_sequence_from_run(key, mask, SequenceContext.CASE3))
    if "prefix_trigger" not in knowledge.diagnostics:
        _count(details, "untriggered")
        return None
    _count(details, "triggered")
    for index, value in sorted(knowledge.known.items()):
        if "prefix" in knowledge.provenance[index] and key.bit(index) != value:
            return f"k{index} claimed {value} by the prefix trigger"
    return None


def _case3_masks_with_93(rng: np.random.Generator) -> FaultMask:
    mask = sample_case_mask(CaseLabel.CASE3, rng)
    if rng.random() < 0.5:
        return FaultMask.of(set(mask.positions) | {93})
    return mask


@trial_check(
    "prop5",
    "Case 3 tail trigger: k55..k66, the a13 relation and the matching branch hold",
    masks=_case3_masks_with_93,
)
def _case3_tail(key: Key, mask: FaultMask, details: Dict[str, Any]) -> Optional[str]:
    knowledge = case3_partial_key(a_sequence_from_run(key, mask, SequenceContext.CASE3))
    if "tail_trigger" not in knowledge.diagnostics:
        _count(details, "untriggered")
        return None
    _count(details, "triggered")
    for relation in knowledge.relations:
        if not relation.holds(key):
            return f"relation violated: {relation}"
    for index, value in sorted(knowledge.known.items()):
        if key.bit(index) != value:
            return f"k{index} claimed {value}"
    branch = "position 93 faulted" if 93 in mask else "position 93 live"
    for name, group in knowledge.alternatives:
        if name == branch:
            broken = [r for r in group if not r.holds(key)]
            if broken:
                return f"[{name}] relation violated: {broken[0]}"
    return None


# Cases 4..6


def _degraded_problem(
    key: Key,
    mask: FaultMask,
    variant: MachineVariant,
    m: Optional[int] = None,
    iv: Optional[Iv] = None,
) -> Optional[str]:
    full = initialize(key, iv or Iv.zero(), mask)
    degraded = degrade(full, variant, m)
    problem = _first_difference(
        degraded_keystream(degraded, COMPARE_BITS).bits,
        keystream(full, mask, COMPARE_BITS).bits,
        0,
    )
    if problem is not None:
        return f"degraded keystream: {problem}"
    if variant.reversible and degraded_inverse(degraded_update(degraded)) != degraded:
        return "inverse renewal does not undo the renewal"
    return None


def _iv_flip_invariant(key: Key, mask: FaultMask, positions: Sequence[int]) -> bool:
    iv = Iv.zero()
    for p in positions:
        iv = iv.with_bit(p, 1)
    base = _faulted_keystream(key, mask, 288)
    return _faulted_keystream(key, mask, 288, iv) == base


@trial_check(
    "prop6",
    "Case 4 degraded machine matches the faulted one; IV70 is invisible",
    case=CaseLabel.CASE4,
)
def _case4_machine(key: Key, mask: FaultMask, details: Dict[str, Any]) -> Optional[str]:
    problem = _degraded_problem(key, mask, MachineVariant.CASE4)
    if problem is not None:
        return problem
    if not check_feature(FaultedMachine(key, mask), 4):
        return "flipping IV70 changed the keystream"
    return None


@whole_check(
    "prop7",
    "Case 4 keystream degrees: linear to z65, quadratic to z159, cubic to z228",
    symbolic=True,
)
def _case4_degrees(
    rng: np.random.Generator, trials: int
) -> Tuple[Optional[str], Dict[str, Any]]:
    degrees = symbolic_keystream_degrees(MachineVariant.CASE4, SYMBOLIC_STEPS)
    profile = DEGREE_PROFILES[MachineVariant.CASE4]
    return _profile_problem(degrees, profile), {"steps": SYMBOLIC_STEPS}


@trial_check(
    "lemma15",
    "Register 1 bits shift unchanged until they reach a faulted position",
    case=CaseLabel.CASE3,
)
def _register1_shift(
    key: Key, mask: FaultMask, details: Dict[str, Any]
) -> Optional[str]:
    states = _trajectory(key, mask, 93)
    for j in range(1, 94):
        for m in range(0, 94 - j):
            if any(p in mask for p in range(j, j + m + 1)):
                break
            if states[m].bit(j + m) != states[0].bit(j):
                return f"s({m},{j + m}) differs from s(0,{j})"
    return None


@trial_check(
    "lemma16",
    "Case 5: (s176, s177) is (0, 0) from time 5 on",
    case=CaseLabel.CASE5,
)
def _case5_settle(key: Key, mask: FaultMask, details: Dict[str, Any]) -> Optional[str]:
    iv = _case5_iv(key)
    try:
        m = case5_settle_time(key, iv, mask)
    except DomainError as exc:
        return str(exc)
    for state in _trajectory(key, mask, 300, iv)[5:]:
        if state.bit(176) or state.bit(177):
            return f"(s176, s177) is non-zero at time {state.time}"
    settle = details.setdefault("settle_times", {})
    settle[str(m)] = settle.get(str(m), 0) + 1
    return None


@trial_check(
    "lemma17",
    "Case 5: s(t,162+i) + s(t,177+i) + s(t,264+i) = 0 for t >= m+i",
    case=CaseLabel.CASE5,
)
def _case5_relation(
    key: Key, mask: FaultMask, details: Dict[str, Any]
) -> Optional[str]:
    iv = _case5_iv(key)
    m = case5_settle_time(key, iv, mask)
    states = _trajectory(key, mask, 300, iv)
    for i in range(1, 10):
        for state in states[m + i :]:
            if state.bit(162 + i) ^ state.bit(177 + i) ^ state.bit(264 + i):
                return f"relation for i={i} fails at time {state.time}"
    return None


@trial_check(
    "prop8",
    "Case 5 degraded machine matches the faulted one and yields the key at time 14",
    case=CaseLabel.CASE5,
)
def _case5_machine(key: Key, mask: FaultMask, details: Dict[str, Any]) -> Optional[str]:
    iv = _case5_iv(key)
    m = case5_settle_time(key, iv, mask)
    problem = _degraded_problem(key, mask, MachineVariant.CASE5, m, iv)
    if problem is not None:
        return problem
    states = _trajectory(key, mask, CASE5_REWIND_FROM, iv)
    at14 = degrade(states[14], MachineVariant.CASE5, m)
    state = degrade(states[-1], MachineVariant.CASE5, m)
    while state.time > 14:
        state = degraded_inverse(state)
    if state != at14:
        return f"rewinding from time {CASE5_REWIND_FROM} misses the time-14 state"
    knowledge = recover_key_from_case5_state(at14, m)
    problems = knowledge.contradictions(key)
    if problems:
        return problems[0]
    expected_bits = 80 if m < 5 else 79
    if knowledge.bits_known != expected_bits:
        return f"{knowledge.bits_known} key bits read, expected {expected_bits}"
    if not check_feature(FaultedMachine(key, mask), 5):
        return "flipping IV79 changed the keystream"
    return None


@whole_check(
    "prop9",
    "Case 5 keystream degrees match the Case 4 profile",
    symbolic=True,
)
def _case5_degrees(
    rng: np.random.Generator, trials: int
) -> Tuple[Optional[str], Dict[str, Any]]:
    degrees = symbolic_keystream_degrees(MachineVariant.CASE5, SYMBOLIC_STEPS)
    profile = DEGREE_PROFILES[MachineVariant.CASE5]
    return _profile_problem(degrees, profile), {"steps": SYMBOLIC_STEPS}


@trial_check(
    "prop10",
    "Case 6 degraded machine matches the faulted one, is irreversible, and "
    "hides IV79 and IV80",
    case=CaseLabel.CASE6,
)
def _case6_machine(key: Key, mask: FaultMask, details: Dict[str, Any]) -> Optional[str]:
    problem = _degraded_problem(key, mask, MachineVariant.CASE6)
    if problem is not None:
        return problem
    degraded = degrade(initialize(key, Iv.zero(), mask), MachineVariant.CASE6)
    try:
        degraded_inverse(degraded)
    except IrreversibleRenewalError:
        pass
    else:
        return "inverse renewal did not refuse the Case 6 machine"
    for positions in ((79,), (80,)):
        if not _iv_flip_invariant(key, mask, positions):
            return f"flipping IV{positions[0]} changed the keystream"
    if not _iv_flip_invariant(key, mask, (79, 80)):
        _count(details, "double_flip_visible")
    return None


# Detection, probabilities, propagation


_DETECTABLE = (
    CaseLabel.CASE1,
    CaseLabel.CASE2,
    CaseLabel.CASE3,
    CaseLabel.CASE4,
    CaseLabel.CASE5,
    CaseLabel.CASE6,
)


def _detectable_masks(rng: np.random.Generator) -> FaultMask:
    case = _DETECTABLE[int(rng.integers(len(_DETECTABLE)))]
    return sample_case_mask(case, rng)


@trial_check(
    "features",
    "The detector names Cases 1..4 exactly and Cases 5/6 as Case5 or Case5or6",
    masks=_detectable_masks,
)
def _detector(key: Key, mask: FaultMask, details: Dict[str, Any]) -> Optional[str]:
    truth = classify_case(mask)
    result = detect_case(FaultedMachine(key, mask))
    _count(details, truth.value)
    if not label_matches(truth.value, result.label.value):
        return f"{truth.value} detected as {result.label.value}"
    return None


@whole_check(
    "probabilities",
    "Single-fault case probabilities: exact fractions and a seeded estimate",
)
def _probabilities(
    rng: np.random.Generator, trials: int
) -> Tuple[Optional[str], Dict[str, Any]]:
    exact = case_probability(SingleUniform())
    details: Dict[str, Any] = {
        label.value: str(p.exact) for label, p in exact.items()
    }
    total = sum((p.exact or Fraction(0) for p in exact.values()), Fraction(0))
    if total != 1:
        return f"case probabilities sum to {total}", details
    for label, p in exact.items():
        if p.exact != Fraction(len(CASE_POSITIONS[label]), STATE_SIZE):
            return f"{label.value} has probability {p.exact}", details
    samples = max(trials, 10_000)
    model = SingleUniform()
    counts = {label: 0 for label in exact}
    for _ in range(samples):
        counts[classify_case(model.sample(rng))] += 1
    details["samples"] = samples
    for label, p in exact.items():
        estimate = counts[label] / samples
        sigma = (p.estimate * (1.0 - p.estimate) / samples) ** 0.5
        if abs(estimate - p.estimate) > 4 * sigma + 1.0 / samples:
            problem = f"{label.value} estimated {estimate:.5f} vs {p.estimate:.5f}"
            return problem, details
    return None, details


def _any_single_mask(rng: np.random.Generator) -> FaultMask:
    return FaultMask.of([int(rng.integers(1, STATE_SIZE + 1))])


@trial_check(
    "propagation",
    "A fault at j zeroes s(t,j+m) for m up to min(register end - j, t)",
    masks=_any_single_mask,
)
def _propagation(key: Key, mask: FaultMask, details: Dict[str, Any]) -> Optional[str]:
    j = mask.p_low
    end = Register.of(j).positions[-1]
    states = _trajectory(key, mask, 300)
    for t, state in enumerate(states):
        for m in range(min(end - j, t) + 1):
            if state.bit(j + m):
                return f"s({t},{j + m}) is 1"
    return None
